#pragma once

#include "lendscore/models/model.hpp"

namespace lendscore::models {

struct LogisticSpec {
  double lambda = 1e-3;  // L2 strength on w (bias unpenalized)
  double tol = 1e-6;     // gradient infinity-norm stop
  int max_iters = 5000;

  void validate() const;
};

class LogisticModel final : public Model {
 public:
  LogisticModel(Vector w, double b, double lambda, bool converged)
      : w_(std::move(w)), b_(b), lambda_(lambda), converged_(converged) {}

  std::string variant() const override { return "logistic_l2"; }
  std::size_t dimension() const override { return static_cast<std::size_t>(w_.size()); }
  Vector predict_proba(const Matrix& X) const override;
  std::string to_json_text() const override;

  const Vector& weights() const { return w_; }
  double bias() const { return b_; }
  bool converged() const { return converged_; }

 private:
  Vector w_;
  double b_ = 0.0;
  double lambda_ = 0.0;
  bool converged_ = false;
};

/// Full-batch gradient descent with backtracking line search on the penalized
/// mean binary cross-entropy. Deterministic; non-convergence is reported via
/// the model's converged() flag, never silently.
ModelPtr fit_logistic(const data::Dataset& ds, const LogisticSpec& spec);

}  // namespace lendscore::models
