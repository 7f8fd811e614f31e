#pragma once

#include "lendscore/models/model.hpp"

#include <array>

namespace lendscore::models {

struct LdaSpec {
  double ridge = 1e-6;  // fallback ridge when the pooled covariance is singular

  void validate() const;
};

struct QdaSpec {
  double ridge = 1e-6;  // always-on ridge, scaled by tr(Sigma_k)/d

  void validate() const;
};

/// Gaussian class-conditional parameters shared by LDA and QDA. LDA stores
/// the pooled covariance in both slots.
struct GaussianClassParams {
  std::array<Vector, 2> means;
  std::array<Matrix, 2> covariances;
  std::array<double, 2> priors{0.5, 0.5};
};

class DiscriminantModel final : public Model {
 public:
  DiscriminantModel(GaussianClassParams params, bool quadratic, double ridge);

  std::string variant() const override { return quadratic_ ? "qda" : "lda"; }
  std::size_t dimension() const override { return static_cast<std::size_t>(params_.means[0].size()); }
  Vector predict_proba(const Matrix& X) const override;
  std::string to_json_text() const override;

  const GaussianClassParams& params() const { return params_; }

  /// Quadratic discriminant score delta_k(x):
  ///   -0.5 log|Sigma_k| - 0.5 (x-mu_k)^T Sigma_k^{-1} (x-mu_k) + log pi_k
  double discriminant(const Vector& x, int k) const;

 private:
  GaussianClassParams params_;
  bool quadratic_ = false;
  double ridge_ = 0.0;
  std::array<Eigen::LLT<Matrix>, 2> chol_;
  std::array<double, 2> log_det_{0.0, 0.0};
};

ModelPtr fit_lda(const data::Dataset& ds, const LdaSpec& spec = {});
ModelPtr fit_qda(const data::Dataset& ds, const QdaSpec& spec = {});

/// Direct construction from parameters (also used by deserialization).
ModelPtr make_discriminant(GaussianClassParams params, bool quadratic, double ridge);

}  // namespace lendscore::models
