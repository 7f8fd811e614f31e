#pragma once

#include "lendscore/models/model.hpp"

#include <utility>
#include <vector>

namespace lendscore::models {

struct MlpSpec {
  std::vector<int> hidden{200, 100, 40};  // output layer of 1 is implicit
  int epochs = 100;
  int batch_size = 100;
  double validation_split = 0.3;
  int patience = 10;
  double alpha = 0.002;  // Adamax step size
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  bool zero_init = false;  // test hook: all-zero weights, network outputs 0.5

  void validate() const;
};

/// Dense ReLU network with a sigmoid output unit trained on mean binary
/// cross-entropy. Weight matrices are (out x in); a batch forward pass is
/// A_{l} = act(A_{l-1} W_l^T + b_l).
class MlpModel final : public Model {
 public:
  MlpModel(std::vector<Matrix> weights, std::vector<Vector> biases);

  /// Fan-in scaled uniform init, U(-sqrt(3/fan_in), sqrt(3/fan_in)), seeded.
  static MlpModel initialized(std::size_t input_dim, const std::vector<int>& hidden,
                              std::uint64_t seed, bool zero_init);

  std::string variant() const override { return "mlp"; }
  std::size_t dimension() const override { return input_dim_; }
  Vector predict_proba(const Matrix& X) const override;
  std::string to_json_text() const override;

  Vector forward_logits(const Matrix& X) const;
  double loss_on(const Matrix& X, const Vector& y) const;

  struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
  };
  /// Analytic gradients of the mean binary cross-entropy at the current
  /// parameters (checked against finite differences in the test suite).
  Gradients gradients_on(const Matrix& X, const Vector& y) const;

  std::vector<Matrix>& weights() { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }

  /// (train loss, validation loss) per epoch actually run.
  const std::vector<std::pair<double, double>>& epoch_trace() const { return epoch_trace_; }
  void set_epoch_trace(std::vector<std::pair<double, double>> trace) {
    epoch_trace_ = std::move(trace);
  }

 private:
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  std::size_t input_dim_ = 0;
  std::vector<std::pair<double, double>> epoch_trace_;
};

ModelPtr fit_mlp(const data::Dataset& ds, const MlpSpec& spec);

}  // namespace lendscore::models
