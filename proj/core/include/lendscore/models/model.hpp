#pragma once

#include "lendscore/common.hpp"
#include "lendscore/data.hpp"

#include <memory>
#include <string>

namespace lendscore::models {

/// Numerically stable logistic function; saturates cleanly for large |x|.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

/// Uniform contract over the eight classifier families: fitted parameters
/// plus a pure per-row P(y = 1) scorer and JSON serialization.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string variant() const = 0;
  virtual std::size_t dimension() const = 0;

  /// Per-row P(y=1), each in [0,1]; row order preserving, no mutation.
  /// Throws ModelError when cols(X) does not match the fitted dimension.
  virtual Vector predict_proba(const Matrix& X) const = 0;

  virtual std::string to_json_text() const = 0;

 protected:
  void check_dimension(const Matrix& X) const {
    if (static_cast<std::size_t>(X.cols()) != dimension()) {
      throw ModelError(variant() + ": expected " + std::to_string(dimension()) +
                       " feature columns, got " + std::to_string(X.cols()));
    }
  }
};

using ModelPtr = std::unique_ptr<Model>;

}  // namespace lendscore::models
