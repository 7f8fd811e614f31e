#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lendscore {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base of all lendscore exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration, CLI arguments, or malformed plan values. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (ragged CSV, empty dataset, ...). CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Model fitting or scoring failure (singular covariance, NaN loss, dimension mismatch).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Explanation failures (oracle size bound, singular surrogate system).
class ExplainError : public Error {
 public:
  using Error::Error;
};

/// Shortest decimal text that round-trips the exact double. Used for every
/// number we write to CSV or config echoes so reruns are byte-identical.
std::string format_double(double v);

/// Strict double parse of a whole cell. Returns nullopt on any trailing junk.
std::optional<double> parse_double(const std::string& s);

/// Strict integer parse of a whole cell.
std::optional<long long> parse_int(const std::string& s);

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace lendscore
