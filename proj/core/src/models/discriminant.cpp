#include "lendscore/models/discriminant.hpp"

#include <json.hpp>

#include <cmath>

namespace lendscore::models {

using nlohmann::json;

void LdaSpec::validate() const {
  if (ridge < 0.0) throw ConfigError("lda: ridge must be >= 0");
}

void QdaSpec::validate() const {
  if (ridge < 0.0) throw ConfigError("qda: ridge must be >= 0");
}

namespace {

// Cholesky with a named error; the caller already applied any ridge.
Eigen::LLT<Matrix> factor_or_throw(const Matrix& cov, const std::string& who) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw ModelError("singular covariance for " + who + " even after ridge");
  }
  return llt;
}

double log_det_from_llt(const Eigen::LLT<Matrix>& llt) {
  double out = 0.0;
  const auto& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < L.rows(); ++i) out += std::log(L(i, i));
  return 2.0 * out;
}

}  // namespace

DiscriminantModel::DiscriminantModel(GaussianClassParams params, bool quadratic, double ridge)
    : params_(std::move(params)), quadratic_(quadratic), ridge_(ridge) {
  for (int k = 0; k < 2; ++k) {
    chol_[k] = factor_or_throw(params_.covariances[k], "class " + std::to_string(k));
    log_det_[k] = log_det_from_llt(chol_[k]);
  }
}

double DiscriminantModel::discriminant(const Vector& x, int k) const {
  const Vector centered = x - params_.means[static_cast<std::size_t>(k)];
  const Vector solved = chol_[static_cast<std::size_t>(k)].solve(centered);
  const double mahalanobis = centered.dot(solved);
  return -0.5 * log_det_[static_cast<std::size_t>(k)] - 0.5 * mahalanobis +
         std::log(params_.priors[static_cast<std::size_t>(k)]);
}

Vector DiscriminantModel::predict_proba(const Matrix& X) const {
  check_dimension(X);
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Vector x = X.row(i).transpose();
    const double d0 = discriminant(x, 0);
    const double d1 = discriminant(x, 1);
    out[i] = sigmoid(d1 - d0);
  }
  return out;
}

std::string DiscriminantModel::to_json_text() const {
  json j;
  j["format_version"] = 1;
  j["variant"] = variant();
  j["ridge"] = ridge_;
  for (int k = 0; k < 2; ++k) {
    const auto tag = "class" + std::to_string(k);
    const auto& mu = params_.means[static_cast<std::size_t>(k)];
    const auto& cov = params_.covariances[static_cast<std::size_t>(k)];
    j[tag]["mean"] = std::vector<double>(mu.data(), mu.data() + mu.size());
    j[tag]["prior"] = params_.priors[static_cast<std::size_t>(k)];
    json rows = json::array();
    for (Eigen::Index r = 0; r < cov.rows(); ++r) {
      rows.push_back(std::vector<double>(cov.row(r).begin(), cov.row(r).end()));
    }
    j[tag]["covariance"] = std::move(rows);
  }
  return j.dump();
}

ModelPtr make_discriminant(GaussianClassParams params, bool quadratic, double ridge) {
  return std::make_unique<DiscriminantModel>(std::move(params), quadratic, ridge);
}

namespace {

struct ClassSplit {
  std::array<std::vector<std::size_t>, 2> rows;
  std::size_t d = 0;
};

ClassSplit split_classes(const data::Dataset& ds, const char* who) {
  ClassSplit out;
  out.d = ds.cols();
  for (std::size_t i = 0; i < ds.y.size(); ++i) {
    out.rows[static_cast<std::size_t>(ds.y[i])].push_back(i);
  }
  for (int k = 0; k < 2; ++k) {
    if (out.rows[static_cast<std::size_t>(k)].size() < 2) {
      throw ModelError(std::string(who) + ": class " + std::to_string(k) +
                       " needs at least 2 rows");
    }
  }
  return out;
}

Vector class_mean(const data::Dataset& ds, const std::vector<std::size_t>& rows) {
  Vector mu = Vector::Zero(ds.X.cols());
  for (std::size_t r : rows) mu += ds.X.row(static_cast<Eigen::Index>(r)).transpose();
  return mu / static_cast<double>(rows.size());
}

Matrix scatter(const data::Dataset& ds, const std::vector<std::size_t>& rows, const Vector& mu) {
  Matrix s = Matrix::Zero(ds.X.cols(), ds.X.cols());
  for (std::size_t r : rows) {
    const Vector c = ds.X.row(static_cast<Eigen::Index>(r)).transpose() - mu;
    s.noalias() += c * c.transpose();
  }
  return s;
}

}  // namespace

ModelPtr fit_lda(const data::Dataset& ds, const LdaSpec& spec) {
  spec.validate();
  ds.validate();
  const auto split = split_classes(ds, "lda");
  GaussianClassParams params;
  Matrix pooled = Matrix::Zero(ds.X.cols(), ds.X.cols());
  for (int k = 0; k < 2; ++k) {
    const auto& rows = split.rows[static_cast<std::size_t>(k)];
    params.means[static_cast<std::size_t>(k)] = class_mean(ds, rows);
    params.priors[static_cast<std::size_t>(k)] =
        static_cast<double>(rows.size()) / static_cast<double>(ds.rows());
    pooled += scatter(ds, rows, params.means[static_cast<std::size_t>(k)]);
  }
  pooled /= static_cast<double>(ds.rows() - 2);

  // Try the plain pooled covariance first; ridge only as a fallback.
  Eigen::LLT<Matrix> probe(pooled);
  if (probe.info() != Eigen::Success) {
    const double scale = pooled.trace() / static_cast<double>(ds.X.cols());
    pooled += spec.ridge * scale * Matrix::Identity(ds.X.cols(), ds.X.cols());
  }
  params.covariances[0] = pooled;
  params.covariances[1] = std::move(pooled);
  try {
    return make_discriminant(std::move(params), false, spec.ridge);
  } catch (const ModelError&) {
    throw ModelError("lda: singular pooled covariance even after ridge");
  }
}

ModelPtr fit_qda(const data::Dataset& ds, const QdaSpec& spec) {
  spec.validate();
  ds.validate();
  const auto split = split_classes(ds, "qda");
  GaussianClassParams params;
  for (int k = 0; k < 2; ++k) {
    const auto& rows = split.rows[static_cast<std::size_t>(k)];
    params.means[static_cast<std::size_t>(k)] = class_mean(ds, rows);
    params.priors[static_cast<std::size_t>(k)] =
        static_cast<double>(rows.size()) / static_cast<double>(ds.rows());
    Matrix cov = scatter(ds, rows, params.means[static_cast<std::size_t>(k)]) /
                 static_cast<double>(rows.size() - 1);
    const double scale = cov.trace() / static_cast<double>(ds.X.cols());
    cov += spec.ridge * scale * Matrix::Identity(ds.X.cols(), ds.X.cols());
    params.covariances[static_cast<std::size_t>(k)] = std::move(cov);
  }
  return make_discriminant(std::move(params), true, spec.ridge);
}

}  // namespace lendscore::models
