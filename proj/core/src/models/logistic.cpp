#include "lendscore/models/logistic.hpp"

#include <json.hpp>

#include <cmath>

namespace lendscore::models {

using nlohmann::json;

void LogisticSpec::validate() const {
  if (lambda < 0.0) throw ConfigError("logistic_l2: lambda must be >= 0");
  if (tol <= 0.0) throw ConfigError("logistic_l2: tol must be > 0");
  if (max_iters < 1) throw ConfigError("logistic_l2: max_iters must be >= 1");
}

Vector LogisticModel::predict_proba(const Matrix& X) const {
  check_dimension(X);
  Vector z = X * w_;
  z.array() += b_;
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = sigmoid(z[i]);
  return z;
}

std::string LogisticModel::to_json_text() const {
  json j;
  j["format_version"] = 1;
  j["variant"] = variant();
  j["w"] = std::vector<double>(w_.data(), w_.data() + w_.size());
  j["b"] = b_;
  j["lambda"] = lambda_;
  j["converged"] = converged_;
  return j.dump();
}

namespace {

struct Objective {
  const Matrix& X;
  Vector y;  // as doubles
  double lambda;

  double loss(const Vector& w, double b) const {
    Vector z = X * w;
    z.array() += b;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      total += softplus(z[i]) - y[i] * z[i];
    }
    total /= static_cast<double>(z.size());
    return total + 0.5 * lambda * w.squaredNorm();
  }

  void gradient(const Vector& w, double b, Vector& gw, double& gb) const {
    Vector z = X * w;
    z.array() += b;
    Vector residual(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) residual[i] = sigmoid(z[i]) - y[i];
    const double n = static_cast<double>(z.size());
    gw = X.transpose() * residual / n + lambda * w;
    gb = residual.sum() / n;
  }
};

}  // namespace

ModelPtr fit_logistic(const data::Dataset& ds, const LogisticSpec& spec) {
  spec.validate();
  ds.validate();
  bool saw0 = false, saw1 = false;
  for (int label : ds.y) (label == 1 ? saw1 : saw0) = true;
  if (!saw0 || !saw1) throw ModelError("logistic_l2: needs at least one row of each class");

  Objective obj{ds.X, Vector(ds.X.rows()), spec.lambda};
  for (std::size_t i = 0; i < ds.y.size(); ++i) {
    obj.y[static_cast<Eigen::Index>(i)] = static_cast<double>(ds.y[i]);
  }

  Vector w = Vector::Zero(ds.X.cols());
  double b = 0.0;
  double step = 1.0;
  bool converged = false;
  Vector gw(ds.X.cols());
  double gb = 0.0;
  double loss = obj.loss(w, b);
  for (int iter = 0; iter < spec.max_iters; ++iter) {
    obj.gradient(w, b, gw, gb);
    const double grad_inf = std::max(gw.size() > 0 ? gw.cwiseAbs().maxCoeff() : 0.0, std::abs(gb));
    if (grad_inf <= spec.tol) {
      converged = true;
      break;
    }
    const double grad_sq = gw.squaredNorm() + gb * gb;
    step = std::min(step * 2.0, 1e4);
    bool accepted = false;
    while (step > 1e-18) {
      Vector w_next = w - step * gw;
      const double b_next = b - step * gb;
      const double next_loss = obj.loss(w_next, b_next);
      if (next_loss <= loss - 1e-4 * step * grad_sq) {
        w = std::move(w_next);
        b = b_next;
        loss = next_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // line search stalled at machine precision
  }
  return std::make_unique<LogisticModel>(std::move(w), b, spec.lambda, converged);
}

}  // namespace lendscore::models
