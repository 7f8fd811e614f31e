#include "lendscore/models/adaboost.hpp"

#include <json.hpp>

#include <cmath>
#include <numeric>

namespace lendscore::models {

using nlohmann::json;

void AdaBoostSpec::validate() const {
  if (n_estimators < 1) throw ConfigError("adaboost: n_estimators must be >= 1");
  if (learning_rate <= 0.0) throw ConfigError("adaboost: learning_rate must be > 0");
  if (base_depth < 1) throw ConfigError("adaboost: base_depth must be >= 1");
}

Vector AdaBoostModel::predict_proba(const Matrix& X) const {
  check_dimension(X);
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double vote = 0.0;
    for (std::size_t m = 0; m < stages_.size(); ++m) {
      const double h = tree_predict_row(stages_[m], X.row(i)) >= 0.5 ? 1.0 : -1.0;
      vote += stage_weights_[m] * h;
    }
    out[i] = sigmoid(vote);
  }
  return out;
}

std::string AdaBoostModel::to_json_text() const {
  json j;
  j["format_version"] = 1;
  j["variant"] = variant();
  j["dimension"] = dimension_;
  j["learning_rate"] = learning_rate_;
  j["degenerate"] = degenerate_;
  j["stage_weights"] = stage_weights_;
  j["stages"] = json::array();
  for (const auto& tree : stages_) {
    json nodes = json::array();
    for (const auto& n : tree) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"prob", n.prob}});
    }
    j["stages"].push_back(std::move(nodes));
  }
  return j.dump();
}

ModelPtr fit_adaboost(const data::Dataset& ds, const AdaBoostSpec& spec) {
  spec.validate();
  ds.validate();
  bool saw0 = false, saw1 = false;
  for (int label : ds.y) (label == 1 ? saw1 : saw0) = true;
  if (!saw0 || !saw1) throw ModelError("adaboost: needs both classes");

  const auto n = ds.rows();
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);

  TreeGrowth opts;
  opts.max_depth = spec.base_depth;
  // Weights are a distribution; the minimum-leaf rule would be meaningless in
  // weight units, so base trees split down to single rows like stumps do.
  opts.min_leaf_weight = 0.0;

  std::vector<std::vector<TreeNode>> stages;
  std::vector<double> alphas;
  bool degenerate = false;
  for (int m = 0; m < spec.n_estimators; ++m) {
    auto tree = grow_tree(ds.X, ds.y, weights, rows, opts, nullptr);
    double err = 0.0;
    std::vector<bool> miss(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const int pred = tree_predict_row(tree, ds.X.row(static_cast<Eigen::Index>(i))) >= 0.5 ? 1 : 0;
      miss[i] = pred != ds.y[i];
      if (miss[i]) err += weights[i];
    }
    if (err >= 0.5) {
      if (m == 0) {
        // Even the first stage cannot beat coin flipping; keep it so the
        // model scores, but flag the failure.
        const double err_eff = std::min(err, 1.0 - 1e-12);
        stages.push_back(std::move(tree));
        alphas.push_back(spec.learning_rate * std::log((1.0 - err_eff) / err_eff));
        degenerate = true;
      }
      break;
    }
    const double err_eff = std::max(err, 1e-12);
    const double alpha = spec.learning_rate * std::log((1.0 - err_eff) / err_eff);
    stages.push_back(std::move(tree));
    alphas.push_back(alpha);
    if (err == 0.0) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i]) weights[i] *= std::exp(alpha);
      total += weights[i];
    }
    for (auto& w : weights) w /= total;
  }
  return std::make_unique<AdaBoostModel>(std::move(stages), std::move(alphas),
                                         spec.learning_rate, degenerate, ds.cols());
}

}  // namespace lendscore::models
