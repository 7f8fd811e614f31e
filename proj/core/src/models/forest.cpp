#include "lendscore/models/forest.hpp"

#include <json.hpp>

#include <cmath>
#include <numeric>

namespace lendscore::models {

using nlohmann::json;

void ForestSpec::validate() const {
  if (n_estimators < 1) throw ConfigError("random_forest: n_estimators must be >= 1");
  if (max_depth < 1) throw ConfigError("random_forest: max_depth must be >= 1");
  if (min_leaf < 1) throw ConfigError("random_forest: min_leaf must be >= 1");
  if (mtry < 0) throw ConfigError("random_forest: mtry must be >= 0");
}

Vector RandomForestModel::predict_proba(const Matrix& X) const {
  check_dimension(X);
  Vector out = Vector::Zero(X.rows());
  for (const auto& tree : trees_) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      out[i] += tree_predict_row(tree, X.row(i));
    }
  }
  out /= static_cast<double>(trees_.size());
  return out;
}

std::string RandomForestModel::to_json_text() const {
  json j;
  j["format_version"] = 1;
  j["variant"] = variant();
  j["dimension"] = dimension_;
  j["tree_seeds"] = tree_seeds_;
  j["trees"] = json::array();
  for (const auto& tree : trees_) {
    json nodes = json::array();
    for (const auto& n : tree) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"prob", n.prob}});
    }
    j["trees"].push_back(std::move(nodes));
  }
  return j.dump();
}

ModelPtr fit_random_forest(const data::Dataset& ds, const ForestSpec& spec) {
  spec.validate();
  ds.validate();
  if (ds.rows() < 2) throw ModelError("random_forest: needs at least 2 rows");
  const auto n = ds.rows();
  const int mtry = spec.mtry > 0
                       ? spec.mtry
                       : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(ds.cols()))));

  TreeGrowth opts;
  opts.max_depth = spec.max_depth;
  opts.min_leaf_weight = static_cast<double>(spec.min_leaf);
  opts.feature_candidates = mtry;

  std::vector<std::vector<TreeNode>> trees;
  std::vector<std::uint64_t> tree_seeds;
  trees.reserve(static_cast<std::size_t>(spec.n_estimators));
  for (int t = 0; t < spec.n_estimators; ++t) {
    const std::uint64_t tree_seed = derive_seed(spec.seed, "forest-tree:" + std::to_string(t));
    tree_seeds.push_back(tree_seed);
    Rng rng(tree_seed);

    std::vector<double> weights(n, 0.0);
    std::vector<std::size_t> rows;
    if (spec.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) {
        weights[rng.uniform_index(n)] += 1.0;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (weights[i] > 0.0) rows.push_back(i);
      }
    } else {
      std::fill(weights.begin(), weights.end(), 1.0);
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0);
    }
    trees.push_back(grow_tree(ds.X, ds.y, weights, rows, opts, &rng));
  }
  return std::make_unique<RandomForestModel>(std::move(trees), std::move(tree_seeds), ds.cols());
}

}  // namespace lendscore::models
