#include "lendscore/models/tree.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lendscore::models {

using nlohmann::json;

void TreeSpec::validate() const {
  if (max_depth < 1) throw ConfigError("decision_tree: max_depth must be >= 1");
  if (min_leaf < 1) throw ConfigError("decision_tree: min_leaf must be >= 1");
}

double entropy_bits(double p1) {
  if (p1 <= 0.0 || p1 >= 1.0) return 0.0;
  const double p0 = 1.0 - p1;
  return -p1 * std::log2(p1) - p0 * std::log2(p0);
}

namespace {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct NodeStats {
  double weight = 0.0;
  double weight1 = 0.0;

  double p1() const { return weight > 0.0 ? weight1 / weight : 0.0; }
};

NodeStats stats_of(const std::vector<int>& y, const std::vector<double>& weights,
                   const std::vector<std::size_t>& rows) {
  NodeStats s;
  for (std::size_t r : rows) {
    s.weight += weights[r];
    if (y[r] == 1) s.weight1 += weights[r];
  }
  return s;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const std::vector<int>& y, const std::vector<double>& weights,
              const TreeGrowth& opts, Rng* rng)
      : X_(X), y_(y), weights_(weights), opts_(opts), rng_(rng) {
    all_features_.resize(static_cast<std::size_t>(X.cols()));
    std::iota(all_features_.begin(), all_features_.end(), 0);
  }

  std::vector<TreeNode> build(const std::vector<std::size_t>& rows) {
    nodes_.clear();
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  int grow(const std::vector<std::size_t>& rows, int depth) {
    const NodeStats stats = stats_of(y_, weights_, rows);
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, stats.p1()});

    const double p = stats.p1();
    if (depth >= opts_.max_depth || p <= 0.0 || p >= 1.0 ||
        stats.weight < 2.0 * opts_.min_leaf_weight) {
      return node_id;
    }
    const SplitChoice split = best_split(rows, stats);
    if (!split.found) return node_id;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      if (X_(static_cast<Eigen::Index>(r), split.feature) < split.threshold) {
        left_rows.push_back(r);
      } else {
        right_rows.push_back(r);
      }
    }
    nodes_[static_cast<std::size_t>(node_id)].feature = split.feature;
    nodes_[static_cast<std::size_t>(node_id)].threshold = split.threshold;
    const int left = grow(left_rows, depth + 1);
    nodes_[static_cast<std::size_t>(node_id)].left = left;
    const int right = grow(right_rows, depth + 1);
    nodes_[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }

  // Maximizes information gain over candidate splits. A zero-gain split is
  // still taken when one exists (an XOR pair has no single informative
  // split, yet the children become separable); growth stops on depth,
  // purity, or the minimum-leaf rule, not on gain.
  SplitChoice best_split(const std::vector<std::size_t>& rows, const NodeStats& stats) {
    SplitChoice best;
    best.gain = -std::numeric_limits<double>::infinity();
    const double parent_entropy = entropy_bits(stats.p1());

    const std::vector<int>* features = &all_features_;
    std::vector<int> sampled;
    if (opts_.feature_candidates > 0 &&
        opts_.feature_candidates < static_cast<int>(all_features_.size()) && rng_ != nullptr) {
      sampled = all_features_;
      for (int i = 0; i < opts_.feature_candidates; ++i) {
        const std::size_t j = i + rng_->uniform_index(sampled.size() - static_cast<std::size_t>(i));
        std::swap(sampled[static_cast<std::size_t>(i)], sampled[j]);
      }
      sampled.resize(static_cast<std::size_t>(opts_.feature_candidates));
      std::sort(sampled.begin(), sampled.end());
      features = &sampled;
    }

    std::vector<std::pair<double, std::size_t>> ordered;
    ordered.reserve(rows.size());
    for (int f : *features) {
      ordered.clear();
      for (std::size_t r : rows) {
        ordered.emplace_back(X_(static_cast<Eigen::Index>(r), f), r);
      }
      std::sort(ordered.begin(), ordered.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      double left_w = 0.0, left_w1 = 0.0;
      for (std::size_t i = 0; i + 1 < ordered.size(); ++i) {
        const auto r = ordered[i].second;
        left_w += weights_[r];
        left_w1 += y_[r] == 1 ? weights_[r] : 0.0;
        if (ordered[i].first == ordered[i + 1].first) continue;
        const double right_w = stats.weight - left_w;
        if (left_w < opts_.min_leaf_weight || right_w < opts_.min_leaf_weight) {
          continue;
        }
        const double right_w1 = stats.weight1 - left_w1;
        const double child =
            (left_w * entropy_bits(left_w1 / left_w) + right_w * entropy_bits(right_w1 / right_w)) /
            stats.weight;
        const double gain = parent_entropy - child;
        if (gain > best.gain + 1e-12) {
          best.found = true;
          best.gain = gain;
          best.feature = f;
          best.threshold = 0.5 * (ordered[i].first + ordered[i + 1].first);
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  const std::vector<int>& y_;
  const std::vector<double>& weights_;
  TreeGrowth opts_;
  Rng* rng_;
  std::vector<int> all_features_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

std::vector<TreeNode> grow_tree(const Matrix& X, const std::vector<int>& y,
                                const std::vector<double>& weights,
                                const std::vector<std::size_t>& rows, const TreeGrowth& opts,
                                Rng* rng) {
  if (rows.empty()) throw ModelError("grow_tree: no rows");
  TreeBuilder builder(X, y, weights, opts, rng);
  return builder.build(rows);
}

double tree_predict_row(const std::vector<TreeNode>& nodes,
                        const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(at)];
    at = row[node.feature] < node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].prob;
}

Vector DecisionTreeModel::predict_proba(const Matrix& X) const {
  check_dimension(X);
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out[i] = tree_predict_row(nodes_, X.row(i));
  }
  return out;
}

namespace {

json nodes_to_json(const std::vector<TreeNode>& nodes) {
  json arr = json::array();
  for (const auto& n : nodes) {
    arr.push_back({{"feature", n.feature},
                   {"threshold", n.threshold},
                   {"left", n.left},
                   {"right", n.right},
                   {"prob", n.prob}});
  }
  return arr;
}

}  // namespace

std::string DecisionTreeModel::to_json_text() const {
  json j;
  j["format_version"] = 1;
  j["variant"] = variant();
  j["dimension"] = dimension_;
  j["nodes"] = nodes_to_json(nodes_);
  return j.dump();
}

ModelPtr fit_decision_tree(const data::Dataset& ds, const TreeSpec& spec) {
  spec.validate();
  ds.validate();
  if (ds.rows() < 2 * static_cast<std::size_t>(spec.min_leaf)) {
    throw ModelError("decision_tree: needs at least 2*min_leaf rows");
  }
  std::vector<double> weights(ds.rows(), 1.0);
  std::vector<std::size_t> rows(ds.rows());
  std::iota(rows.begin(), rows.end(), 0);
  TreeGrowth opts;
  opts.max_depth = spec.max_depth;
  opts.min_leaf_weight = static_cast<double>(spec.min_leaf);
  auto nodes = grow_tree(ds.X, ds.y, weights, rows, opts, nullptr);
  return std::make_unique<DecisionTreeModel>(std::move(nodes), ds.cols());
}

}  // namespace lendscore::models
