#pragma once

#include "lendscore/models/model.hpp"
#include "lendscore/rng.hpp"

#include <vector>

namespace lendscore::models {

struct TreeSpec {
  int max_depth = 6;
  int min_leaf = 1;

  void validate() const;
};

/// Flat node arena; feature == -1 marks a leaf carrying P(y=1) = n1/(n1+n0).
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double prob = 0.0;
};

/// Binary-entropy in bits of a class-1 share.
double entropy_bits(double p1);

struct TreeGrowth {
  int max_depth = 6;
  double min_leaf_weight = 1.0;   // children must each carry at least this much weight
  int feature_candidates = 0;     // 0 = consider every feature at each split
};

/// Greedy information-gain tree on weighted rows. Splits are midpoints
/// between sorted distinct values; ties resolve to the lowest feature index
/// then lowest threshold. rng is only consulted when feature_candidates > 0.
std::vector<TreeNode> grow_tree(const Matrix& X, const std::vector<int>& y,
                                const std::vector<double>& weights,
                                const std::vector<std::size_t>& rows, const TreeGrowth& opts,
                                Rng* rng);

double tree_predict_row(const std::vector<TreeNode>& nodes,
                        const Eigen::Ref<const Eigen::RowVectorXd>& row);

class DecisionTreeModel final : public Model {
 public:
  DecisionTreeModel(std::vector<TreeNode> nodes, std::size_t dimension)
      : nodes_(std::move(nodes)), dimension_(dimension) {}

  std::string variant() const override { return "decision_tree"; }
  std::size_t dimension() const override { return dimension_; }
  Vector predict_proba(const Matrix& X) const override;
  std::string to_json_text() const override;

  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t dimension_ = 0;
};

ModelPtr fit_decision_tree(const data::Dataset& ds, const TreeSpec& spec);

}  // namespace lendscore::models
