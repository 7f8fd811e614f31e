#pragma once

#include "lendscore/models/tree.hpp"

namespace lendscore::models {

struct ForestSpec {
  int n_estimators = 100;
  int max_depth = 10;
  int min_leaf = 1;
  bool bootstrap = true;  // test hook: false fits every tree on the full sample
  int mtry = 0;           // per-split feature candidates; 0 = ceil(sqrt(d))
  std::uint64_t seed = 0;

  void validate() const;
};

class RandomForestModel final : public Model {
 public:
  RandomForestModel(std::vector<std::vector<TreeNode>> trees, std::vector<std::uint64_t> tree_seeds,
                    std::size_t dimension)
      : trees_(std::move(trees)), tree_seeds_(std::move(tree_seeds)), dimension_(dimension) {}

  std::string variant() const override { return "random_forest"; }
  std::size_t dimension() const override { return dimension_; }
  Vector predict_proba(const Matrix& X) const override;
  std::string to_json_text() const override;

  std::size_t tree_count() const { return trees_.size(); }
  const std::vector<std::vector<TreeNode>>& trees() const { return trees_; }

 private:
  std::vector<std::vector<TreeNode>> trees_;
  std::vector<std::uint64_t> tree_seeds_;
  std::size_t dimension_ = 0;
};

/// Bagged entropy trees with per-split feature subsampling; the ensemble
/// score is the mean of tree leaf probabilities. Per-tree seeds derive from
/// the master seed, so refits are bit-identical.
ModelPtr fit_random_forest(const data::Dataset& ds, const ForestSpec& spec);

}  // namespace lendscore::models
