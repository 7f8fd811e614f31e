#pragma once

#include "lendscore/models/tree.hpp"

namespace lendscore::models {

struct AdaBoostSpec {
  int n_estimators = 50;
  double learning_rate = 0.5;
  int base_depth = 6;

  void validate() const;
};

/// Discrete stage-weighted boosting over depth-limited entropy trees. Each
/// stage votes +/-1; the ensemble score maps the weighted vote sum through
/// the logistic link.
class AdaBoostModel final : public Model {
 public:
  AdaBoostModel(std::vector<std::vector<TreeNode>> stages, std::vector<double> stage_weights,
                double learning_rate, bool degenerate, std::size_t dimension)
      : stages_(std::move(stages)),
        stage_weights_(std::move(stage_weights)),
        learning_rate_(learning_rate),
        degenerate_(degenerate),
        dimension_(dimension) {}

  std::string variant() const override { return "adaboost"; }
  std::size_t dimension() const override { return dimension_; }
  Vector predict_proba(const Matrix& X) const override;
  std::string to_json_text() const override;

  const std::vector<double>& stage_weights() const { return stage_weights_; }
  std::size_t stage_count() const { return stages_.size(); }
  bool degenerate() const { return degenerate_; }

 private:
  std::vector<std::vector<TreeNode>> stages_;
  std::vector<double> stage_weights_;
  double learning_rate_ = 0.5;
  bool degenerate_ = false;
  std::size_t dimension_ = 0;
};

ModelPtr fit_adaboost(const data::Dataset& ds, const AdaBoostSpec& spec);

}  // namespace lendscore::models
