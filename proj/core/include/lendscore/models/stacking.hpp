#pragma once

#include "lendscore/models/registry.hpp"

namespace lendscore::models {

/// Two-level ensemble: level-0 base models feed out-of-fold probabilities to
/// a level-1 L2 logistic meta-model.
class StackingModel final : public Model {
 public:
  StackingModel(std::vector<ModelPtr> bases, ModelPtr meta);

  std::string variant() const override { return "stacking"; }
  std::size_t dimension() const override { return dimension_; }
  Vector predict_proba(const Matrix& X) const override;
  std::string to_json_text() const override;

  std::size_t base_count() const { return bases_.size(); }
  const Model& base(std::size_t i) const { return *bases_[i]; }
  const Model& meta() const { return *meta_; }

 private:
  std::vector<ModelPtr> bases_;
  ModelPtr meta_;
  std::size_t dimension_ = 0;
};

/// Meta features are stratified out-of-fold base probabilities over the
/// training data; base models are refit on the full training set afterwards.
ModelPtr fit_stacking(const data::Dataset& ds, const StackingSpec& spec, std::uint64_t seed);

}  // namespace lendscore::models
