#pragma once

#include "lendscore/kvconfig.hpp"
#include "lendscore/models/adaboost.hpp"
#include "lendscore/models/discriminant.hpp"
#include "lendscore/models/forest.hpp"
#include "lendscore/models/logistic.hpp"
#include "lendscore/models/mlp.hpp"
#include "lendscore/models/tree.hpp"

#include <variant>
#include <vector>

namespace lendscore::models {

struct ModelSpec;

struct StackingSpec {
  std::vector<ModelSpec> bases;  // defaults: decision_tree, random_forest, logistic_l2, lda
  LogisticSpec meta;
  int oof_folds = 5;

  void validate() const;
};

using SpecParams = std::variant<LogisticSpec, TreeSpec, ForestSpec, AdaBoostSpec, LdaSpec, QdaSpec,
                                StackingSpec, MlpSpec>;

struct ModelSpec {
  std::string variant;
  SpecParams params;
  std::uint64_t seed = 0;
};

const std::vector<std::string>& known_variants();

/// Builds a ModelSpec for `variant` from dotted config keys
/// (e.g. random_forest.n_estimators). The model seed derives from the master
/// seed and the variant name.
ModelSpec spec_from_kv(const KvConfig& cfg, const std::string& variant, std::uint64_t master_seed);

ModelPtr fit_model(const data::Dataset& ds, const ModelSpec& spec);

ModelPtr model_from_json_text(const std::string& text);

}  // namespace lendscore::models
