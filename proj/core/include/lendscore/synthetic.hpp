#pragma once

#include "lendscore/data.hpp"
#include "lendscore/kvconfig.hpp"

#include <cstdint>

namespace lendscore::data {

/// Ground-truth parameters of the synthetic loan book. Default odds follow a
/// logistic model in the generated features plus one pure XOR-style
/// interaction term, so the Bayes-optimal score of every row is computable
/// in closed form and linear models are provably blind to the interaction.
struct GeneratorConfig {
  double default_rate = 0.25;        // target marginal P(default)
  double interaction_weight = 1.5;   // coefficient on sign(util_trend)*sign(inc_trend)
  double main_effect_scale = 1.0;    // multiplier on all linear effects
  double recovery_min = 0.05;        // defaulted loans repay U(min,max) * principal
  double recovery_max = 0.75;
  double sparse_missing_rate = 0.60; // missingness of months_since_delinq

  void validate() const;
  static GeneratorConfig from_kv(const KvConfig& cfg, const std::string& prefix);
};

struct SyntheticData {
  RawTable table;
  FeatureSchema schema;
  /// True P(default | features) per row; the Bayes-optimal paid-probability
  /// score is 1 - true_default_prob. Test/benchmark use only.
  std::vector<double> true_default_prob;
};

/// Deterministic for a fixed (n, seed, config). Emits a realistic loan table:
/// numeric and categorical application features, an identifier column, a
/// sparse column, a correlated column pair, the binary loan_status target,
/// and realized economics where paid loans return principal*(1+rate*years)
/// and defaulted loans return a recovery fraction strictly below principal.
SyntheticData generate_synthetic(std::size_t n, std::uint64_t seed, const GeneratorConfig& config);

}  // namespace lendscore::data
