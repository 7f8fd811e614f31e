#pragma once

#include "lendscore/common.hpp"
#include "lendscore/preprocess.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lendscore::explain {

using data::ColumnKind;

/// Batch scorer over encoded rows; the exact model being explained.
using Scorer = std::function<Vector(const Matrix&)>;

/// Partition of encoded columns into M interpretable features (a one-hot
/// block collapses to its original categorical column).
struct FeatureGrouping {
  std::vector<int> encoded_to_group;
  std::vector<std::string> group_names;
  std::vector<ColumnKind> group_kinds;

  std::size_t group_count() const { return group_names.size(); }
  std::vector<std::vector<int>> columns_by_group() const;
  void validate(std::size_t encoded_width) const;

  static FeatureGrouping identity(std::size_t d, std::vector<std::string> names = {});
  static FeatureGrouping from_transform(const preprocess::FittedTransform& transform);
};

struct ValueFunctionCtx {
  Scorer f;
  Vector x;
  Matrix background;
  FeatureGrouping grouping;

  void validate() const;
};

/// v(S): mean model output over background rows with the columns of features
/// in S taken from x. v(empty) is the mean background prediction and
/// v(full) = f(x).
double value_function(const ValueFunctionCtx& ctx, const std::vector<bool>& coalition);

enum class ShapMethod { exact, kernel_enumerated, kernel_sampled };

std::string shap_method_name(ShapMethod m);

struct ShapExplanation {
  double base_value = 0.0;  // phi_0 = v(empty)
  Vector phi;               // one attribution per interpretable feature
  double fx = 0.0;
  ShapMethod method = ShapMethod::exact;
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;
  std::size_t n_coalitions = 0;  // draws in sampled mode
};

/// Exact Shapley values by full coalition enumeration (2^M value calls).
/// Refuses M > 12 and points to the kernel method.
ShapExplanation exact_shapley(const ValueFunctionCtx& ctx);

/// Kernel SHAP: weighted least squares over coalitions under the constraints
/// phi_0 = v(empty) and sum(phi) = f(x) - v(empty). n_coalitions == 0
/// enumerates every interior coalition; otherwise coalitions are drawn by
/// kernel-proportional size sampling with the given seed.
ShapExplanation kernel_shap(const ValueFunctionCtx& ctx, std::size_t n_coalitions,
                            std::uint64_t seed);

struct ShapSummary {
  std::vector<std::pair<std::string, double>> ranking;  // feature, mean |phi|, descending
  struct Point {
    std::size_t sample = 0;
    std::string feature;
    std::string value;
    double phi = 0.0;
  };
  std::vector<Point> points;
};

/// Mean-absolute-impact ranking plus per-sample (value, phi) pairs for
/// beeswarm-style plotting. display_values may be empty or hold one vector of
/// M display strings per explanation.
ShapSummary shap_summary(const std::vector<ShapExplanation>& explanations,
                         const std::vector<std::vector<std::string>>& display_values = {});

enum class LimeMode { discretized, raw };

/// Training statistics per interpretable feature used to perturb around an
/// instance: quartile bins with per-bin training values for numerics,
/// observed indicator patterns with frequencies for categoricals.
struct LimeGroupStats {
  ColumnKind kind = ColumnKind::numeric;
  double mean = 0.0;
  double stddev = 0.0;
  std::array<double, 3> quartiles{};            // bin edges q25/q50/q75
  std::array<std::vector<double>, 4> bin_values;
  std::vector<Vector> patterns;                  // categorical blocks
  std::vector<double> pattern_freq;
  bool degenerate = false;  // single bin or single pattern: excluded from perturbation
};

struct LimeStats {
  std::vector<LimeGroupStats> groups;

  static LimeStats from_training(const Matrix& x_train, const FeatureGrouping& grouping);
};

struct LimePerturbation {
  Matrix zprime;              // n x M surrogate inputs (binary or scaled raw)
  Matrix z;                   // n x d encoded rows for the model
  Vector weights;             // proximity kernel weights
  std::vector<int> excluded;  // degenerate group indices left unperturbed
};

/// Sample 0 is always the unperturbed instance itself (weight 1). sigma <= 0
/// selects the default width 0.75 * sqrt(M).
LimePerturbation lime_perturb(const ValueFunctionCtx& ctx, const LimeStats& stats, LimeMode mode,
                              std::size_t n_samples, double sigma, std::uint64_t seed);

struct LimeFeature {
  std::string name;
  double weight = 0.0;
  double std_error = 0.0;
};

struct LimeExplanation {
  double intercept = 0.0;
  std::vector<LimeFeature> features;  // top-K by |coefficient|, descending
  std::optional<double> r2;           // weighted; empty when f has no variance
  double kernel_width = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  LimeMode mode = LimeMode::discretized;
  std::vector<std::string> excluded;
  double fx = 0.0;
};

/// Weighted ridge surrogate around x: a first fit over all perturbable
/// features selects the top_k largest-magnitude coefficients, then the model
/// is refit on the kept features only.
LimeExplanation lime_explain(const ValueFunctionCtx& ctx, const LimeStats& stats, LimeMode mode,
                             std::size_t n_samples, std::size_t top_k, double sigma,
                             double ridge_lambda, std::uint64_t seed);

// Artifact writers (CSV rows per feature plus a JSON sidecar).
void write_shap_csv(const std::filesystem::path& path, const ShapExplanation& expl,
                    const std::vector<std::string>& display_values);
void write_shap_sidecar_json(const std::filesystem::path& path, const ShapExplanation& expl);
void write_lime_csv(const std::filesystem::path& path, const LimeExplanation& expl,
                    const std::vector<std::string>& display_values,
                    const std::vector<std::string>& group_names);
void write_lime_sidecar_json(const std::filesystem::path& path, const LimeExplanation& expl);
void write_shap_summary_csv(const std::filesystem::path& path, const ShapSummary& summary);
void write_shap_points_csv(const std::filesystem::path& path, const ShapSummary& summary);

}  // namespace lendscore::explain
