#pragma once

#include "lendscore/common.hpp"
#include "lendscore/data.hpp"
#include "lendscore/kvconfig.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lendscore::preprocess {

using data::ColumnKind;
using data::FeatureSchema;
using data::RawTable;

struct PreprocessPlan {
  double missing_threshold = 0.30;
  double corr_threshold = 0.80;
  double chi2_alpha = 0.05;
  double cap_low = 0.01;
  double cap_high = 0.99;
  std::vector<std::string> drop_columns;
  double split_ratio = 0.70;
  int k_folds = 10;
  std::uint64_t seed = 0;
  /// Cells equal to any of these (besides the empty string) count as missing.
  std::vector<std::string> missing_sentinels;

  void validate() const;
  static PreprocessPlan from_kv(const KvConfig& cfg, const std::string& prefix);
};

bool is_missing(const std::string& cell, const std::vector<std::string>& sentinels);

/// Quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty; p in [0,1].
double quantile_linear(const std::vector<double>& sorted, double p);

struct CapBounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct CapOutcome {
  CapBounds bounds;
  std::vector<double> capped;
};

/// Winsorizes a training column at the given percentiles. A constant column
/// passes through with equal bounds. Throws DataError on an empty column.
CapOutcome cap_outliers(const std::vector<double>& train_values, double lo_pct, double hi_pct);

struct ChiSquareResult {
  std::string column;
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
  bool keep = true;
  bool undefined = false;  // expected cell count 0; kept with a warning
};

/// Pearson chi-square independence test of a categorical column against the
/// binary labels; keep iff p <= alpha. Requires >= 2 observed levels.
ChiSquareResult chi_square_select(const std::vector<std::string>& column,
                                  const std::vector<int>& y, double alpha,
                                  const std::string& name = "");

/// Regularized upper incomplete gamma Q(a, x); chi-square survival function
/// is Q(dof/2, stat/2).
double gamma_q(double a, double x);

/// One-hot encoding of a single cell against learned levels (no reference
/// drop). Unseen values yield all zeros and bump *unseen_count.
std::vector<double> one_hot(const std::string& value, const std::vector<std::string>& levels,
                            std::size_t* unseen_count);

/// Greedy correlation pruning: scan columns in order, drop a column when
/// |pearson r| with any earlier kept column exceeds the threshold.
/// Zero-variance columns are never dropped for correlation; their indices are
/// appended to *flagged when provided.
std::vector<std::size_t> prune_correlated(const Matrix& x_train, double threshold,
                                          std::vector<std::size_t>* flagged = nullptr);

struct Standardizer {
  Vector mean;
  Vector stddev;  // population std; zero std leaves the column at 0 after apply

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
  Vector apply_row(const Vector& row) const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified train/test split: per-class allocation by largest remainder so
/// class proportions in both parts stay within one sample of the overall mix.
SplitIndices split_train_test(const std::vector<int>& y, double ratio, std::uint64_t seed);

struct FoldPlan {
  std::vector<int> assignments;  // one fold index in [0,k) per row
  int k = 0;
};

/// Stratified k-fold assignment.
FoldPlan make_stratified_folds(const std::vector<int>& y, int k, std::uint64_t seed);

/// True when every fold's class-1 count is within 1 of round(fold_size * rate).
bool fold_plan_stratified(const FoldPlan& plan, const std::vector<int>& y);

struct CorrelationDrop {
  std::string kept;
  std::string dropped;
  double r = 0.0;
};

struct CleaningLog {
  std::vector<std::pair<std::string, double>> dropped_sparse;  // name, missing fraction
  std::vector<std::string> dropped_identifiers;
  std::vector<std::string> dropped_all_missing;
  std::vector<std::string> dropped_constant_categorical;
  std::vector<ChiSquareResult> chi_square;
  std::vector<CorrelationDrop> dropped_correlated;
  std::vector<std::string> zero_variance;
  std::vector<std::string> ignored_columns;  // raw columns outside the schema
  std::size_t plan_drop_misses = 0;          // drop_columns entries not found

  std::string to_json_text() const;
};

struct NumericState {
  CapBounds caps;
  double impute_median = 0.0;
};

struct ColumnState {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  NumericState numeric;                // numeric columns
  std::vector<std::string> levels;     // categorical columns, sorted
};

struct TransformStats {
  std::size_t unseen_levels = 0;
};

/// Everything learned from training rows needed to turn raw rows into the
/// encoded, standardized feature matrix. Applying it is strictly row-local.
class FittedTransform {
 public:
  int version = 1;
  std::vector<ColumnState> columns;        // kept original columns, schema order
  std::vector<std::string> encoded_names;  // final encoded columns
  std::vector<int> encoded_group;          // encoded column -> index into columns
  Standardizer standardizer;
  std::vector<std::string> missing_sentinels;

  std::size_t encoded_width() const { return encoded_names.size(); }

  Matrix apply(const RawTable& raw, const std::vector<std::size_t>& rows,
               TransformStats* stats = nullptr) const;
  Vector apply_row(const RawTable& raw, std::size_t row, TransformStats* stats = nullptr) const;

  /// Pre-standardization model-input values per original column, for
  /// explanation display: numerics are de-standardized, categoricals decoded
  /// from their indicator block.
  std::vector<std::string> display_values(const Vector& encoded_row) const;

  std::string to_json_text() const;
  static FittedTransform from_json_text(const std::string& text);
};

/// Column-drop decisions for the sparse/identifier stage, exposed separately
/// so it can run (and be tested) without fitting the full transform.
struct SparseIdDropOutcome {
  RawTable table;
  CleaningLog log;
};
SparseIdDropOutcome drop_sparse_and_ids(const RawTable& raw, const FeatureSchema& schema,
                                        const PreprocessPlan& plan,
                                        const std::vector<std::size_t>& train_rows);

struct FitOutcome {
  FittedTransform transform;
  CleaningLog log;
};

/// Fits the full cleaning pipeline on the given training rows: identifier and
/// sparse-column drops, chi-square categorical selection, winsorizing caps,
/// median imputation, one-hot levels, numeric correlation pruning, and
/// standardization. Statistics never touch non-training rows.
FitOutcome fit_transform(const RawTable& raw, const FeatureSchema& schema,
                         const PreprocessPlan& plan, const std::vector<std::size_t>& train_rows);

}  // namespace lendscore::preprocess
