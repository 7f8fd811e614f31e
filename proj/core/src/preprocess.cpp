#include "lendscore/preprocess.hpp"

#include "lendscore/rng.hpp"

#include <json.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace lendscore::preprocess {

using nlohmann::json;

void PreprocessPlan::validate() const {
  if (!(missing_threshold > 0.0 && missing_threshold <= 1.0)) {
    throw ConfigError("plan: missing_threshold must lie in (0,1]");
  }
  if (!(corr_threshold > 0.0 && corr_threshold <= 1.0)) {
    throw ConfigError("plan: corr_threshold must lie in (0,1]");
  }
  if (!(chi2_alpha > 0.0 && chi2_alpha < 1.0)) {
    throw ConfigError("plan: chi2_alpha must lie in (0,1)");
  }
  if (!(cap_low >= 0.0 && cap_low < cap_high && cap_high <= 1.0)) {
    throw ConfigError("plan: cap percentiles must satisfy 0 <= low < high <= 1");
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw ConfigError("plan: split_ratio must lie in (0,1)");
  }
  if (k_folds < 2) throw ConfigError("plan: k_folds must be >= 2");
}

PreprocessPlan PreprocessPlan::from_kv(const KvConfig& cfg, const std::string& prefix) {
  PreprocessPlan p;
  p.missing_threshold = cfg.get_double(prefix + "missing_threshold", p.missing_threshold);
  p.corr_threshold = cfg.get_double(prefix + "corr_threshold", p.corr_threshold);
  p.chi2_alpha = cfg.get_double(prefix + "chi2_alpha", p.chi2_alpha);
  p.cap_low = cfg.get_double(prefix + "cap_low", p.cap_low);
  p.cap_high = cfg.get_double(prefix + "cap_high", p.cap_high);
  p.drop_columns = cfg.get_list(prefix + "drop_columns", p.drop_columns);
  p.split_ratio = cfg.get_double(prefix + "split_ratio", p.split_ratio);
  p.k_folds = static_cast<int>(cfg.get_int(prefix + "k_folds", p.k_folds));
  p.missing_sentinels = cfg.get_list(prefix + "missing_sentinels", p.missing_sentinels);
  p.validate();
  return p;
}

bool is_missing(const std::string& cell, const std::vector<std::string>& sentinels) {
  if (cell.empty()) return true;
  return std::find(sentinels.begin(), sentinels.end(), cell) != sentinels.end();
}

double quantile_linear(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of empty column");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

CapOutcome cap_outliers(const std::vector<double>& train_values, double lo_pct, double hi_pct) {
  if (train_values.empty()) throw DataError("cap_outliers: empty column");
  std::vector<double> sorted = train_values;
  std::sort(sorted.begin(), sorted.end());
  CapOutcome out;
  out.bounds.lo = quantile_linear(sorted, lo_pct);
  out.bounds.hi = quantile_linear(sorted, hi_pct);
  out.capped.reserve(train_values.size());
  for (double v : train_values) {
    out.capped.push_back(std::clamp(v, out.bounds.lo, out.bounds.hi));
  }
  return out;
}

double gamma_q(double a, double x) { return boost::math::gamma_q(a, x); }

ChiSquareResult chi_square_select(const std::vector<std::string>& column,
                                  const std::vector<int>& y, double alpha,
                                  const std::string& name) {
  if (column.size() != y.size()) throw DataError("chi_square_select: length mismatch");
  std::map<std::string, std::array<double, 2>> counts;
  double class_total[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < column.size(); ++i) {
    auto& cell = counts[column[i]];
    cell[static_cast<std::size_t>(y[i])] += 1.0;
    class_total[static_cast<std::size_t>(y[i])] += 1.0;
  }
  ChiSquareResult result;
  result.column = name;
  const auto levels = counts.size();
  if (levels < 2) {
    throw DataError("chi_square_select: column '" + name + "' has fewer than 2 observed levels");
  }
  result.dof = static_cast<int>(levels) - 1;
  if (class_total[0] == 0.0 || class_total[1] == 0.0) {
    // A missing class makes every expected count in that column zero; the
    // test is undefined, so the feature is kept with a warning.
    result.undefined = true;
    result.keep = true;
    result.statistic = 0.0;
    result.p_value = 1.0;
    return result;
  }
  const double n = class_total[0] + class_total[1];
  double stat = 0.0;
  for (const auto& [level, obs] : counts) {
    const double row_total = obs[0] + obs[1];
    for (int c = 0; c < 2; ++c) {
      const double expected = row_total * class_total[c] / n;
      const double diff = obs[static_cast<std::size_t>(c)] - expected;
      stat += diff * diff / expected;
    }
  }
  result.statistic = stat;
  result.p_value = gamma_q(result.dof / 2.0, stat / 2.0);
  result.keep = result.p_value <= alpha;
  return result;
}

std::vector<double> one_hot(const std::string& value, const std::vector<std::string>& levels,
                            std::size_t* unseen_count) {
  std::vector<double> out(levels.size(), 0.0);
  auto it = std::find(levels.begin(), levels.end(), value);
  if (it == levels.end()) {
    if (unseen_count) ++*unseen_count;
  } else {
    out[static_cast<std::size_t>(it - levels.begin())] = 1.0;
  }
  return out;
}

namespace {

struct PearsonResult {
  double r = 0.0;
  bool defined = false;
};

PearsonResult pearson(const Matrix& x, Eigen::Index a, Eigen::Index b) {
  const auto n = static_cast<double>(x.rows());
  const double ma = x.col(a).mean();
  const double mb = x.col(b).mean();
  const Vector da = x.col(a).array() - ma;
  const Vector db = x.col(b).array() - mb;
  const double va = da.squaredNorm();
  const double vb = db.squaredNorm();
  if (va <= 0.0 || vb <= 0.0) return {0.0, false};
  (void)n;
  return {da.dot(db) / std::sqrt(va * vb), true};
}

struct PruneDetail {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> flagged;                               // zero variance
  std::vector<std::tuple<std::size_t, std::size_t, double>> drops;  // kept idx, dropped idx, r
};

PruneDetail prune_correlated_detail(const Matrix& x, double threshold) {
  PruneDetail out;
  const auto d = x.cols();
  std::vector<bool> zero_var(static_cast<std::size_t>(d), false);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double m = x.col(j).mean();
    if ((x.col(j).array() - m).abs().maxCoeff() == 0.0) {
      zero_var[static_cast<std::size_t>(j)] = true;
      out.flagged.push_back(static_cast<std::size_t>(j));
    }
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    bool dropped = false;
    if (!zero_var[static_cast<std::size_t>(j)]) {
      for (std::size_t k : out.kept) {
        if (zero_var[k]) continue;
        const auto [r, defined] = pearson(x, static_cast<Eigen::Index>(k), j);
        if (defined && std::abs(r) > threshold) {
          out.drops.emplace_back(k, static_cast<std::size_t>(j), r);
          dropped = true;
          break;
        }
      }
    }
    if (!dropped) out.kept.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

}  // namespace

std::vector<std::size_t> prune_correlated(const Matrix& x_train, double threshold,
                                          std::vector<std::size_t>* flagged) {
  if (x_train.cols() < 2) throw DataError("prune_correlated: needs at least 2 columns");
  auto detail = prune_correlated_detail(x_train, threshold);
  if (flagged) *flagged = detail.flagged;
  return detail.kept;
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean();
  s.stddev.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean[j]).square().sum() / n;
    s.stddev[j] = std::sqrt(var);
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw DataError("standardize: column count mismatch");
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (stddev[j] == 0.0) {
      out.col(j).setZero();
    } else {
      out.col(j) = (x.col(j).array() - mean[j]) / stddev[j];
    }
  }
  return out;
}

Vector Standardizer::apply_row(const Vector& row) const {
  if (row.size() != mean.size()) throw DataError("standardize: column count mismatch");
  Vector out(row.size());
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    out[j] = stddev[j] == 0.0 ? 0.0 : (row[j] - mean[j]) / stddev[j];
  }
  return out;
}

SplitIndices split_train_test(const std::vector<int>& y, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0,1)");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(y[i])].push_back(i);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < 2) {
      throw DataError("stratified split: class " + std::to_string(c) +
                      " has fewer than 2 members");
    }
  }
  const auto n = y.size();
  auto n_train = static_cast<long long>(std::llround(static_cast<double>(n) * ratio));
  n_train = std::clamp<long long>(n_train, 2, static_cast<long long>(n) - 2);

  long long take[2];
  double rem[2];
  for (int c = 0; c < 2; ++c) {
    const double exact = static_cast<double>(by_class[c].size()) * ratio;
    take[c] = static_cast<long long>(std::floor(exact));
    rem[c] = exact - std::floor(exact);
  }
  long long leftover = n_train - take[0] - take[1];
  while (leftover > 0) {
    const int c = (rem[1] > rem[0]) ? 1 : 0;
    ++take[c];
    rem[c] = -1.0;
    --leftover;
  }
  // Keep at least one row of each class on each side.
  for (int c = 0; c < 2; ++c) {
    take[c] = std::clamp<long long>(take[c], 1, static_cast<long long>(by_class[c].size()) - 1);
  }

  SplitIndices out;
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, c == 0 ? "split:class0" : "split:class1"));
    auto indices = by_class[c];
    rng.shuffle(indices);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (static_cast<long long>(i) < take[c]) out.train.push_back(indices[i]);
      else out.test.push_back(indices[i]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

FoldPlan make_stratified_folds(const std::vector<int>& y, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k_folds must be >= 2");
  if (static_cast<std::size_t>(k) > y.size()) {
    throw DataError("k_folds exceeds the number of rows");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(y[i])].push_back(i);
  for (int c = 0; c < 2; ++c) {
    if (!by_class[c].empty() && by_class[c].size() < static_cast<std::size_t>(k)) {
      throw DataError("stratified folds: class " + std::to_string(c) +
                      " has fewer members than folds; a fold would lack the class");
    }
  }
  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(y.size(), 0);
  // Dealing each class round-robin keeps per-fold class counts within one of
  // each other; the second class starts where the first left off so total
  // fold sizes stay balanced too.
  int start = 0;
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, c == 0 ? "fold:class0" : "fold:class1"));
    auto indices = by_class[c];
    rng.shuffle(indices);
    for (std::size_t j = 0; j < indices.size(); ++j) {
      plan.assignments[indices[j]] = static_cast<int>((start + j) % static_cast<std::size_t>(k));
    }
    start = static_cast<int>((start + indices.size()) % static_cast<std::size_t>(k));
  }
  return plan;
}

bool fold_plan_stratified(const FoldPlan& plan, const std::vector<int>& y) {
  if (plan.assignments.size() != y.size() || plan.k < 1) return false;
  std::vector<long long> size(static_cast<std::size_t>(plan.k), 0);
  std::vector<long long> ones(static_cast<std::size_t>(plan.k), 0);
  long long total_ones = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto f = static_cast<std::size_t>(plan.assignments[i]);
    if (f >= size.size()) return false;
    ++size[f];
    ones[f] += y[i];
    total_ones += y[i];
  }
  const double rate = static_cast<double>(total_ones) / static_cast<double>(y.size());
  for (std::size_t f = 0; f < size.size(); ++f) {
    if (size[f] == 0) return false;
    const auto expected = std::llround(static_cast<double>(size[f]) * rate);
    if (std::llabs(ones[f] - expected) > 1) return false;
  }
  return true;
}

std::string CleaningLog::to_json_text() const {
  json j;
  j["dropped_sparse"] = json::array();
  for (const auto& [name, frac] : dropped_sparse) {
    j["dropped_sparse"].push_back({{"column", name}, {"missing_fraction", frac}});
  }
  j["dropped_identifiers"] = dropped_identifiers;
  j["dropped_all_missing"] = dropped_all_missing;
  j["dropped_constant_categorical"] = dropped_constant_categorical;
  j["chi_square"] = json::array();
  for (const auto& r : chi_square) {
    j["chi_square"].push_back({{"column", r.column},
                               {"statistic", r.statistic},
                               {"p_value", r.p_value},
                               {"dof", r.dof},
                               {"keep", r.keep},
                               {"undefined", r.undefined}});
  }
  j["dropped_correlated"] = json::array();
  for (const auto& d : dropped_correlated) {
    j["dropped_correlated"].push_back({{"kept", d.kept}, {"dropped", d.dropped}, {"r", d.r}});
  }
  j["zero_variance"] = zero_variance;
  j["ignored_columns"] = ignored_columns;
  j["plan_drop_misses"] = plan_drop_misses;
  return j.dump(2) + "\n";
}

namespace {

struct DropDecisions {
  std::vector<std::string> identifier_drops;                    // raw columns removed by name
  std::vector<std::pair<std::string, double>> sparse_drops;     // feature name, missing fraction
  std::size_t misses = 0;
  std::vector<const data::ColumnSpec*> remaining;               // surviving feature columns
};

DropDecisions decide_drops(const RawTable& raw, const FeatureSchema& schema,
                           const PreprocessPlan& plan,
                           const std::vector<std::size_t>& train_rows) {
  DropDecisions out;
  std::set<std::string> dropped_names;
  for (const auto& name : plan.drop_columns) {
    if (name == schema.target_name || name == schema.funded_column ||
        name == schema.payment_column) {
      throw ConfigError("drop_columns must not name the target or economics column '" + name +
                        "'");
    }
    if (raw.column_index(name)) {
      out.identifier_drops.push_back(name);
      dropped_names.insert(name);
    } else {
      ++out.misses;
    }
  }
  for (const auto& col : schema.columns) {
    if (dropped_names.count(col.name)) continue;
    auto idx = raw.column_index(col.name);
    if (!idx) throw DataError("schema column '" + col.name + "' not present in table");
    std::size_t missing = 0;
    for (std::size_t r : train_rows) {
      if (is_missing(raw.rows[r][*idx], plan.missing_sentinels)) ++missing;
    }
    const double frac =
        train_rows.empty() ? 0.0 : static_cast<double>(missing) / static_cast<double>(train_rows.size());
    if (frac > plan.missing_threshold) {
      out.sparse_drops.emplace_back(col.name, frac);
    } else {
      out.remaining.push_back(&col);
    }
  }
  if (out.remaining.empty()) {
    throw DataError("all feature columns removed by sparse/identifier drops");
  }
  return out;
}

}  // namespace

SparseIdDropOutcome drop_sparse_and_ids(const RawTable& raw, const FeatureSchema& schema,
                                        const PreprocessPlan& plan,
                                        const std::vector<std::size_t>& train_rows) {
  auto decisions = decide_drops(raw, schema, plan, train_rows);
  SparseIdDropOutcome out;
  out.log.dropped_identifiers = decisions.identifier_drops;
  out.log.dropped_sparse = decisions.sparse_drops;
  out.log.plan_drop_misses = decisions.misses;

  std::set<std::string> removed(decisions.identifier_drops.begin(),
                                decisions.identifier_drops.end());
  for (const auto& [name, frac] : decisions.sparse_drops) removed.insert(name);
  std::vector<std::size_t> kept_cols;
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    if (!removed.count(raw.header[c])) kept_cols.push_back(c);
  }
  for (std::size_t c : kept_cols) out.table.header.push_back(raw.header[c]);
  out.table.rows.reserve(raw.rows.size());
  for (const auto& row : raw.rows) {
    std::vector<std::string> cells;
    cells.reserve(kept_cols.size());
    for (std::size_t c : kept_cols) cells.push_back(row[c]);
    out.table.rows.push_back(std::move(cells));
  }
  return out;
}

namespace {

// Encodes one raw row into the pre-standardization feature vector.
Vector encode_row(const RawTable& raw, std::size_t row,
                  const std::vector<ColumnState>& columns,
                  const std::vector<std::size_t>& column_idx,
                  const std::vector<std::string>& sentinels, std::size_t width,
                  TransformStats* stats) {
  Vector out(static_cast<Eigen::Index>(width));
  Eigen::Index at = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& state = columns[c];
    const std::string& cell = raw.rows[row][column_idx[c]];
    if (state.kind == ColumnKind::numeric) {
      double v;
      if (is_missing(cell, sentinels)) {
        v = state.numeric.impute_median;
      } else {
        auto parsed = parse_double(cell);
        if (!parsed) {
          throw DataError("row " + std::to_string(row) + ", column '" + state.name +
                          "': cannot parse numeric cell '" + cell + "'");
        }
        v = std::clamp(*parsed, state.numeric.caps.lo, state.numeric.caps.hi);
      }
      out[at++] = v;
    } else {
      bool matched = false;
      for (std::size_t l = 0; l < state.levels.size(); ++l) {
        const bool hit = !is_missing(cell, sentinels) && cell == state.levels[l];
        out[at++] = hit ? 1.0 : 0.0;
        matched = matched || hit;
      }
      if (!matched && stats) ++stats->unseen_levels;
    }
  }
  return out;
}

std::vector<std::size_t> resolve_columns(const RawTable& raw,
                                         const std::vector<ColumnState>& columns) {
  std::vector<std::size_t> idx;
  idx.reserve(columns.size());
  for (const auto& c : columns) idx.push_back(raw.column_index_or_throw(c.name));
  return idx;
}

}  // namespace

Matrix FittedTransform::apply(const RawTable& raw, const std::vector<std::size_t>& rows,
                              TransformStats* stats) const {
  const auto idx = resolve_columns(raw, columns);
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(encoded_width()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Vector pre = encode_row(raw, rows[i], columns, idx, missing_sentinels, encoded_width(), stats);
    out.row(static_cast<Eigen::Index>(i)) = standardizer.apply_row(pre);
  }
  return out;
}

Vector FittedTransform::apply_row(const RawTable& raw, std::size_t row,
                                  TransformStats* stats) const {
  const auto idx = resolve_columns(raw, columns);
  Vector pre = encode_row(raw, row, columns, idx, missing_sentinels, encoded_width(), stats);
  return standardizer.apply_row(pre);
}

std::vector<std::string> FittedTransform::display_values(const Vector& encoded_row) const {
  if (encoded_row.size() != static_cast<Eigen::Index>(encoded_width())) {
    throw DataError("display_values: row width mismatch");
  }
  std::vector<std::string> out;
  out.reserve(columns.size());
  std::size_t at = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& state = columns[c];
    // Count encoded columns belonging to this original column.
    std::size_t span = 0;
    while (at + span < encoded_group.size() &&
           encoded_group[at + span] == static_cast<int>(c)) {
      ++span;
    }
    if (state.kind == ColumnKind::numeric) {
      if (span == 0) {
        out.push_back("");  // pruned column; should not happen for kept states
        continue;
      }
      const auto j = static_cast<Eigen::Index>(at);
      const double raw_value = standardizer.mean[j] + encoded_row[j] * standardizer.stddev[j];
      out.push_back(format_double(raw_value));
    } else {
      double best = -1.0;
      std::string level = "unknown";
      for (std::size_t l = 0; l < span; ++l) {
        const auto j = static_cast<Eigen::Index>(at + l);
        const double indicator = standardizer.mean[j] + encoded_row[j] * standardizer.stddev[j];
        if (indicator > best) {
          best = indicator;
          level = state.levels[l];
        }
      }
      if (best < 0.5) level = "unknown";
      out.push_back(level);
    }
    at += span;
  }
  return out;
}

FitOutcome fit_transform(const RawTable& raw, const FeatureSchema& schema,
                         const PreprocessPlan& plan, const std::vector<std::size_t>& train_rows) {
  schema.validate();
  plan.validate();
  if (train_rows.empty()) throw DataError("fit_transform: no training rows");

  FitOutcome out;
  auto& log = out.log;
  auto& ft = out.transform;
  ft.missing_sentinels = plan.missing_sentinels;

  {
    std::set<std::string> known;
    for (const auto& c : schema.columns) known.insert(c.name);
    known.insert(schema.target_name);
    if (!schema.funded_column.empty()) known.insert(schema.funded_column);
    if (!schema.payment_column.empty()) known.insert(schema.payment_column);
    for (const auto& h : raw.header) {
      if (!known.count(h)) log.ignored_columns.push_back(h);
    }
  }

  auto decisions = decide_drops(raw, schema, plan, train_rows);
  log.dropped_identifiers = decisions.identifier_drops;
  log.dropped_sparse = decisions.sparse_drops;
  log.plan_drop_misses = decisions.misses;

  // Labels for the chi-square tests come from the training rows only.
  const std::size_t target_idx = raw.column_index_or_throw(schema.target_name);
  std::vector<int> y_train;
  y_train.reserve(train_rows.size());
  for (std::size_t r : train_rows) {
    const std::string& v = raw.rows[r][target_idx];
    if (v == schema.positive_label) y_train.push_back(1);
    else if (v == schema.negative_label) y_train.push_back(0);
    else throw DataError("fit_transform: training row " + std::to_string(r) +
                         " has unmapped target '" + v + "'");
  }

  std::vector<ColumnState> states;
  for (const auto* col : decisions.remaining) {
    const std::size_t idx = raw.column_index_or_throw(col->name);
    if (col->kind == ColumnKind::categorical) {
      std::vector<std::string> cells;
      std::vector<int> labels;
      std::set<std::string> level_set;
      for (std::size_t i = 0; i < train_rows.size(); ++i) {
        const std::string& cell = raw.rows[train_rows[i]][idx];
        if (is_missing(cell, plan.missing_sentinels)) continue;
        cells.push_back(cell);
        labels.push_back(y_train[i]);
        level_set.insert(cell);
      }
      if (level_set.size() < 2) {
        // The chi-square operation rejects single-level columns; the pipeline
        // drops them instead since a constant carries no signal.
        log.dropped_constant_categorical.push_back(col->name);
        continue;
      }
      auto chi = chi_square_select(cells, labels, plan.chi2_alpha, col->name);
      log.chi_square.push_back(chi);
      if (!chi.keep) continue;
      ColumnState state;
      state.name = col->name;
      state.kind = ColumnKind::categorical;
      state.levels.assign(level_set.begin(), level_set.end());
      states.push_back(std::move(state));
    } else {
      std::vector<double> values;
      for (std::size_t r : train_rows) {
        const std::string& cell = raw.rows[r][idx];
        if (is_missing(cell, plan.missing_sentinels)) continue;
        auto parsed = parse_double(cell);
        if (!parsed) {
          throw DataError("fit_transform: row " + std::to_string(r) + ", column '" + col->name +
                          "': cannot parse numeric cell '" + cell + "'");
        }
        values.push_back(*parsed);
      }
      if (values.empty()) {
        log.dropped_all_missing.push_back(col->name);
        continue;
      }
      auto capped = cap_outliers(values, plan.cap_low, plan.cap_high);
      std::sort(capped.capped.begin(), capped.capped.end());
      ColumnState state;
      state.name = col->name;
      state.kind = ColumnKind::numeric;
      state.numeric.caps = capped.bounds;
      state.numeric.impute_median = quantile_linear(capped.capped, 0.5);
      states.push_back(std::move(state));
    }
  }
  if (states.empty()) throw DataError("no feature columns survived cleaning");

  // Correlation pruning over the numeric columns (indicator columns are
  // exempt: with all one-hot levels kept, a two-level block is perfectly
  // anti-correlated by construction).
  std::vector<std::size_t> numeric_state_idx;
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (states[s].kind == ColumnKind::numeric) numeric_state_idx.push_back(s);
  }
  std::set<std::size_t> pruned_states;
  if (numeric_state_idx.size() >= 2) {
    Matrix numeric_train(static_cast<Eigen::Index>(train_rows.size()),
                         static_cast<Eigen::Index>(numeric_state_idx.size()));
    for (std::size_t j = 0; j < numeric_state_idx.size(); ++j) {
      const auto& state = states[numeric_state_idx[j]];
      const std::size_t idx = raw.column_index_or_throw(state.name);
      for (std::size_t i = 0; i < train_rows.size(); ++i) {
        const std::string& cell = raw.rows[train_rows[i]][idx];
        double v;
        if (is_missing(cell, plan.missing_sentinels)) {
          v = state.numeric.impute_median;
        } else {
          v = std::clamp(*parse_double(cell), state.numeric.caps.lo, state.numeric.caps.hi);
        }
        numeric_train(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      }
    }
    auto detail = prune_correlated_detail(numeric_train, plan.corr_threshold);
    for (std::size_t f : detail.flagged) {
      log.zero_variance.push_back(states[numeric_state_idx[f]].name);
    }
    for (const auto& [kept, dropped, r] : detail.drops) {
      log.dropped_correlated.push_back({states[numeric_state_idx[kept]].name,
                                        states[numeric_state_idx[dropped]].name, r});
      pruned_states.insert(numeric_state_idx[dropped]);
    }
  }

  for (std::size_t s = 0; s < states.size(); ++s) {
    if (pruned_states.count(s)) continue;
    ft.columns.push_back(states[s]);
  }
  for (std::size_t c = 0; c < ft.columns.size(); ++c) {
    const auto& state = ft.columns[c];
    if (state.kind == ColumnKind::numeric) {
      ft.encoded_names.push_back(state.name);
      ft.encoded_group.push_back(static_cast<int>(c));
    } else {
      for (const auto& level : state.levels) {
        ft.encoded_names.push_back(state.name + "=" + level);
        ft.encoded_group.push_back(static_cast<int>(c));
      }
    }
  }

  const auto idx = resolve_columns(raw, ft.columns);
  Matrix pre(static_cast<Eigen::Index>(train_rows.size()),
             static_cast<Eigen::Index>(ft.encoded_width()));
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    pre.row(static_cast<Eigen::Index>(i)) = encode_row(
        raw, train_rows[i], ft.columns, idx, plan.missing_sentinels, ft.encoded_width(), nullptr);
  }
  ft.standardizer = Standardizer::fit(pre);
  return out;
}

std::string FittedTransform::to_json_text() const {
  json j;
  j["format_version"] = version;
  j["missing_sentinels"] = missing_sentinels;
  j["columns"] = json::array();
  for (const auto& c : columns) {
    json col;
    col["name"] = c.name;
    col["kind"] = c.kind == ColumnKind::numeric ? "numeric" : "categorical";
    if (c.kind == ColumnKind::numeric) {
      col["cap_lo"] = c.numeric.caps.lo;
      col["cap_hi"] = c.numeric.caps.hi;
      col["impute_median"] = c.numeric.impute_median;
    } else {
      col["levels"] = c.levels;
    }
    j["columns"].push_back(col);
  }
  j["encoded_names"] = encoded_names;
  j["encoded_group"] = encoded_group;
  j["mean"] = std::vector<double>(standardizer.mean.data(),
                                  standardizer.mean.data() + standardizer.mean.size());
  j["stddev"] = std::vector<double>(standardizer.stddev.data(),
                                    standardizer.stddev.data() + standardizer.stddev.size());
  return j.dump(2) + "\n";
}

FittedTransform FittedTransform::from_json_text(const std::string& text) {
  json j = json::parse(text);
  FittedTransform ft;
  ft.version = j.at("format_version").get<int>();
  if (ft.version != 1) throw DataError("unsupported transform format version");
  ft.missing_sentinels = j.at("missing_sentinels").get<std::vector<std::string>>();
  for (const auto& col : j.at("columns")) {
    ColumnState state;
    state.name = col.at("name").get<std::string>();
    if (col.at("kind").get<std::string>() == "numeric") {
      state.kind = ColumnKind::numeric;
      state.numeric.caps.lo = col.at("cap_lo").get<double>();
      state.numeric.caps.hi = col.at("cap_hi").get<double>();
      state.numeric.impute_median = col.at("impute_median").get<double>();
    } else {
      state.kind = ColumnKind::categorical;
      state.levels = col.at("levels").get<std::vector<std::string>>();
    }
    ft.columns.push_back(std::move(state));
  }
  ft.encoded_names = j.at("encoded_names").get<std::vector<std::string>>();
  ft.encoded_group = j.at("encoded_group").get<std::vector<int>>();
  auto mean = j.at("mean").get<std::vector<double>>();
  auto stddev = j.at("stddev").get<std::vector<double>>();
  ft.standardizer.mean = Eigen::Map<Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  ft.standardizer.stddev =
      Eigen::Map<Vector>(stddev.data(), static_cast<Eigen::Index>(stddev.size()));
  return ft;
}

}  // namespace lendscore::preprocess
