#include "lendscore/explain.hpp"

#include "lendscore/csv.hpp"
#include "lendscore/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace lendscore::explain {

using nlohmann::json;

std::vector<std::vector<int>> FeatureGrouping::columns_by_group() const {
  std::vector<std::vector<int>> out(group_count());
  for (std::size_t c = 0; c < encoded_to_group.size(); ++c) {
    out[static_cast<std::size_t>(encoded_to_group[c])].push_back(static_cast<int>(c));
  }
  return out;
}

void FeatureGrouping::validate(std::size_t encoded_width) const {
  if (encoded_to_group.size() != encoded_width) {
    throw ExplainError("grouping does not cover every encoded column");
  }
  if (group_names.size() != group_kinds.size() || group_names.empty()) {
    throw ExplainError("grouping: names/kinds mismatch");
  }
  std::vector<bool> seen(group_count(), false);
  for (int g : encoded_to_group) {
    if (g < 0 || static_cast<std::size_t>(g) >= group_count()) {
      throw ExplainError("grouping: group index out of range");
    }
    seen[static_cast<std::size_t>(g)] = true;
  }
  for (std::size_t g = 0; g < seen.size(); ++g) {
    if (!seen[g]) throw ExplainError("grouping: group '" + group_names[g] + "' has no columns");
  }
}

FeatureGrouping FeatureGrouping::identity(std::size_t d, std::vector<std::string> names) {
  FeatureGrouping g;
  g.encoded_to_group.resize(d);
  for (std::size_t i = 0; i < d; ++i) g.encoded_to_group[i] = static_cast<int>(i);
  if (names.empty()) {
    for (std::size_t i = 0; i < d; ++i) names.push_back("x" + std::to_string(i));
  }
  if (names.size() != d) throw ExplainError("identity grouping: name count mismatch");
  g.group_names = std::move(names);
  g.group_kinds.assign(d, ColumnKind::numeric);
  return g;
}

FeatureGrouping FeatureGrouping::from_transform(const preprocess::FittedTransform& transform) {
  FeatureGrouping g;
  g.encoded_to_group = transform.encoded_group;
  for (const auto& col : transform.columns) {
    g.group_names.push_back(col.name);
    g.group_kinds.push_back(col.kind);
  }
  g.validate(transform.encoded_width());
  return g;
}

void ValueFunctionCtx::validate() const {
  if (!f) throw ExplainError("value function: missing scorer");
  if (background.rows() < 1) throw ExplainError("value function: background must have >= 1 row");
  if (background.cols() != x.size()) {
    throw ExplainError("value function: background/instance width mismatch");
  }
  grouping.validate(static_cast<std::size_t>(x.size()));
}

namespace {

Matrix composite_rows(const ValueFunctionCtx& ctx, const std::vector<bool>& coalition,
                      const std::vector<std::vector<int>>& group_cols) {
  Matrix rows = ctx.background;
  for (std::size_t g = 0; g < coalition.size(); ++g) {
    if (!coalition[g]) continue;
    for (int c : group_cols[g]) {
      rows.col(c).setConstant(ctx.x[c]);
    }
  }
  return rows;
}

double mean_of(const Vector& v) { return v.sum() / static_cast<double>(v.size()); }

// Evaluates v() for a list of coalitions given as bitmasks, batching scorer
// calls over whole composite blocks.
std::vector<double> evaluate_coalitions(const ValueFunctionCtx& ctx,
                                        const std::vector<std::uint64_t>& masks) {
  const auto group_cols = ctx.grouping.columns_by_group();
  const std::size_t m = ctx.grouping.group_count();
  const auto b_rows = ctx.background.rows();
  const std::size_t chunk = std::max<std::size_t>(1, 4096 / static_cast<std::size_t>(b_rows));
  std::vector<double> values(masks.size());
  std::size_t at = 0;
  while (at < masks.size()) {
    const std::size_t stop = std::min(masks.size(), at + chunk);
    Matrix block(static_cast<Eigen::Index>(stop - at) * b_rows, ctx.background.cols());
    for (std::size_t i = at; i < stop; ++i) {
      std::vector<bool> coalition(m, false);
      for (std::size_t g = 0; g < m; ++g) coalition[g] = (masks[i] >> g) & 1u;
      block.middleRows(static_cast<Eigen::Index>(i - at) * b_rows, b_rows) =
          composite_rows(ctx, coalition, group_cols);
    }
    const Vector scores = ctx.f(block);
    if (scores.size() != block.rows()) throw ExplainError("scorer returned wrong row count");
    for (std::size_t i = at; i < stop; ++i) {
      values[i] = scores.segment(static_cast<Eigen::Index>(i - at) * b_rows, b_rows).sum() /
                  static_cast<double>(b_rows);
    }
    at = stop;
  }
  return values;
}

}  // namespace

double value_function(const ValueFunctionCtx& ctx, const std::vector<bool>& coalition) {
  ctx.validate();
  if (coalition.size() != ctx.grouping.group_count()) {
    throw ExplainError("value function: coalition size mismatch");
  }
  const auto group_cols = ctx.grouping.columns_by_group();
  return mean_of(ctx.f(composite_rows(ctx, coalition, group_cols)));
}

std::string shap_method_name(ShapMethod m) {
  switch (m) {
    case ShapMethod::exact: return "exact";
    case ShapMethod::kernel_enumerated: return "kernel_enumerated";
    case ShapMethod::kernel_sampled: return "kernel_sampled";
  }
  return "?";
}

ShapExplanation exact_shapley(const ValueFunctionCtx& ctx) {
  ctx.validate();
  const std::size_t m = ctx.grouping.group_count();
  if (m > 12) {
    throw ExplainError("exact_shapley: " + std::to_string(m) +
                       " features exceed the 2^M oracle bound (12); use kernel_shap");
  }
  const std::uint64_t full = (1ull << m) - 1ull;
  std::vector<std::uint64_t> masks(full + 1);
  std::iota(masks.begin(), masks.end(), 0ull);
  const std::vector<double> v = evaluate_coalitions(ctx, masks);

  // Shapley coalition weights |S|! (M-|S|-1)! / M!
  std::vector<double> weight(m);
  {
    std::vector<double> factorial(m + 1, 1.0);
    for (std::size_t i = 1; i <= m; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);
    for (std::size_t s = 0; s < m; ++s) {
      weight[s] = factorial[s] * factorial[m - s - 1] / factorial[m];
    }
  }

  ShapExplanation out;
  out.method = ShapMethod::exact;
  out.base_value = v[0];
  out.fx = v[full];
  out.feature_names = ctx.grouping.group_names;
  out.phi = Vector::Zero(static_cast<Eigen::Index>(m));
  for (std::uint64_t mask = 0; mask <= full; ++mask) {
    const auto s = static_cast<std::size_t>(__builtin_popcountll(mask));
    for (std::size_t j = 0; j < m; ++j) {
      if (mask & (1ull << j)) continue;
      out.phi[static_cast<Eigen::Index>(j)] += weight[s] * (v[mask | (1ull << j)] - v[mask]);
    }
  }
  return out;
}

namespace {

double shapley_kernel(std::size_t m, std::size_t s) {
  // (M-1) / (C(M,s) * s * (M-s))
  double comb = 1.0;
  for (std::size_t i = 0; i < s; ++i) {
    comb *= static_cast<double>(m - i) / static_cast<double>(i + 1);
  }
  return static_cast<double>(m - 1) / (comb * static_cast<double>(s) * static_cast<double>(m - s));
}

struct CoalitionSet {
  std::vector<std::uint64_t> masks;
  std::vector<double> weights;
};

CoalitionSet enumerate_interior(std::size_t m) {
  CoalitionSet out;
  const std::uint64_t full = (1ull << m) - 1ull;
  for (std::uint64_t mask = 1; mask < full; ++mask) {
    out.masks.push_back(mask);
    out.weights.push_back(shapley_kernel(m, static_cast<std::size_t>(__builtin_popcountll(mask))));
  }
  return out;
}

CoalitionSet sample_coalitions(std::size_t m, std::size_t n_draws, Rng& rng) {
  // Draw sizes proportional to the kernel mass of each size class, then pick
  // a uniform subset of that size; duplicate draws accumulate as weight.
  std::vector<double> size_mass(m);  // index s-1
  double total = 0.0;
  for (std::size_t s = 1; s < m; ++s) {
    size_mass[s - 1] = static_cast<double>(m - 1) / (static_cast<double>(s) * static_cast<double>(m - s));
    total += size_mass[s - 1];
  }
  std::map<std::uint64_t, double> counts;
  std::vector<int> indices(m);
  std::iota(indices.begin(), indices.end(), 0);
  for (std::size_t draw = 0; draw < n_draws; ++draw) {
    double u = rng.uniform() * total;
    std::size_t s = 1;
    for (; s + 1 < m; ++s) {
      if (u < size_mass[s - 1]) break;
      u -= size_mass[s - 1];
    }
    for (std::size_t i = 0; i < s; ++i) {
      const std::size_t j = i + rng.uniform_index(m - i);
      std::swap(indices[i], indices[j]);
    }
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < s; ++i) mask |= 1ull << indices[i];
    counts[mask] += 1.0;
  }
  CoalitionSet out;
  for (const auto& [mask, count] : counts) {
    out.masks.push_back(mask);
    out.weights.push_back(count);
  }
  return out;
}

}  // namespace

ShapExplanation kernel_shap(const ValueFunctionCtx& ctx, std::size_t n_coalitions,
                            std::uint64_t seed) {
  ctx.validate();
  const std::size_t m = ctx.grouping.group_count();
  if (m < 1) throw ExplainError("kernel_shap: no features");
  if (m > 63) throw ExplainError("kernel_shap: more than 63 features unsupported");
  if (n_coalitions == 0 && m > 20) {
    throw ExplainError("kernel_shap: exhaustive enumeration beyond 20 features; sample instead");
  }

  ShapExplanation out;
  out.feature_names = ctx.grouping.group_names;
  out.seed = seed;
  out.method = n_coalitions == 0 ? ShapMethod::kernel_enumerated : ShapMethod::kernel_sampled;
  out.n_coalitions = n_coalitions;

  const std::uint64_t full = (1ull << m) - 1ull;
  {
    const std::vector<double> ends = evaluate_coalitions(ctx, {0ull, full});
    out.base_value = ends[0];
    out.fx = ends[1];
  }
  const double delta = out.fx - out.base_value;

  if (m == 1) {
    out.phi = Vector::Constant(1, delta);  // forced by the two constraints
    return out;
  }

  CoalitionSet coalitions;
  if (n_coalitions == 0) {
    coalitions = enumerate_interior(m);
  } else {
    Rng rng(derive_seed(seed, "kernel-shap"));
    coalitions = sample_coalitions(m, n_coalitions, rng);
    if (coalitions.masks.size() < m) {
      throw ExplainError("kernel_shap: only " + std::to_string(coalitions.masks.size()) +
                         " distinct coalitions sampled for " + std::to_string(m) +
                         " features; increase n_coalitions");
    }
  }

  const std::vector<double> v = evaluate_coalitions(ctx, coalitions.masks);

  // Constrained WLS: substitute phi_last = delta - sum(others) and solve the
  // reduced system; the infinite-weight endpoints are enforced exactly.
  const auto p = static_cast<Eigen::Index>(m - 1);
  Matrix h = Matrix::Zero(p, p);
  Vector rhs = Vector::Zero(p);
  for (std::size_t i = 0; i < coalitions.masks.size(); ++i) {
    const std::uint64_t mask = coalitions.masks[i];
    const double w = coalitions.weights[i];
    const double z_last = (mask >> (m - 1)) & 1u ? 1.0 : 0.0;
    Vector a(p);
    for (std::size_t j = 0; j + 1 < m; ++j) {
      a[static_cast<Eigen::Index>(j)] = (((mask >> j) & 1u) ? 1.0 : 0.0) - z_last;
    }
    const double t = v[i] - out.base_value - z_last * delta;
    h.noalias() += w * a * a.transpose();
    rhs.noalias() += w * t * a;
  }
  Eigen::LDLT<Matrix> solver(h);
  const Vector beta = solver.solve(rhs);
  if ((h * beta - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) {
    throw ExplainError("kernel_shap: singular coalition system; increase n_coalitions");
  }

  out.phi = Vector(static_cast<Eigen::Index>(m));
  out.phi.head(p) = beta;
  out.phi[p] = delta - beta.sum();
  return out;
}

ShapSummary shap_summary(const std::vector<ShapExplanation>& explanations,
                         const std::vector<std::vector<std::string>>& display_values) {
  if (explanations.empty()) throw ExplainError("shap_summary: no explanations");
  const auto m = explanations.front().phi.size();
  for (const auto& e : explanations) {
    if (e.phi.size() != m) throw ExplainError("shap_summary: inconsistent feature counts");
  }
  if (!display_values.empty() && display_values.size() != explanations.size()) {
    throw ExplainError("shap_summary: display value rows do not match explanations");
  }

  const auto& names = explanations.front().feature_names;
  Vector mean_abs = Vector::Zero(m);
  for (const auto& e : explanations) mean_abs += e.phi.cwiseAbs();
  mean_abs /= static_cast<double>(explanations.size());

  ShapSummary out;
  std::vector<std::size_t> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mean_abs[static_cast<Eigen::Index>(a)] > mean_abs[static_cast<Eigen::Index>(b)];
  });
  for (std::size_t j : order) {
    out.ranking.emplace_back(names[j], mean_abs[static_cast<Eigen::Index>(j)]);
  }
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      ShapSummary::Point point;
      point.sample = i;
      point.feature = names[static_cast<std::size_t>(j)];
      point.value =
          display_values.empty() ? "" : display_values[i][static_cast<std::size_t>(j)];
      point.phi = explanations[i].phi[j];
      out.points.push_back(std::move(point));
    }
  }
  return out;
}

LimeStats LimeStats::from_training(const Matrix& x_train, const FeatureGrouping& grouping) {
  grouping.validate(static_cast<std::size_t>(x_train.cols()));
  if (x_train.rows() < 2) throw ExplainError("lime stats: need at least 2 training rows");
  const auto group_cols = grouping.columns_by_group();
  LimeStats stats;
  stats.groups.resize(grouping.group_count());
  for (std::size_t g = 0; g < grouping.group_count(); ++g) {
    auto& gs = stats.groups[g];
    gs.kind = grouping.group_kinds[g];
    if (gs.kind == ColumnKind::numeric) {
      if (group_cols[g].size() != 1) {
        throw ExplainError("lime stats: numeric group '" + grouping.group_names[g] +
                           "' must map to one encoded column");
      }
      const int c = group_cols[g].front();
      std::vector<double> values(x_train.rows());
      for (Eigen::Index i = 0; i < x_train.rows(); ++i) values[static_cast<std::size_t>(i)] = x_train(i, c);
      std::sort(values.begin(), values.end());
      gs.mean = x_train.col(c).mean();
      gs.stddev = std::sqrt((x_train.col(c).array() - gs.mean).square().sum() /
                            static_cast<double>(x_train.rows()));
      gs.quartiles = {preprocess::quantile_linear(values, 0.25),
                      preprocess::quantile_linear(values, 0.50),
                      preprocess::quantile_linear(values, 0.75)};
      gs.degenerate = values.front() == values.back();
      for (double v : values) {
        std::size_t bin = 0;
        while (bin < 3 && v > gs.quartiles[bin]) ++bin;
        gs.bin_values[bin].push_back(v);
      }
    } else {
      std::map<std::vector<double>, double> counts;
      for (Eigen::Index i = 0; i < x_train.rows(); ++i) {
        std::vector<double> pattern;
        pattern.reserve(group_cols[g].size());
        for (int c : group_cols[g]) pattern.push_back(x_train(i, c));
        counts[pattern] += 1.0;
      }
      for (const auto& [pattern, count] : counts) {
        Vector p(static_cast<Eigen::Index>(pattern.size()));
        for (std::size_t i = 0; i < pattern.size(); ++i) p[static_cast<Eigen::Index>(i)] = pattern[i];
        gs.patterns.push_back(std::move(p));
        gs.pattern_freq.push_back(count / static_cast<double>(x_train.rows()));
      }
      gs.degenerate = gs.patterns.size() < 2;
    }
  }
  return stats;
}

namespace {

std::size_t bin_of(const LimeGroupStats& gs, double v) {
  std::size_t bin = 0;
  while (bin < 3 && v > gs.quartiles[bin]) ++bin;
  return bin;
}

std::size_t pattern_of(const LimeGroupStats& gs, const Vector& block) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < gs.patterns.size(); ++i) {
    const double dist = (gs.patterns[i] - block).squaredNorm();
    if (dist < best) {
      best = dist;
      best_idx = i;
    }
  }
  return best_idx;
}

}  // namespace

LimePerturbation lime_perturb(const ValueFunctionCtx& ctx, const LimeStats& stats, LimeMode mode,
                              std::size_t n_samples, double sigma, std::uint64_t seed) {
  ctx.validate();
  const std::size_t m = ctx.grouping.group_count();
  if (stats.groups.size() != m) throw ExplainError("lime_perturb: stats/grouping mismatch");
  if (n_samples < m + 2) {
    throw ExplainError("lime_perturb: n_samples must be at least M+2");
  }
  if (sigma <= 0.0) sigma = 0.75 * std::sqrt(static_cast<double>(m));

  const auto group_cols = ctx.grouping.columns_by_group();
  LimePerturbation out;
  for (std::size_t g = 0; g < m; ++g) {
    if (stats.groups[g].degenerate) out.excluded.push_back(static_cast<int>(g));
  }

  out.zprime.resize(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(m));
  out.z.resize(static_cast<Eigen::Index>(n_samples), ctx.x.size());
  out.weights.resize(static_cast<Eigen::Index>(n_samples));

  Rng rng(derive_seed(seed, "lime-perturb"));
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out.z.row(row) = ctx.x.transpose();
    double dist_sq = 0.0;
    for (std::size_t g = 0; g < m; ++g) {
      const auto& gs = stats.groups[g];
      const auto gcol = static_cast<Eigen::Index>(g);
      const bool keep_all = i == 0 || gs.degenerate;  // sample 0 is x itself
      if (gs.kind == ColumnKind::numeric) {
        const int c = group_cols[g].front();
        const double x_val = ctx.x[c];
        if (mode == LimeMode::raw) {
          const double xi = keep_all ? 0.0 : rng.normal();
          const double value = x_val + gs.stddev * xi;
          out.z(row, c) = value;
          out.zprime(row, gcol) = gs.stddev > 0.0 ? (value - gs.mean) / gs.stddev : 0.0;
          dist_sq += xi * xi;
        } else {
          const std::size_t home = bin_of(gs, x_val);
          bool same_bin = keep_all || rng.uniform() < 0.5;
          std::size_t bin = home;
          if (!same_bin) {
            std::vector<std::size_t> others;
            for (std::size_t b = 0; b < 4; ++b) {
              if (b != home && !gs.bin_values[b].empty()) others.push_back(b);
            }
            if (others.empty()) {
              same_bin = true;  // nowhere else to go
            } else {
              bin = others[rng.uniform_index(others.size())];
            }
          }
          double value = x_val;
          if (i != 0) {
            const auto& pool = gs.bin_values[bin];
            if (!pool.empty()) value = pool[rng.uniform_index(pool.size())];
            if (same_bin && pool.empty()) value = x_val;
          }
          out.z(row, c) = value;
          out.zprime(row, gcol) = same_bin ? 1.0 : 0.0;
          dist_sq += same_bin ? 0.0 : 1.0;
        }
      } else {
        const auto& cols = group_cols[g];
        Vector x_block(static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) x_block[static_cast<Eigen::Index>(c)] = ctx.x[cols[c]];
        const std::size_t home = gs.patterns.empty() ? 0 : pattern_of(gs, x_block);
        bool same = true;
        std::size_t pick = home;
        if (!keep_all) {
          if (mode == LimeMode::raw) {
            // Frequency-weighted draw over every training pattern.
            double u = rng.uniform();
            for (std::size_t p = 0; p < gs.patterns.size(); ++p) {
              if (u < gs.pattern_freq[p] || p + 1 == gs.patterns.size()) {
                pick = p;
                break;
              }
              u -= gs.pattern_freq[p];
            }
            same = pick == home;
          } else {
            same = rng.uniform() < 0.5;
            if (!same) {
              double total = 0.0;
              for (std::size_t p = 0; p < gs.patterns.size(); ++p) {
                if (p != home) total += gs.pattern_freq[p];
              }
              double u = rng.uniform() * total;
              for (std::size_t p = 0; p < gs.patterns.size(); ++p) {
                if (p == home) continue;
                if (u < gs.pattern_freq[p]) {
                  pick = p;
                  break;
                }
                u -= gs.pattern_freq[p];
                pick = p;
              }
            }
          }
        }
        if (pick != home && !gs.patterns.empty()) {
          for (std::size_t c = 0; c < cols.size(); ++c) {
            out.z(row, cols[c]) = gs.patterns[pick][static_cast<Eigen::Index>(c)];
          }
        }
        out.zprime(row, gcol) = same ? 1.0 : 0.0;
        dist_sq += same ? 0.0 : 1.0;
      }
    }
    out.weights[row] = std::exp(-dist_sq / (sigma * sigma));
  }
  return out;
}

namespace {

struct RidgeFit {
  double intercept = 0.0;
  Vector beta;
  Vector std_error;
  std::optional<double> r2;
};

RidgeFit weighted_ridge(const Matrix& u, const Vector& v, const Vector& w, double lambda) {
  const auto p = u.cols();
  Matrix a(u.rows(), p + 1);
  a.col(0).setOnes();
  a.rightCols(p) = u;
  Matrix h = Matrix::Zero(p + 1, p + 1);
  Vector rhs = Vector::Zero(p + 1);
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    h.noalias() += w[i] * a.row(i).transpose() * a.row(i);
    rhs.noalias() += w[i] * v[i] * a.row(i).transpose();
  }
  for (Eigen::Index j = 1; j <= p; ++j) h(j, j) += lambda;  // bias unpenalized
  Eigen::LDLT<Matrix> solver(h);
  const Vector sol = solver.solve(rhs);
  if ((h * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) {
    throw ExplainError("lime: singular weighted system; increase n_samples or sigma");
  }

  RidgeFit fit;
  fit.intercept = sol[0];
  fit.beta = sol.tail(p);

  const Vector residual = v - a * sol;
  const double w_total = w.sum();
  double rss = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) rss += w[i] * residual[i] * residual[i];
  const double v_mean = w_total > 0.0 ? (w.array() * v.array()).sum() / w_total : 0.0;
  double tss = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) tss += w[i] * (v[i] - v_mean) * (v[i] - v_mean);
  // A variance floor keeps a constant f from producing a garbage R2 out of
  // rounding noise; the marker stays undefined instead.
  if (tss > 1e-12 * w_total * (1.0 + v_mean * v_mean)) fit.r2 = 1.0 - rss / tss;

  const double dof = std::max(1.0, w_total - static_cast<double>(p + 1));
  const double sigma_sq = rss / dof;
  const Matrix h_inv = solver.solve(Matrix::Identity(p + 1, p + 1));
  fit.std_error.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    fit.std_error[j] = std::sqrt(std::max(0.0, sigma_sq * h_inv(j + 1, j + 1)));
  }
  return fit;
}

}  // namespace

LimeExplanation lime_explain(const ValueFunctionCtx& ctx, const LimeStats& stats, LimeMode mode,
                             std::size_t n_samples, std::size_t top_k, double sigma,
                             double ridge_lambda, std::uint64_t seed) {
  if (top_k < 1) throw ExplainError("lime_explain: top_k must be >= 1");
  const double width =
      sigma > 0.0 ? sigma : 0.75 * std::sqrt(static_cast<double>(ctx.grouping.group_count()));
  auto perturbation = lime_perturb(ctx, stats, mode, n_samples, width, seed);
  const Vector scores = ctx.f(perturbation.z);
  if (scores.size() != perturbation.z.rows()) {
    throw ExplainError("lime_explain: scorer returned wrong row count");
  }

  std::vector<int> included;
  for (std::size_t g = 0; g < ctx.grouping.group_count(); ++g) {
    if (std::find(perturbation.excluded.begin(), perturbation.excluded.end(),
                  static_cast<int>(g)) == perturbation.excluded.end()) {
      included.push_back(static_cast<int>(g));
    }
  }
  if (included.empty()) throw ExplainError("lime_explain: every feature is degenerate");

  Matrix u(perturbation.zprime.rows(), static_cast<Eigen::Index>(included.size()));
  for (std::size_t j = 0; j < included.size(); ++j) {
    u.col(static_cast<Eigen::Index>(j)) = perturbation.zprime.col(included[j]);
  }

  const RidgeFit full = weighted_ridge(u, scores, perturbation.weights, ridge_lambda);

  std::vector<std::size_t> order(included.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(full.beta[static_cast<Eigen::Index>(a)]) >
           std::abs(full.beta[static_cast<Eigen::Index>(b)]);
  });
  const std::size_t kept = std::min(top_k, included.size());
  order.resize(kept);

  Matrix u_kept(u.rows(), static_cast<Eigen::Index>(kept));
  for (std::size_t j = 0; j < kept; ++j) {
    u_kept.col(static_cast<Eigen::Index>(j)) = u.col(static_cast<Eigen::Index>(order[j]));
  }
  const RidgeFit refit = weighted_ridge(u_kept, scores, perturbation.weights, ridge_lambda);

  LimeExplanation out;
  out.intercept = refit.intercept;
  out.r2 = refit.r2;
  out.kernel_width = width;
  out.n_samples = n_samples;
  out.seed = seed;
  out.mode = mode;
  out.fx = scores[0];  // sample 0 is the unperturbed instance
  for (int g : perturbation.excluded) {
    out.excluded.push_back(ctx.grouping.group_names[static_cast<std::size_t>(g)]);
  }
  for (std::size_t j = 0; j < kept; ++j) {
    const int g = included[order[j]];
    LimeFeature feature;
    feature.name = ctx.grouping.group_names[static_cast<std::size_t>(g)];
    double scale = 1.0;
    if (mode == LimeMode::raw &&
        ctx.grouping.group_kinds[static_cast<std::size_t>(g)] == ColumnKind::numeric) {
      // Surrogate inputs were standardized; report the raw-scale slope.
      const double stddev = stats.groups[static_cast<std::size_t>(g)].stddev;
      scale = stddev > 0.0 ? 1.0 / stddev : 1.0;
    }
    feature.weight = refit.beta[static_cast<Eigen::Index>(j)] * scale;
    feature.std_error = refit.std_error[static_cast<Eigen::Index>(j)] * scale;
    out.features.push_back(std::move(feature));
  }
  return out;
}

void write_shap_csv(const std::filesystem::path& path, const ShapExplanation& expl,
                    const std::vector<std::string>& display_values) {
  csv::Table table;
  table.header = {"feature", "value", "phi"};
  for (Eigen::Index j = 0; j < expl.phi.size(); ++j) {
    const auto idx = static_cast<std::size_t>(j);
    table.rows.push_back({expl.feature_names[idx],
                          idx < display_values.size() ? display_values[idx] : "",
                          format_double(expl.phi[j])});
  }
  csv::write(path, table);
}

void write_shap_sidecar_json(const std::filesystem::path& path, const ShapExplanation& expl) {
  json j;
  j["base_value"] = expl.base_value;
  j["fx"] = expl.fx;
  j["method"] = shap_method_name(expl.method);
  j["seed"] = expl.seed;
  j["n_coalitions"] = expl.n_coalitions;
  csv::write_text_atomic(path, j.dump(2) + "\n");
}

void write_lime_csv(const std::filesystem::path& path, const LimeExplanation& expl,
                    const std::vector<std::string>& display_values,
                    const std::vector<std::string>& group_names) {
  csv::Table table;
  table.header = {"feature", "value", "weight", "std_error"};
  for (const auto& f : expl.features) {
    std::string value;
    for (std::size_t g = 0; g < group_names.size(); ++g) {
      if (group_names[g] == f.name && g < display_values.size()) {
        value = display_values[g];
        break;
      }
    }
    table.rows.push_back(
        {f.name, value, format_double(f.weight), format_double(f.std_error)});
  }
  csv::write(path, table);
}

void write_lime_sidecar_json(const std::filesystem::path& path, const LimeExplanation& expl) {
  json j;
  j["intercept"] = expl.intercept;
  if (expl.r2) j["r2"] = *expl.r2;
  else j["r2"] = nullptr;
  j["kernel_width"] = expl.kernel_width;
  j["n_samples"] = expl.n_samples;
  j["seed"] = expl.seed;
  j["mode"] = expl.mode == LimeMode::discretized ? "discretized" : "raw";
  j["excluded"] = expl.excluded;
  j["fx"] = expl.fx;
  csv::write_text_atomic(path, j.dump(2) + "\n");
}

void write_shap_summary_csv(const std::filesystem::path& path, const ShapSummary& summary) {
  csv::Table table;
  table.header = {"feature", "mean_abs_phi"};
  for (const auto& [name, impact] : summary.ranking) {
    table.rows.push_back({name, format_double(impact)});
  }
  csv::write(path, table);
}

void write_shap_points_csv(const std::filesystem::path& path, const ShapSummary& summary) {
  csv::Table table;
  table.header = {"sample", "feature", "value", "phi"};
  for (const auto& p : summary.points) {
    table.rows.push_back({std::to_string(p.sample), p.feature, p.value, format_double(p.phi)});
  }
  csv::write(path, table);
}

}  // namespace lendscore::explain
