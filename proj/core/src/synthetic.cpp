#include "lendscore/synthetic.hpp"

#include "lendscore/rng.hpp"

#include <array>
#include <cmath>
#include <cstdio>

namespace lendscore::data {

namespace {

constexpr const char* kGrades[] = {"A", "B", "C", "D", "E", "F", "G"};
constexpr double kGradeProbs[] = {0.18, 0.24, 0.24, 0.16, 0.10, 0.05, 0.03};
constexpr const char* kTerms[] = {"36 months", "60 months"};
constexpr double kTermProb60 = 0.30;
constexpr const char* kPurposes[] = {"debt_consolidation", "credit_card", "home_improvement",
                                     "small_business", "other"};
constexpr double kPurposeProbs[] = {0.40, 0.25, 0.15, 0.10, 0.10};
constexpr double kPurposeEffect[] = {0.0, -0.10, -0.05, 0.50, 0.15};
constexpr const char* kRegions[] = {"NE", "SE", "MW", "SW", "W"};
constexpr double kRegionProbs[] = {0.22, 0.20, 0.20, 0.18, 0.20};

// True moments of the generating distributions, used to z-score the linear
// effects so coefficient magnitudes are comparable.
constexpr double kFicoMean = 690.0, kFicoStd = 35.0;
constexpr double kDtiMean = 18.0, kDtiStd = 7.0;
constexpr double kLogIncMean = 4.174387269895637;  // ln(65)
constexpr double kLogIncStd = 0.45;
constexpr double kUtilMean = 50.0, kUtilStd = 28.86751345948129;  // U(0,100)
constexpr double kRateMean = 0.10472, kRateStd = 0.03771856079;

int pick_level(Rng& rng, const double* probs, int count) {
  double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < count; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return count - 1;
}

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return std::string(buf);
}

struct RowDraw {
  double fico, dti, annual_inc, revol_util, revol_bal, util_trend, inc_trend, int_rate;
  bool msd_missing;
  double months_since_delinq;
  int grade, term60, purpose, region;
  double score;  // log-odds of default, before the intercept
};

RowDraw draw_row(Rng& rng, const GeneratorConfig& cfg) {
  RowDraw d{};
  d.fico = kFicoMean + kFicoStd * rng.normal();
  d.dti = std::max(0.0, kDtiMean + kDtiStd * rng.normal());
  d.annual_inc = std::exp(kLogIncMean + kLogIncStd * rng.normal());
  d.revol_util = rng.uniform(0.0, 100.0);
  d.revol_bal = std::max(0.0, 180.0 * d.revol_util + 3000.0 + 2000.0 * rng.normal());
  d.util_trend = rng.normal();
  d.inc_trend = rng.normal();
  d.grade = pick_level(rng, kGradeProbs, 7);
  d.int_rate = 0.05 + 0.024 * d.grade + 0.012 * rng.uniform();
  d.msd_missing = rng.uniform() < cfg.sparse_missing_rate;
  d.months_since_delinq = d.msd_missing ? 0.0 : rng.uniform(0.0, 120.0);
  d.term60 = rng.uniform() < kTermProb60 ? 1 : 0;
  d.purpose = pick_level(rng, kPurposeProbs, 5);
  d.region = pick_level(rng, kRegionProbs, 5);

  const double zf = (d.fico - kFicoMean) / kFicoStd;
  const double zd = (d.dti - kDtiMean) / kDtiStd;
  const double zi = (std::log(d.annual_inc) - kLogIncMean) / kLogIncStd;
  const double zu = (d.revol_util - kUtilMean) / kUtilStd;
  const double zr = (d.int_rate - kRateMean) / kRateStd;
  const double linear = -0.9 * zf + 0.55 * zd - 0.35 * zi + 0.45 * zu + 0.30 * zr +
                        0.35 * (d.grade - 2.0) + 0.45 * d.term60 + kPurposeEffect[d.purpose];
  const double xor_sign = (d.util_trend >= 0.0 ? 1.0 : -1.0) * (d.inc_trend >= 0.0 ? 1.0 : -1.0);
  d.score = cfg.main_effect_scale * linear + cfg.interaction_weight * xor_sign;
  return d;
}

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Solves E[sigmoid(b0 + score)] = default_rate over a fixed internal sample,
// so the realized default share tracks the configured rate for any effect mix.
double calibrate_intercept(const GeneratorConfig& cfg) {
  constexpr std::size_t kCalibrationDraws = 20000;
  Rng rng(derive_seed(0x10ad5c07e5ull, "synthetic-intercept"));
  std::vector<double> scores;
  scores.reserve(kCalibrationDraws);
  for (std::size_t i = 0; i < kCalibrationDraws; ++i) scores.push_back(draw_row(rng, cfg).score);
  double lo = -30.0, hi = 30.0;
  for (int iter = 0; iter < 80; ++iter) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double s : scores) mean += sigmoid(mid + s);
    mean /= static_cast<double>(scores.size());
    if (mean < cfg.default_rate) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void GeneratorConfig::validate() const {
  if (!(default_rate > 0.0 && default_rate < 1.0)) {
    throw ConfigError("synthetic: default_rate must lie in (0,1)");
  }
  if (!(recovery_min >= 0.0 && recovery_min <= recovery_max && recovery_max < 1.0)) {
    throw ConfigError("synthetic: recovery fractions must satisfy 0 <= min <= max < 1");
  }
  if (!(sparse_missing_rate >= 0.0 && sparse_missing_rate <= 1.0)) {
    throw ConfigError("synthetic: sparse_missing_rate must lie in [0,1]");
  }
  if (!std::isfinite(interaction_weight) || !std::isfinite(main_effect_scale) ||
      main_effect_scale < 0.0) {
    throw ConfigError("synthetic: invalid effect weights");
  }
}

GeneratorConfig GeneratorConfig::from_kv(const KvConfig& cfg, const std::string& prefix) {
  GeneratorConfig g;
  g.default_rate = cfg.get_double(prefix + "default_rate", g.default_rate);
  g.interaction_weight = cfg.get_double(prefix + "interaction_weight", g.interaction_weight);
  g.main_effect_scale = cfg.get_double(prefix + "main_effect_scale", g.main_effect_scale);
  g.recovery_min = cfg.get_double(prefix + "recovery_min", g.recovery_min);
  g.recovery_max = cfg.get_double(prefix + "recovery_max", g.recovery_max);
  g.sparse_missing_rate = cfg.get_double(prefix + "sparse_missing_rate", g.sparse_missing_rate);
  g.validate();
  return g;
}

SyntheticData generate_synthetic(std::size_t n, std::uint64_t seed, const GeneratorConfig& config) {
  if (n < 1) throw ConfigError("generate_synthetic: n must be >= 1");
  config.validate();

  SyntheticData out;
  out.schema.columns = {
      {"fico_score", ColumnKind::numeric, {}},
      {"dti", ColumnKind::numeric, {}},
      {"annual_inc", ColumnKind::numeric, {}},
      {"revol_util", ColumnKind::numeric, {}},
      {"revol_bal", ColumnKind::numeric, {}},
      {"util_trend", ColumnKind::numeric, {}},
      {"inc_trend", ColumnKind::numeric, {}},
      {"int_rate", ColumnKind::numeric, {}},
      {"months_since_delinq", ColumnKind::numeric, {}},
      {"grade", ColumnKind::categorical, {kGrades, kGrades + 7}},
      {"term", ColumnKind::categorical, {kTerms, kTerms + 2}},
      {"purpose", ColumnKind::categorical, {kPurposes, kPurposes + 5}},
      {"addr_region", ColumnKind::categorical, {kRegions, kRegions + 5}},
  };
  out.schema.target_name = "loan_status";
  out.schema.positive_label = "Fully Paid";
  out.schema.negative_label = "Default";
  out.schema.funded_column = "funded_amnt";
  out.schema.payment_column = "total_pymnt";
  out.schema.validate();

  out.table.header = {"member_id", "fico_score", "dti", "annual_inc", "revol_util",
                      "revol_bal", "util_trend", "inc_trend", "int_rate",
                      "months_since_delinq", "grade", "term", "purpose", "addr_region",
                      "loan_status", "funded_amnt", "total_pymnt"};

  const double b0 = calibrate_intercept(config);
  Rng rng(seed);
  out.table.rows.reserve(n);
  out.true_default_prob.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RowDraw d = draw_row(rng, config);
    const double p_default = sigmoid(b0 + d.score);
    const bool defaulted = rng.uniform() < p_default;
    const double funded = 25.0 * std::floor(rng.uniform(1000.0, 40000.0) / 25.0);
    const double years = d.term60 ? 5.0 : 3.0;
    double payment;
    if (defaulted) {
      payment = funded * rng.uniform(config.recovery_min, config.recovery_max);
      // Keep payment < funded even after 2-decimal rounding.
      payment = std::min(payment, funded - 0.01);
    } else {
      payment = funded * (1.0 + d.int_rate * years);
    }
    out.true_default_prob.push_back(p_default);
    out.table.rows.push_back({
        "M" + std::to_string(100000 + i),
        fmt(d.fico, 1),
        fmt(d.dti, 2),
        fmt(d.annual_inc, 1),
        fmt(d.revol_util, 1),
        fmt(d.revol_bal, 2),
        fmt(d.util_trend, 4),
        fmt(d.inc_trend, 4),
        fmt(d.int_rate, 4),
        d.msd_missing ? std::string() : fmt(d.months_since_delinq, 1),
        kGrades[d.grade],
        kTerms[d.term60],
        kPurposes[d.purpose],
        kRegions[d.region],
        defaulted ? out.schema.negative_label : out.schema.positive_label,
        fmt(funded, 2),
        fmt(payment, 2),
    });
  }
  return out;
}

}  // namespace lendscore::data
