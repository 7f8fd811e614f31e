#include "lendscore/eval.hpp"

#include "lendscore/csv.hpp"
#include "lendscore/models/registry.hpp"
#include "lendscore/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lendscore::eval {

ConfusionMatrix confusion_at_threshold(const Vector& scores, const std::vector<int>& y, double t) {
  if (scores.size() == 0) throw DataError("confusion_at_threshold: empty input");
  if (static_cast<std::size_t>(scores.size()) != y.size()) {
    throw DataError("confusion_at_threshold: length mismatch");
  }
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("threshold must lie in [0,1]");
  ConfusionMatrix cm;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= t;
    const bool actual = y[static_cast<std::size_t>(i)] == 1;
    if (predicted && actual) ++cm.tp;
    else if (predicted && !actual) ++cm.fp;
    else if (!predicted && actual) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

ConfusionMetrics metrics_from_confusion(const ConfusionMatrix& cm) {
  ConfusionMetrics m;
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto tn = static_cast<double>(cm.tn);
  const auto fn = static_cast<double>(cm.fn);
  m.accuracy = ratio(tp + tn, tp + tn + fp + fn);
  m.precision = ratio(tp, tp + fp);
  m.sensitivity = ratio(tp, tp + fn);
  m.specificity = ratio(tn, tn + fp);
  m.fpr = m.specificity ? std::optional<double>(1.0 - *m.specificity) : std::nullopt;
  if (m.precision && m.sensitivity && (*m.precision + *m.sensitivity) > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.sensitivity / (*m.precision + *m.sensitivity);
  }
  return m;
}

std::vector<RocPoint> roc_curve(const Vector& scores, const std::vector<int>& y) {
  if (static_cast<std::size_t>(scores.size()) != y.size() || y.empty()) {
    throw DataError("roc_curve: bad input lengths");
  }
  double pos = 0.0, neg = 0.0;
  for (int label : y) (label == 1 ? pos : neg) += 1.0;
  if (pos == 0.0 || neg == 0.0) throw DataError("roc_curve: both classes required");

  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
  });

  std::vector<RocPoint> points;
  points.push_back({0.0, 0.0});
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[static_cast<Eigen::Index>(order[i])];
    // Consume the whole tie group before emitting a point.
    while (i < order.size() && scores[static_cast<Eigen::Index>(order[i])] == s) {
      if (y[order[i]] == 1) tp += 1.0;
      else fp += 1.0;
      ++i;
    }
    points.push_back({fp / neg, tp / pos});
  }
  return points;
}

double auc(const Vector& scores, const std::vector<int>& y) {
  const auto points = roc_curve(scores, y);
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) * 0.5;
  }
  return area;
}

double log_loss(const Vector& scores, const std::vector<int>& y) {
  if (static_cast<std::size_t>(scores.size()) != y.size() || y.empty()) {
    throw DataError("log_loss: bad input lengths");
  }
  constexpr double kClip = 1e-15;
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double p = std::clamp(scores[i], kClip, 1.0 - kClip);
    total += y[static_cast<std::size_t>(i)] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(scores.size());
}

MetricRow score_metrics(const std::string& model, const std::string& sample, const Vector& scores,
                        const std::vector<int>& y, double threshold) {
  MetricRow row;
  row.model = model;
  row.sample = sample;
  const auto cm = confusion_at_threshold(scores, y, threshold);
  const auto m = metrics_from_confusion(cm);
  row.sensitivity = m.sensitivity;
  row.specificity = m.specificity;
  row.accuracy = m.accuracy;
  row.f1 = m.f1;
  bool both_classes = false;
  {
    bool saw0 = false, saw1 = false;
    for (int label : y) (label == 1 ? saw1 : saw0) = true;
    both_classes = saw0 && saw1;
  }
  row.auc = both_classes ? std::optional<double>(auc(scores, y)) : std::nullopt;
  row.log_loss = log_loss(scores, y);
  return row;
}

CvSummary cross_validate_with(const data::Dataset& ds, const preprocess::FoldPlan& folds,
                              const FitScoreFn& fit_score, const std::string& model_name) {
  if (folds.assignments.size() != ds.rows()) {
    throw DataError("cross_validate: fold plan does not match dataset");
  }
  CvSummary summary;
  for (int f = 0; f < folds.k; ++f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < folds.assignments.size(); ++i) {
      (folds.assignments[i] == f ? test_idx : train_idx).push_back(i);
    }
    if (train_idx.empty() || test_idx.empty()) {
      throw DataError("cross_validate: empty fold " + std::to_string(f));
    }
    data::Dataset train = ds.subset(train_idx);
    data::Dataset test = ds.subset(test_idx);
    // Standardization statistics are refit on the training folds each
    // iteration; the held-out fold only ever sees the fitted transform.
    const auto standardizer = preprocess::Standardizer::fit(train.X);
    train.X = standardizer.apply(train.X);
    test.X = standardizer.apply(test.X);
    Vector scores;
    try {
      scores = fit_score(train, test, f);
    } catch (const Error& e) {
      throw ModelError("cross_validate: fold " + std::to_string(f) + ": " + e.what());
    }
    summary.folds.push_back(score_metrics(model_name, "cv", scores, test.y, 0.5));
  }

  auto aggregate = [&](auto getter) -> std::pair<std::optional<double>, std::optional<double>> {
    std::vector<double> values;
    for (const auto& row : summary.folds) {
      if (auto v = getter(row)) values.push_back(*v);
    }
    if (values.empty()) return {std::nullopt, std::nullopt};
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    return {mean, std::sqrt(var)};
  };

  summary.mean.model = summary.stddev.model = model_name;
  summary.mean.sample = summary.stddev.sample = "cv";
#define LENDSCORE_AGG(field)                                                      \
  {                                                                               \
    auto [m, s] = aggregate([](const MetricRow& r) { return r.field; });          \
    summary.mean.field = m;                                                       \
    summary.stddev.field = s;                                                     \
  }
  LENDSCORE_AGG(sensitivity)
  LENDSCORE_AGG(specificity)
  LENDSCORE_AGG(accuracy)
  LENDSCORE_AGG(auc)
  LENDSCORE_AGG(f1)
  LENDSCORE_AGG(log_loss)
#undef LENDSCORE_AGG
  return summary;
}

CvSummary cross_validate(const data::Dataset& ds, const models::ModelSpec& spec,
                         const preprocess::FoldPlan& folds) {
  return cross_validate_with(
      ds, folds,
      [&spec](const data::Dataset& train, const data::Dataset& test, int fold) {
        models::ModelSpec fold_spec = spec;
        fold_spec.seed = derive_seed(spec.seed, "cv-fold:" + std::to_string(fold));
        return models::fit_model(train, fold_spec)->predict_proba(test.X);
      },
      spec.variant);
}

std::string metric_csv_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : "NA";
}

std::optional<double> parse_metric_cell(const std::string& cell) {
  if (cell == "NA" || cell.empty()) return std::nullopt;
  auto parsed = parse_double(cell);
  if (!parsed) throw DataError("metric csv: cannot parse cell '" + cell + "'");
  return parsed;
}

void write_metric_rows_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  csv::Table table;
  table.header = {"model", "sample", "sensitivity", "specificity", "accuracy", "auc", "f1", "loss"};
  for (const auto& r : rows) {
    table.rows.push_back({r.model, r.sample, metric_csv_cell(r.sensitivity),
                          metric_csv_cell(r.specificity), metric_csv_cell(r.accuracy),
                          metric_csv_cell(r.auc), metric_csv_cell(r.f1),
                          metric_csv_cell(r.log_loss)});
  }
  csv::write(path, table);
}

std::vector<MetricRow> read_metric_rows_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::vector<std::string> expected = {"model",    "sample", "sensitivity", "specificity",
                                             "accuracy", "auc",    "f1",          "loss"};
  if (table.header != expected) throw DataError("metric csv: unexpected header in " + path.string());
  std::vector<MetricRow> rows;
  for (const auto& r : table.rows) {
    MetricRow row;
    row.model = r[0];
    row.sample = r[1];
    row.sensitivity = parse_metric_cell(r[2]);
    row.specificity = parse_metric_cell(r[3]);
    row.accuracy = parse_metric_cell(r[4]);
    row.auc = parse_metric_cell(r[5]);
    row.f1 = parse_metric_cell(r[6]);
    row.log_loss = parse_metric_cell(r[7]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points) {
  csv::Table table;
  table.header = {"fpr", "tpr"};
  for (const auto& p : points) {
    table.rows.push_back({format_double(p.fpr), format_double(p.tpr)});
  }
  csv::write(path, table);
}

}  // namespace lendscore::eval
