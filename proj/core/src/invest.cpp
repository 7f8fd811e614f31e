#include "lendscore/invest.hpp"

#include "lendscore/csv.hpp"
#include "lendscore/eval.hpp"

#include <cmath>

namespace lendscore::invest {

void LoanBook::validate() const {
  const auto n = size();
  if (funded_amount.size() != n || total_payment.size() != n || labels.size() != n) {
    throw DataError("loan book: column lengths differ");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(scores[static_cast<Eigen::Index>(i)] >= 0.0 &&
          scores[static_cast<Eigen::Index>(i)] <= 1.0)) {
      throw DataError("loan book: score outside [0,1] at row " + std::to_string(i));
    }
    if (funded_amount[i] <= 0.0) {
      throw DataError("loan book: funded_amount must be > 0 at row " + std::to_string(i));
    }
    if (total_payment[i] < 0.0) {
      throw DataError("loan book: total_payment must be >= 0 at row " + std::to_string(i));
    }
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError("loan book: labels must be 0/1");
    }
  }
}

std::optional<double> roi(const LoanBook& book, const std::vector<std::size_t>& accepted) {
  if (accepted.empty()) return std::nullopt;
  double gain = 0.0, cost = 0.0;
  for (std::size_t i : accepted) {
    if (i >= book.size()) throw DataError("roi: accepted index out of range");
    gain += book.total_payment[i];
    cost += book.funded_amount[i];
  }
  return (gain - cost) / cost;
}

std::vector<std::size_t> accept_at(const LoanBook& book, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("accept_at: threshold must lie in [0,1]");
  }
  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < book.size(); ++i) {
    if (book.scores[static_cast<Eigen::Index>(i)] >= threshold) accepted.push_back(i);
  }
  return accepted;
}

std::vector<double> default_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ConfigError("grid step must lie in (0,1]");
  const auto n_steps = static_cast<long long>(std::llround(1.0 / step));
  if (n_steps < 1) throw ConfigError("grid step too large");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n_steps) + 1);
  for (long long i = 0; i <= n_steps; ++i) {
    grid.push_back(static_cast<double>(i) / static_cast<double>(n_steps));
  }
  return grid;
}

std::vector<ThresholdRow> threshold_sweep(const LoanBook& book, const std::vector<double>& grid) {
  book.validate();
  if (grid.empty()) throw ConfigError("threshold_sweep: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] > 1.0 || (i > 0 && grid[i] <= grid[i - 1])) {
      throw ConfigError("threshold_sweep: grid must be ascending within [0,1]");
    }
  }

  bool saw0 = false, saw1 = false;
  for (int label : book.labels) (label == 1 ? saw1 : saw0) = true;
  std::optional<double> auc_value;
  if (saw0 && saw1) auc_value = eval::auc(book.scores, book.labels);
  const double loss = eval::log_loss(book.scores, book.labels);

  std::vector<ThresholdRow> rows;
  rows.reserve(grid.size());
  for (double t : grid) {
    ThresholdRow row;
    row.threshold = t;
    const auto accepted = accept_at(book, t);
    row.roi = roi(book, accepted);
    row.accepted_rate = static_cast<double>(accepted.size()) / static_cast<double>(book.size());
    const auto cm = eval::confusion_at_threshold(book.scores, book.labels, t);
    const auto m = eval::metrics_from_confusion(cm);
    row.sensitivity = m.sensitivity;
    row.specificity = m.specificity;
    row.accuracy = m.accuracy;
    row.roc_auc = auc_value;
    row.log_loss = loss;
    rows.push_back(std::move(row));
  }
  return rows;
}

OptimalPick optimal_threshold(const std::vector<ThresholdRow>& sweep) {
  if (sweep.empty()) throw ConfigError("optimal_threshold: empty sweep");
  OptimalPick pick;
  for (const auto& row : sweep) {
    if (!row.roi) continue;
    if (!pick.row || *row.roi > *pick.row->roi) {
      pick.row = row;
    }
  }
  if (!pick.row) {
    pick.all_rejected = true;
    return pick;
  }
  pick.rejection_dominates = *pick.row->roi < 0.0;
  return pick;
}

namespace {

const std::vector<std::string> kSweepHeader = {"roi",      "threshold",     "sensitivity",
                                               "specificity", "accuracy",   "roc_auc",
                                               "accepted_rate", "loss"};

}  // namespace

void write_sweep_csv(const std::filesystem::path& path, const std::vector<ThresholdRow>& rows) {
  csv::Table table;
  table.header = kSweepHeader;
  for (const auto& r : rows) {
    table.rows.push_back({eval::metric_csv_cell(r.roi), format_double(r.threshold),
                          eval::metric_csv_cell(r.sensitivity),
                          eval::metric_csv_cell(r.specificity), eval::metric_csv_cell(r.accuracy),
                          eval::metric_csv_cell(r.roc_auc), format_double(r.accepted_rate),
                          eval::metric_csv_cell(r.log_loss)});
  }
  csv::write(path, table);
}

std::vector<ThresholdRow> read_sweep_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  if (table.header != kSweepHeader) {
    throw DataError("sweep csv: unexpected header in " + path.string());
  }
  std::vector<ThresholdRow> rows;
  for (const auto& r : table.rows) {
    ThresholdRow row;
    row.roi = eval::parse_metric_cell(r[0]);
    if (auto t = parse_double(r[1])) row.threshold = *t;
    else throw DataError("sweep csv: bad threshold '" + r[1] + "'");
    row.sensitivity = eval::parse_metric_cell(r[2]);
    row.specificity = eval::parse_metric_cell(r[3]);
    row.accuracy = eval::parse_metric_cell(r[4]);
    row.roc_auc = eval::parse_metric_cell(r[5]);
    if (auto a = parse_double(r[6])) row.accepted_rate = *a;
    else throw DataError("sweep csv: bad accepted_rate '" + r[6] + "'");
    row.log_loss = eval::parse_metric_cell(r[7]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_roi_curve_csv(const std::filesystem::path& path, const std::vector<ThresholdRow>& rows) {
  csv::Table table;
  table.header = {"threshold", "roi"};
  for (const auto& r : rows) {
    table.rows.push_back({format_double(r.threshold), eval::metric_csv_cell(r.roi)});
  }
  csv::write(path, table);
}

}  // namespace lendscore::invest
