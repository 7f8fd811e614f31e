#pragma once

#include "lendscore/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lendscore::invest {

/// Scored loans with realized economics. score is P(Fully Paid); acceptance
/// is score >= threshold.
struct LoanBook {
  Vector scores;
  std::vector<double> funded_amount;
  std::vector<double> total_payment;
  std::vector<int> labels;

  std::size_t size() const { return static_cast<std::size_t>(scores.size()); }
  void validate() const;
};

/// (sum payments - sum funded) / sum funded over the accepted rows; an empty
/// portfolio yields the no-investment marker (empty optional), never NaN.
std::optional<double> roi(const LoanBook& book, const std::vector<std::size_t>& accepted);

std::vector<std::size_t> accept_at(const LoanBook& book, double threshold);

struct ThresholdRow {
  double threshold = 0.0;
  std::optional<double> roi;  // empty = no investment at this threshold
  std::optional<double> sensitivity, specificity, accuracy;
  std::optional<double> roc_auc;  // threshold-free; constant down a sweep
  double accepted_rate = 0.0;
  std::optional<double> log_loss;
};

/// Thresholds 0..1 inclusive on a uniform grid; step must divide 1 evenly
/// enough that round(1/step) steps land on 1.0.
std::vector<double> default_grid(double step = 0.01);

/// One row per grid threshold: portfolio ROI, confusion metrics at the
/// threshold, accepted rate, plus the sweep-constant AUC and log loss.
/// A one-class book leaves the AUC column undefined but still sweeps.
std::vector<ThresholdRow> threshold_sweep(const LoanBook& book, const std::vector<double>& grid);

struct OptimalPick {
  bool all_rejected = false;          // every grid row was no-investment
  bool rejection_dominates = false;   // best attainable roi is negative
  std::optional<ThresholdRow> row;
};

/// Max-ROI row among rows with a real ROI; ties break toward the smallest
/// threshold (more loans accepted at equal profit).
OptimalPick optimal_threshold(const std::vector<ThresholdRow>& sweep);

/// Sweep CSV in Table 5/6 column order.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<ThresholdRow>& rows);
std::vector<ThresholdRow> read_sweep_csv(const std::filesystem::path& path);

/// Two-column (threshold, roi) curve data.
void write_roi_curve_csv(const std::filesystem::path& path, const std::vector<ThresholdRow>& rows);

}  // namespace lendscore::invest
