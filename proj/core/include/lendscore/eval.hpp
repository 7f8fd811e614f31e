#pragma once

#include "lendscore/common.hpp"
#include "lendscore/data.hpp"
#include "lendscore/preprocess.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lendscore::models {
struct ModelSpec;
}

namespace lendscore::eval {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

/// Predict 1 iff score >= t; positive class is label 1 (Fully Paid).
ConfusionMatrix confusion_at_threshold(const Vector& scores, const std::vector<int>& y, double t);

/// Rates derived from a confusion matrix. A zero denominator yields an empty
/// optional (the undefined marker), never NaN.
struct ConfusionMetrics {
  std::optional<double> accuracy;
  std::optional<double> precision;    // PPV
  std::optional<double> sensitivity;  // TPR
  std::optional<double> specificity;  // TNR
  std::optional<double> fpr;
  std::optional<double> f1;
};

ConfusionMetrics metrics_from_confusion(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC polyline over descending unique score thresholds, ties grouped;
/// starts at (0,0) and ends at (1,1). Requires both classes.
std::vector<RocPoint> roc_curve(const Vector& scores, const std::vector<int>& y);

/// Trapezoidal area under roc_curve; equals the tie-corrected rank statistic.
double auc(const Vector& scores, const std::vector<int>& y);

/// Mean negative log-likelihood with probabilities clipped to
/// [1e-15, 1 - 1e-15], natural log.
double log_loss(const Vector& scores, const std::vector<int>& y);

struct MetricRow {
  std::string model;
  std::string sample;  // in_sample | out_sample | cv
  std::optional<double> sensitivity, specificity, accuracy, auc, f1, log_loss;
};

/// Metric row for one scored set at the given threshold.
MetricRow score_metrics(const std::string& model, const std::string& sample, const Vector& scores,
                        const std::vector<int>& y, double threshold);

struct CvSummary {
  std::vector<MetricRow> folds;
  MetricRow mean;
  MetricRow stddev;  // population std over folds
};

using FitScoreFn =
    std::function<Vector(const data::Dataset& train, const data::Dataset& test, int fold)>;

/// Generic stratified cross-validation: for each fold, refits the
/// standardization on the training folds (held-out rows never contribute a
/// statistic), calls fit_score, and collects metrics at t=0.5.
CvSummary cross_validate_with(const data::Dataset& ds, const preprocess::FoldPlan& folds,
                              const FitScoreFn& fit_score, const std::string& model_name);

/// Fits the configured model per fold with a fold seed derived from the
/// ModelSpec seed.
CvSummary cross_validate(const data::Dataset& ds, const models::ModelSpec& spec,
                         const preprocess::FoldPlan& folds);

std::string metric_csv_cell(const std::optional<double>& v);
std::optional<double> parse_metric_cell(const std::string& cell);

/// Metric CSV in Table-2 column order with model/sample tags in front.
void write_metric_rows_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metric_rows_csv(const std::filesystem::path& path);

void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points);

}  // namespace lendscore::eval
