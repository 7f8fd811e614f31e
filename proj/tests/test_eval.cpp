#include "lendscore/eval.hpp"

#include "lendscore/models/logistic.hpp"
#include "lendscore/models/registry.hpp"
#include "lendscore/rng.hpp"
#include "testutil.hpp"

#include <doctest.h>

#include <cmath>

using namespace lendscore;
using namespace lendscore::eval;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("confusion at threshold with the inclusive tie rule") {
  auto cm = confusion_at_threshold(vec({0.9, 0.1}), {1, 0}, 0.5);
  CHECK(cm.tp == 1);
  CHECK(cm.tn == 1);
  CHECK(cm.fp == 0);
  CHECK(cm.fn == 0);

  cm = confusion_at_threshold(vec({0.9, 0.1, 0.2}), {1, 0, 0}, 0.0);
  CHECK(cm.tp == 1);  // all predicted positive
  CHECK(cm.fp == 2);
  CHECK(cm.tn == 0);

  cm = confusion_at_threshold(vec({0.5}), {0}, 0.5);
  CHECK(cm.fp == 1);  // score == t counts as accepted

  CHECK_THROWS_AS(confusion_at_threshold(Vector(), {}, 0.5), DataError);
}

TEST_CASE("metrics from confusion follow the formula table") {
  // tp=2 tn=3 fp=1 fn=4. F1 = 2*PPV*TPR/(PPV+TPR) with PPV=2/3, TPR=1/3 is
  // exactly 4/9.
  const auto m = metrics_from_confusion({2, 1, 3, 4});
  CHECK(*m.accuracy == doctest::Approx(0.5));
  CHECK(*m.sensitivity == doctest::Approx(1.0 / 3.0));
  CHECK(*m.specificity == doctest::Approx(0.75));
  CHECK(*m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(*m.fpr == doctest::Approx(0.25));
  CHECK(*m.f1 == doctest::Approx(4.0 / 9.0));

  const auto undefined = metrics_from_confusion({0, 0, 3, 4});
  CHECK(!undefined.precision.has_value());
  CHECK(!undefined.f1.has_value());
  CHECK(undefined.specificity.has_value());

  const auto perfect = metrics_from_confusion({5, 0, 5, 0});
  CHECK(*perfect.accuracy == 1.0);
  CHECK(*perfect.sensitivity == 1.0);
  CHECK(*perfect.specificity == 1.0);
  CHECK(*perfect.f1 == 1.0);
}

TEST_CASE("roc and auc basics") {
  CHECK(auc(vec({0.9, 0.8, 0.2, 0.1}), {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(auc(vec({0.5, 0.5, 0.5, 0.5}), {1, 0, 1, 0}) == doctest::Approx(0.5));
  CHECK(auc(vec({0.1, 0.4, 0.35, 0.8}), {0, 0, 1, 1}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(auc(vec({0.1, 0.2}), {1, 1}), DataError);

  const auto points = roc_curve(vec({0.9, 0.1}), {1, 0});
  REQUIRE(points.size() == 3);
  CHECK(points.front().fpr == 0.0);
  CHECK(points.back().tpr == 1.0);
}

TEST_CASE("auc equals the pair-counting oracle on random tied data") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng.uniform_index(96);
    Vector scores(static_cast<Eigen::Index>(n));
    std::vector<int> y(n);
    bool saw[2] = {false, false};
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid of score values forces plenty of ties.
      scores[static_cast<Eigen::Index>(i)] = static_cast<double>(rng.uniform_index(7)) / 6.0;
      y[i] = rng.uniform() < 0.4 ? 1 : 0;
      saw[static_cast<std::size_t>(y[i])] = true;
    }
    if (!saw[0] || !saw[1]) continue;
    CHECK(std::abs(auc(scores, y) - testutil::auc_pair_oracle(scores, y)) <= 1e-12);
  }
}

TEST_CASE("auc properties: complement and monotone invariance") {
  Rng rng(123);
  Vector scores(40);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    scores[i] = rng.uniform();  // continuous: ties have probability zero
    y[static_cast<std::size_t>(i)] = i % 3 == 0 ? 1 : 0;
  }
  const double a = auc(scores, y);
  Vector flipped = Vector::Constant(40, 1.0) - scores;
  CHECK(a + auc(flipped, y) == doctest::Approx(1.0).epsilon(1e-12));

  // Rank statistics only use ordering, so any strictly increasing transform
  // leaves the pair-count oracle unchanged.
  Vector transformed(40);
  for (int i = 0; i < 40; ++i) transformed[i] = std::exp(3.0 * scores[i]) + 5.0;
  CHECK(testutil::auc_pair_oracle(transformed, y) == doctest::Approx(a).epsilon(1e-12));
  CHECK(auc(scores.array().pow(3).matrix(), y) == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("log loss identities") {
  CHECK(log_loss(vec({1.0, 0.0}), {1, 0}) <= 1e-12);
  CHECK(log_loss(vec({0.5, 0.5, 0.5}), {1, 0, 1}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(log_loss(vec({0.75}), {1}) == doctest::Approx(0.2876820724517809).epsilon(1e-12));
}

TEST_CASE("accuracy at a threshold recomputes from the confusion matrix") {
  Rng rng(7);
  Vector scores(60);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    scores[i] = rng.uniform();
    y[static_cast<std::size_t>(i)] = rng.uniform() < 0.5 ? 1 : 0;
  }
  for (int trial = 0; trial < 50; ++trial) {
    const double t = rng.uniform();
    const auto cm = confusion_at_threshold(scores, y, t);
    const auto m = metrics_from_confusion(cm);
    CHECK(*m.accuracy ==
          doctest::Approx(static_cast<double>(cm.tp + cm.tn) / 60.0).epsilon(1e-15));
  }
}

TEST_CASE("cross-validation with a constant-prediction double") {
  // With a scorer that always says 0.7 (class 1 at t=0.5), fold accuracy is
  // the fold's class-1 share.
  auto ds = testutil::make_blobs(40, 2, 1.0, 5);
  const auto folds = preprocess::make_stratified_folds(ds.y, 4, 3);
  const auto summary = cross_validate_with(
      ds, folds,
      [](const data::Dataset&, const data::Dataset& test, int) {
        return Vector::Constant(static_cast<Eigen::Index>(test.rows()), 0.7);
      },
      "constant");
  REQUIRE(summary.folds.size() == 4);
  for (const auto& fold : summary.folds) {
    CHECK(*fold.accuracy == doctest::Approx(0.5));  // blobs are perfectly balanced
    CHECK(*fold.sensitivity == doctest::Approx(1.0));
    CHECK(*fold.specificity == doctest::Approx(0.0));
  }
  CHECK(*summary.mean.accuracy == doctest::Approx(0.5));
  CHECK(*summary.stddev.accuracy == doctest::Approx(0.0));
}

TEST_CASE("cross-validation is deterministic and aggregates sanely") {
  auto encoded = testutil::encoded_synthetic(800, 7, data::GeneratorConfig{});
  const auto folds = preprocess::make_stratified_folds(encoded.train.y, 5, 7);
  auto fit = [&](const data::Dataset& train, const data::Dataset& test, int) {
    models::LogisticSpec spec;
    spec.lambda = 1e-3;
    return models::fit_logistic(train, spec)->predict_proba(test.X);
  };
  const auto a = cross_validate_with(encoded.train, folds, fit, "logistic_l2");
  const auto b = cross_validate_with(encoded.train, folds, fit, "logistic_l2");
  REQUIRE(a.folds.size() == 5);
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(*a.folds[f].accuracy == *b.folds[f].accuracy);
    CHECK(*a.folds[f].auc == *b.folds[f].auc);
  }
  double lo = 1.0, hi = 0.0;
  for (const auto& fold : a.folds) {
    lo = std::min(lo, *fold.accuracy);
    hi = std::max(hi, *fold.accuracy);
  }
  CHECK(*a.mean.accuracy >= lo);
  CHECK(*a.mean.accuracy <= hi);
  CHECK(*a.stddev.accuracy >= 0.0);
}

TEST_CASE("metric csv round-trips through its reader") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "lendscore_test_eval";
  fs::create_directories(dir);
  std::vector<MetricRow> rows(2);
  rows[0].model = "logistic_l2";
  rows[0].sample = "in_sample";
  rows[0].sensitivity = 0.25;
  rows[0].auc = 0.875;
  rows[0].log_loss = 0.1234567890123;
  rows[1].model = "qda";
  rows[1].sample = "out_sample";  // all metrics undefined
  write_metric_rows_csv(dir / "m.csv", rows);
  const auto loaded = read_metric_rows_csv(dir / "m.csv");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].model == "logistic_l2");
  CHECK(*loaded[0].sensitivity == 0.25);
  CHECK(*loaded[0].auc == 0.875);
  CHECK(*loaded[0].log_loss == 0.1234567890123);
  CHECK(!loaded[1].sensitivity.has_value());
  fs::remove_all(dir);
}
