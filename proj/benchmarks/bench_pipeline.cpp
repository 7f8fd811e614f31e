#include "lendscore/eval.hpp"
#include "lendscore/explain.hpp"
#include "lendscore/invest.hpp"
#include "lendscore/models/registry.hpp"
#include "lendscore/preprocess.hpp"
#include "lendscore/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

using namespace lendscore;

namespace {

struct BenchData {
  data::Dataset train;
  data::Dataset test;
  preprocess::FittedTransform transform;
};

const BenchData& bench_data(std::size_t n) {
  static std::map<std::size_t, BenchData> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  const auto synthetic = data::generate_synthetic(n, 7, data::GeneratorConfig{});
  const auto target = data::map_target(synthetic.table, synthetic.schema);
  preprocess::PreprocessPlan plan;
  plan.drop_columns = {"member_id"};
  const auto split = preprocess::split_train_test(target.labels, 0.7, 7);
  std::vector<std::size_t> train_rows, test_rows;
  for (auto i : split.train) train_rows.push_back(target.kept_rows[i]);
  for (auto i : split.test) test_rows.push_back(target.kept_rows[i]);
  auto fitted = preprocess::fit_transform(synthetic.table, synthetic.schema, plan, train_rows);

  BenchData out;
  out.transform = fitted.transform;
  out.train.X = fitted.transform.apply(synthetic.table, train_rows);
  out.train.feature_names = fitted.transform.encoded_names;
  for (auto i : split.train) out.train.y.push_back(target.labels[i]);
  out.test.X = fitted.transform.apply(synthetic.table, test_rows);
  out.test.feature_names = fitted.transform.encoded_names;
  for (auto i : split.test) out.test.y.push_back(target.labels[i]);
  return cache.emplace(n, std::move(out)).first->second;
}

void BM_generate_synthetic(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto synthetic = data::generate_synthetic(n, 7, data::GeneratorConfig{});
    benchmark::DoNotOptimize(synthetic.table.rows.size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_generate_synthetic)->Arg(1000)->Arg(10000);

void BM_fit_transform(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto synthetic = data::generate_synthetic(n, 7, data::GeneratorConfig{});
  const auto target = data::map_target(synthetic.table, synthetic.schema);
  preprocess::PreprocessPlan plan;
  plan.drop_columns = {"member_id"};
  for (auto _ : state) {
    auto fitted = preprocess::fit_transform(synthetic.table, synthetic.schema, plan,
                                            target.kept_rows);
    benchmark::DoNotOptimize(fitted.transform.encoded_width());
  }
}
BENCHMARK(BM_fit_transform)->Arg(2000)->Arg(10000);

void BM_fit_logistic(benchmark::State& state) {
  const auto& bd = bench_data(static_cast<std::size_t>(state.range(0)));
  models::LogisticSpec spec;
  for (auto _ : state) {
    auto model = models::fit_logistic(bd.train, spec);
    benchmark::DoNotOptimize(model->dimension());
  }
}
BENCHMARK(BM_fit_logistic)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_fit_random_forest(benchmark::State& state) {
  const auto& bd = bench_data(4000);
  models::ForestSpec spec;
  spec.n_estimators = static_cast<int>(state.range(0));
  spec.max_depth = 10;
  spec.seed = 7;
  for (auto _ : state) {
    auto model = models::fit_random_forest(bd.train, spec);
    benchmark::DoNotOptimize(model->dimension());
  }
}
BENCHMARK(BM_fit_random_forest)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_fit_mlp_epoch(benchmark::State& state) {
  const auto& bd = bench_data(4000);
  models::MlpSpec spec;
  spec.hidden = {200, 100, 40};
  spec.epochs = 1;
  spec.patience = 1;
  spec.seed = 7;
  for (auto _ : state) {
    auto model = models::fit_mlp(bd.train, spec);
    benchmark::DoNotOptimize(model->dimension());
  }
}
BENCHMARK(BM_fit_mlp_epoch)->Unit(benchmark::kMillisecond);

void BM_predict_forest(benchmark::State& state) {
  const auto& bd = bench_data(4000);
  models::ForestSpec spec;
  spec.n_estimators = 50;
  spec.max_depth = 10;
  spec.seed = 7;
  const auto model = models::fit_random_forest(bd.train, spec);
  for (auto _ : state) {
    auto scores = model->predict_proba(bd.test.X);
    benchmark::DoNotOptimize(scores.sum());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(bd.test.rows()));
}
BENCHMARK(BM_predict_forest)->Unit(benchmark::kMillisecond);

void BM_kernel_shap(benchmark::State& state) {
  const auto& bd = bench_data(4000);
  models::LogisticSpec spec;
  const auto model = models::fit_logistic(bd.train, spec);
  explain::ValueFunctionCtx ctx;
  ctx.f = [&model](const Matrix& rows) { return model->predict_proba(rows); };
  ctx.x = bd.test.X.row(0).transpose();
  ctx.background = bd.train.X.topRows(50);
  ctx.grouping = explain::FeatureGrouping::from_transform(bd.transform);
  const auto draws = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto expl = explain::kernel_shap(ctx, draws, 7);
    benchmark::DoNotOptimize(expl.phi.sum());
  }
}
BENCHMARK(BM_kernel_shap)->Arg(0)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_lime_explain(benchmark::State& state) {
  const auto& bd = bench_data(4000);
  models::LogisticSpec spec;
  const auto model = models::fit_logistic(bd.train, spec);
  explain::ValueFunctionCtx ctx;
  ctx.f = [&model](const Matrix& rows) { return model->predict_proba(rows); };
  ctx.x = bd.test.X.row(0).transpose();
  ctx.background = bd.train.X.topRows(20);
  ctx.grouping = explain::FeatureGrouping::from_transform(bd.transform);
  const auto stats = explain::LimeStats::from_training(bd.train.X, ctx.grouping);
  const auto samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto expl = explain::lime_explain(ctx, stats, explain::LimeMode::discretized, samples, 10,
                                      0.0, 1.0, 7);
    benchmark::DoNotOptimize(expl.intercept);
  }
}
BENCHMARK(BM_lime_explain)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_threshold_sweep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  invest::LoanBook book;
  book.scores.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    book.labels.push_back(rng.uniform() < 0.75 ? 1 : 0);
    book.scores[static_cast<Eigen::Index>(i)] =
        std::clamp(0.5 * book.labels[i] + 0.5 * rng.uniform(), 0.0, 1.0);
    book.funded_amount.push_back(1000.0 + 100.0 * rng.uniform());
    book.total_payment.push_back(book.labels[i] ? 1300.0 : 400.0);
  }
  const auto grid = invest::default_grid(0.01);
  for (auto _ : state) {
    auto rows = invest::threshold_sweep(book, grid);
    benchmark::DoNotOptimize(rows.size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid.size()));
}
BENCHMARK(BM_threshold_sweep)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
