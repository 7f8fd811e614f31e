#include "lendscore/commands.hpp"

#include "lendscore/csv.hpp"
#include "lendscore/eval.hpp"
#include "lendscore/invest.hpp"
#include "lendscore/rng.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>

using namespace lendscore;
using namespace lendscore::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "lendscore_test_commands" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig synthetic_config(const fs::path& out, std::size_t n, const std::string& models,
                           const std::string& extra = "") {
  KvConfig cfg = KvConfig::parse_string(
      "seed=7\n"
      "input.synthetic.n=" + std::to_string(n) + "\n" +
      "preprocess.drop_columns=member_id\n"
      "preprocess.k_folds=4\n"
      "models=" + models + "\n" +
      "decision_tree.max_depth=4\n"
      "random_forest.n_estimators=8\n"
      "random_forest.max_depth=5\n"
      "mlp.layers=6,3\n"
      "mlp.epochs=5\n"
      "mlp.batch_size=64\n"
      "explain.background_size=40\n"
      "explain.lime_samples=600\n"
      "explain.n_coalitions=256\n" +
      extra);
  cfg.set("out", out.string());
  return RunConfig::from_kv(std::move(cfg));
}

std::string slurp(const fs::path& p) { return csv::read_text(p); }

}  // namespace

TEST_CASE("config loading enforces mandatory seed, out, and input") {
  KvConfig cfg = KvConfig::parse_string("input.synthetic.n=100\nout=/tmp/x\n");
  CHECK_THROWS_WITH_AS(RunConfig::from_kv(cfg), doctest::Contains("seed"), ConfigError);

  cfg = KvConfig::parse_string("seed=1\ninput.synthetic.n=100\n");
  CHECK_THROWS_WITH_AS(RunConfig::from_kv(cfg), doctest::Contains("out"), ConfigError);

  cfg = KvConfig::parse_string("seed=1\nout=/tmp/x\n");
  CHECK_THROWS_WITH_AS(RunConfig::from_kv(cfg), doctest::Contains("input"), ConfigError);

  cfg = KvConfig::parse_string("seed=1\nout=/tmp/x\ninput.synthetic.n=10\nmodels=gbm\n");
  CHECK_THROWS_WITH_AS(RunConfig::from_kv(cfg), doctest::Contains("gbm"), ConfigError);
}

TEST_CASE("prepare writes exactly the four dataset artifacts") {
  const auto out = fresh_dir("prepare");
  const auto config = synthetic_config(out, 1000, "logistic_l2");
  const auto result = cmd_prepare(config);
  CHECK(result.exit_code == 0);

  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(out)) {
    names.insert(entry.path().filename().string());
  }
  CHECK(names == std::set<std::string>{"train_encoded.csv", "test_encoded.csv", "transform.json",
                                       "cleaning_report.json"});

  const auto train = read_encoded_csv(out / "train_encoded.csv");
  const auto test = read_encoded_csv(out / "test_encoded.csv");
  CHECK(train.rows() == 700);
  CHECK(test.rows() == 300);
  CHECK(train.economics.has_value());
  CHECK(train.cols() == test.cols());

  const auto report = nlohmann::json::parse(slurp(out / "cleaning_report.json"));
  CHECK(report["rows_total"] == 1000);
  CHECK(report["dropped_identifiers"][0] == "member_id");
}

TEST_CASE("prepare reruns are byte-identical") {
  const auto out = fresh_dir("prepare_repeat");
  const auto config = synthetic_config(out, 400, "logistic_l2");
  cmd_prepare(config);
  const auto first_train = slurp(out / "train_encoded.csv");
  const auto first_transform = slurp(out / "transform.json");
  cmd_prepare(config);
  CHECK(slurp(out / "train_encoded.csv") == first_train);
  CHECK(slurp(out / "transform.json") == first_transform);
}

TEST_CASE("missing input path exits with code 2 and a machine-readable error") {
  const auto out = fresh_dir("missing_input");
  KvConfig cfg = KvConfig::parse_string(
      "seed=1\n"
      "input.csv=/nonexistent/loans.csv\n"
      "schema.target=loan_status\n"
      "schema.positive=Fully Paid\n"
      "schema.negative=Default\n"
      "schema.numeric=a\n");
  cfg.set("out", out.string());
  const auto config = RunConfig::from_kv(std::move(cfg));
  CHECK(run_command("prepare", config) == 2);
}

TEST_CASE("train, evaluate, explain, sweep, and report produce their artifacts") {
  const auto out = fresh_dir("full");
  const auto config = synthetic_config(out, 900, "logistic_l2,decision_tree");
  REQUIRE(cmd_prepare(config).exit_code == 0);
  REQUIRE(cmd_train(config).exit_code == 0);
  CHECK(fs::exists(out / "model_logistic_l2.json"));
  CHECK(fs::exists(out / "model_decision_tree.json"));

  REQUIRE(cmd_evaluate(config).exit_code == 0);
  const auto in_sample = eval::read_metric_rows_csv(out / "metrics_insample.csv");
  const auto out_sample = eval::read_metric_rows_csv(out / "metrics_outsample.csv");
  CHECK(in_sample.size() == 2);
  CHECK(out_sample.size() == 2);
  CHECK(in_sample[0].model == "logistic_l2");
  CHECK(in_sample[0].auc.has_value());
  CHECK(fs::exists(out / "roc_logistic_l2_insample.csv"));
  CHECK(fs::exists(out / "roc_decision_tree_outsample.csv"));
  {
    const auto cv = csv::read(out / "metrics_cv.csv");
    CHECK(cv.rows.size() == 2);
    CHECK(cv.header[0] == "model");
    CHECK(cv.header[8] == "sensitivity_std");
  }

  // Replaying evaluation from the serialized models is identical.
  const auto first_metrics = slurp(out / "metrics_outsample.csv");
  REQUIRE(cmd_evaluate(config).exit_code == 0);
  CHECK(slurp(out / "metrics_outsample.csv") == first_metrics);

  REQUIRE(cmd_explain(config, {"logistic_l2"}).exit_code == 0);
  CHECK(fs::exists(out / "lime_logistic_l2_i0.csv"));
  CHECK(fs::exists(out / "lime_logistic_l2_i0.json"));
  CHECK(fs::exists(out / "shap_logistic_l2_i0.csv"));
  CHECK(fs::exists(out / "shap_logistic_l2_i0.json"));
  CHECK(fs::exists(out / "shap_summary_logistic_l2.csv"));
  CHECK(fs::exists(out / "shap_points_logistic_l2.csv"));
  const auto sidecar = nlohmann::json::parse(slurp(out / "shap_logistic_l2_i0.json"));
  CHECK(sidecar.contains("base_value"));
  CHECK(sidecar["method"] == "kernel_sampled");

  // SHAP local accuracy holds in the emitted artifacts.
  {
    const auto table = csv::read(out / "shap_logistic_l2_i0.csv");
    double total = 0.0;
    for (const auto& row : table.rows) total += *parse_double(row[2]);
    const double fx = sidecar["fx"].get<double>();
    const double base = sidecar["base_value"].get<double>();
    CHECK(base + total == doctest::Approx(fx).epsilon(1e-8));
  }

  REQUIRE(cmd_sweep(config).exit_code == 0);
  const auto sweep = invest::read_sweep_csv(out / "sweep_logistic_l2.csv");
  CHECK(sweep.size() == 101);
  CHECK(fs::exists(out / "roi_curve_decision_tree.csv"));
  const auto optima = csv::read(out / "optimal_thresholds.csv");
  CHECK(optima.rows.size() == 2);

  REQUIRE(cmd_report(config).exit_code == 0);
  CHECK(fs::exists(out / "report.md"));
  CHECK(fs::exists(out / "report.json"));
  CHECK(slurp(out / "report.md").find("optimal_thresholds") != std::string::npos);
}

TEST_CASE("explain rejects an out-of-range instance index") {
  const auto out = fresh_dir("bad_instance");
  auto config = synthetic_config(out, 300, "logistic_l2", "explain.instances=99999\n");
  REQUIRE(cmd_prepare(config).exit_code == 0);
  REQUIRE(cmd_train(config).exit_code == 0);
  CHECK(run_command("explain", config) == 2);
}

TEST_CASE("explain honors the exact method when M fits the oracle bound") {
  const auto out = fresh_dir("exact_method");
  auto config = synthetic_config(out, 300, "logistic_l2", "explain.method=exact\n");
  REQUIRE(cmd_prepare(config).exit_code == 0);
  REQUIRE(cmd_train(config).exit_code == 0);
  // The synthetic table keeps ~10 interpretable features, inside the 2^M
  // bound; the refusal path for M > 12 is covered in test_explain.
  const auto result = cmd_explain(config, {"logistic_l2"});
  CHECK(result.exit_code == 0);
  const auto sidecar = nlohmann::json::parse(slurp(out / "shap_logistic_l2_i0.json"));
  CHECK(sidecar["method"] == "exact");
}

TEST_CASE("a failing model is reported while the rest continue") {
  const auto out = fresh_dir("partial_failure");
  const auto config =
      synthetic_config(out, 300, "logistic_l2,adaboost", "adaboost.learning_rate=0\n");
  REQUIRE(cmd_prepare(config).exit_code == 0);
  const auto result = cmd_train(config);
  CHECK(result.exit_code == 1);
  CHECK(result.failed_models == std::vector<std::string>{"adaboost"});
  CHECK(fs::exists(out / "model_logistic_l2.json"));
  CHECK(!fs::exists(out / "model_adaboost.json"));
  const auto report = nlohmann::json::parse(slurp(out / "train_report.json"));
  CHECK(report["models"]["adaboost"]["status"] == "error");
  CHECK(report["models"]["logistic_l2"]["status"] == "ok");
}

TEST_CASE("exact oracle on 20 features refuses with kernel guidance") {
  const auto out = fresh_dir("exact_too_wide");
  const auto csv_path = out / "wide.csv";
  std::ofstream file(csv_path);
  file << "status";
  for (int j = 0; j < 20; ++j) file << ",x" << j;
  file << "\n";
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    file << (rng.uniform() < 0.5 ? "Fully Paid" : "Default");
    for (int j = 0; j < 20; ++j) file << "," << format_double(rng.normal());
    file << "\n";
  }
  file.close();

  KvConfig cfg = KvConfig::parse_string(
      "seed=5\n"
      "schema.target=status\n"
      "schema.positive=Fully Paid\n"
      "schema.negative=Default\n"
      "models=logistic_l2\n"
      "explain.method=exact\n");
  std::string numerics = "x0";
  for (int j = 1; j < 20; ++j) numerics += ",x" + std::to_string(j);
  cfg.set("schema.numeric", numerics);
  cfg.set("input.csv", csv_path.string());
  cfg.set("out", out.string());
  const auto config = RunConfig::from_kv(std::move(cfg));
  REQUIRE(cmd_prepare(config).exit_code == 0);
  REQUIRE(cmd_train(config).exit_code == 0);
  // M = 20 exceeds the 2^M oracle bound; the error directs to kernel_shap and
  // the failure surfaces as a per-model failure (exit 1).
  const auto result = cmd_explain(config);
  CHECK(result.exit_code == 1);
  CHECK(result.failed_models == std::vector<std::string>{"logistic_l2"});
}

TEST_CASE("sweep without economics columns names the missing columns") {
  const auto out = fresh_dir("no_econ");
  // CSV-mode fixture without funded/payment columns.
  const auto csv_path = out / "loans.csv";
  std::ofstream file(csv_path);
  file << "fico,status\n";
  for (int i = 0; i < 120; ++i) {
    file << (600 + i % 100) << "," << (i % 4 ? "Fully Paid" : "Default") << "\n";
  }
  file.close();
  KvConfig cfg = KvConfig::parse_string(
      "seed=3\n"
      "schema.target=status\n"
      "schema.positive=Fully Paid\n"
      "schema.negative=Default\n"
      "schema.numeric=fico\n"
      "models=logistic_l2\n");
  cfg.set("input.csv", csv_path.string());
  cfg.set("out", out.string());
  const auto config = RunConfig::from_kv(std::move(cfg));
  REQUIRE(cmd_prepare(config).exit_code == 0);
  REQUIRE(cmd_train(config).exit_code == 0);
  CHECK(run_command("sweep", config) == 2);
}
