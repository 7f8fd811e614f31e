#include "lendscore/data.hpp"
#include "lendscore/eval.hpp"
#include "lendscore/models/logistic.hpp"
#include "lendscore/preprocess.hpp"
#include "lendscore/synthetic.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace lendscore;
namespace fs = std::filesystem;

namespace {

data::FeatureSchema tiny_schema() {
  data::FeatureSchema schema;
  schema.columns = {{"amount", data::ColumnKind::numeric, {}},
                    {"grade", data::ColumnKind::categorical, {}}};
  schema.target_name = "status";
  schema.positive_label = "Fully Paid";
  schema.negative_label = "Default";
  return schema;
}

fs::path write_temp(const std::string& name, const std::string& content) {
  const auto dir = fs::temp_directory_path() / "lendscore_test_data";
  fs::create_directories(dir);
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_csv parses a 3-line file into 2 rows") {
  const auto path = write_temp("ok.csv", "amount,grade,status\n100,A,Fully Paid\n200,B,Default\n");
  const auto table = data::load_csv(path, tiny_schema());
  CHECK(table.rows.size() == 2);
  CHECK(table.rows[0][0] == "100");
  CHECK(table.rows[1][1] == "B");
}

TEST_CASE("load_csv keeps empty cells as missing") {
  const auto path = write_temp("missing.csv", "amount,grade,status\n,A,Fully Paid\n");
  const auto table = data::load_csv(path, tiny_schema());
  CHECK(table.rows[0][0].empty());
  CHECK(preprocess::is_missing(table.rows[0][0], {}));
  CHECK(!preprocess::is_missing("0", {}));
  CHECK(preprocess::is_missing("NA", {"NA"}));
}

TEST_CASE("load_csv rejects a ragged row naming its index") {
  const auto path =
      write_temp("ragged.csv", "amount,grade,status\n100,A,Fully Paid\n200,B,Default,extra\n");
  CHECK_THROWS_WITH_AS(data::load_csv(path, tiny_schema()), doctest::Contains("ragged row 1"),
                       DataError);
}

TEST_CASE("load_csv requires the target column") {
  const auto path = write_temp("notarget.csv", "amount,grade\n100,A\n");
  CHECK_THROWS_WITH_AS(data::load_csv(path, tiny_schema()), doctest::Contains("status"), DataError);
}

TEST_CASE("load_csv fails cleanly on a missing file") {
  CHECK_THROWS_AS(data::load_csv("/nonexistent/x.csv", tiny_schema()), DataError);
}

TEST_CASE("map_target maps the two labels and drops the rest") {
  data::RawTable raw;
  raw.header = {"status"};
  raw.rows = {{"Fully Paid"}, {"Default"}, {"Fully Paid"}};
  data::FeatureSchema schema = tiny_schema();
  schema.columns.clear();
  const auto mapped = data::map_target(raw, schema);
  CHECK(mapped.labels == std::vector<int>{1, 0, 1});
  CHECK(mapped.dropped == 0);

  raw.rows.push_back({"Current"});
  const auto with_drop = data::map_target(raw, schema);
  CHECK(with_drop.labels == std::vector<int>{1, 0, 1});
  CHECK(with_drop.dropped == 1);
  CHECK(with_drop.kept_rows == std::vector<std::size_t>{0, 1, 2});

  raw.rows = {{"Current"}, {"Current"}};
  CHECK_THROWS_AS(data::map_target(raw, schema), DataError);
}

TEST_CASE("generate_synthetic is deterministic") {
  data::GeneratorConfig config;
  const auto a = data::generate_synthetic(100, 7, config);
  const auto b = data::generate_synthetic(100, 7, config);
  CHECK(a.table.rows == b.table.rows);
  CHECK(a.true_default_prob == b.true_default_prob);
  const auto c = data::generate_synthetic(100, 8, config);
  CHECK(a.table.rows != c.table.rows);
}

TEST_CASE("generate_synthetic validates its config") {
  data::GeneratorConfig config;
  config.default_rate = 1.5;
  CHECK_THROWS_AS(data::generate_synthetic(10, 1, config), ConfigError);
  config = {};
  config.recovery_max = 1.2;
  CHECK_THROWS_AS(data::generate_synthetic(10, 1, config), ConfigError);
  CHECK_THROWS_AS(data::generate_synthetic(0, 1, data::GeneratorConfig{}), ConfigError);
}

TEST_CASE("synthetic class-1 share tracks the configured default rate") {
  data::GeneratorConfig config;
  config.default_rate = 0.25;
  const auto synthetic = data::generate_synthetic(10000, 21, config);
  const auto target = data::map_target(synthetic.table, synthetic.schema);
  double ones = 0;
  for (int label : target.labels) ones += label;
  CHECK(ones / 10000.0 == doctest::Approx(0.75).epsilon(0.07));  // +-0.05 absolute
  CHECK(std::abs(ones / 10000.0 - 0.75) <= 0.05);
}

TEST_CASE("synthetic economics satisfy the per-row payment invariants") {
  const auto synthetic = data::generate_synthetic(2000, 3, data::GeneratorConfig{});
  const auto status = synthetic.table.column_index_or_throw("loan_status");
  const auto funded = synthetic.table.column_index_or_throw("funded_amnt");
  const auto paid = synthetic.table.column_index_or_throw("total_pymnt");
  for (const auto& row : synthetic.table.rows) {
    const double f = *parse_double(row[funded]);
    const double p = *parse_double(row[paid]);
    CHECK(f > 0.0);
    if (row[status] == "Default") {
      CHECK(p < f);
    } else {
      CHECK(p >= f);
    }
  }
}

TEST_CASE("synthetic round-trips through CSV byte for byte") {
  const auto synthetic = data::generate_synthetic(150, 5, data::GeneratorConfig{});
  const auto path = fs::temp_directory_path() / "lendscore_test_data" / "roundtrip.csv";
  fs::create_directories(path.parent_path());
  data::write_csv(synthetic.table, path);
  const auto loaded = data::load_csv(path, synthetic.schema);
  CHECK(loaded.header == synthetic.table.header);
  CHECK(loaded.rows == synthetic.table.rows);
  const auto mapped = data::map_target(loaded, synthetic.schema);
  CHECK(mapped.labels.size() == 150);
  CHECK(mapped.dropped == 0);
}

TEST_CASE("economics extraction validates amounts") {
  data::RawTable raw;
  raw.header = {"status", "funded_amnt", "total_pymnt"};
  raw.rows = {{"Fully Paid", "100", "120"}, {"Default", "0", "10"}};
  auto schema = tiny_schema();
  schema.columns.clear();
  schema.funded_column = "funded_amnt";
  schema.payment_column = "total_pymnt";
  CHECK_THROWS_WITH_AS(data::extract_economics(raw, schema, {0, 1}),
                       doctest::Contains("funded"), DataError);
  const auto econ = data::extract_economics(raw, schema, {0});
  CHECK(econ.funded_amount == std::vector<double>{100.0});
  CHECK(econ.total_payment == std::vector<double>{120.0});
}

// With the interaction switched off the generating model is linear in the
// encoded features, so a logistic fit should track the Bayes-optimal score.
TEST_CASE("zero interaction makes logistic regression near Bayes-optimal") {
  data::GeneratorConfig config;
  config.interaction_weight = 0.0;
  auto encoded = testutil::encoded_synthetic(20000, 77, config);

  models::LogisticSpec spec;
  spec.lambda = 1e-4;
  const auto model = models::fit_logistic(encoded.train, spec);
  const Vector scores = model->predict_proba(encoded.test.X);
  const double model_auc = eval::auc(scores, encoded.test.y);

  Vector bayes(static_cast<Eigen::Index>(encoded.test_true_default.size()));
  for (std::size_t i = 0; i < encoded.test_true_default.size(); ++i) {
    bayes[static_cast<Eigen::Index>(i)] = 1.0 - encoded.test_true_default[i];
  }
  const double bayes_auc = eval::auc(bayes, encoded.test.y);
  CHECK(model_auc >= bayes_auc - 0.02);
  CHECK(model_auc <= bayes_auc + 0.02);
}
