#include "lendscore/commands.hpp"

#include "lendscore/csv.hpp"
#include "lendscore/eval.hpp"
#include "lendscore/models/registry.hpp"
#include "lendscore/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <numeric>

namespace lendscore::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

data::FeatureSchema schema_from_kv(const KvConfig& cfg) {
  data::FeatureSchema schema;
  schema.target_name = cfg.require_string("schema.target");
  schema.positive_label = cfg.require_string("schema.positive");
  schema.negative_label = cfg.require_string("schema.negative");
  schema.funded_column = cfg.get_string("schema.funded_column", "");
  schema.payment_column = cfg.get_string("schema.payment_column", "");
  for (const auto& name : cfg.get_list("schema.numeric")) {
    schema.columns.push_back({name, data::ColumnKind::numeric, {}});
  }
  for (const auto& name : cfg.get_list("schema.categorical")) {
    schema.columns.push_back({name, data::ColumnKind::categorical, {}});
  }
  schema.validate();
  return schema;
}

std::vector<std::size_t> parse_instances(const KvConfig& cfg) {
  std::vector<std::size_t> out;
  for (const auto& item : cfg.get_list("explain.instances", {"0"})) {
    auto v = parse_int(item);
    if (!v || *v < 0) throw ConfigError("explain.instances: bad index '" + item + "'");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

}  // namespace

RunConfig RunConfig::from_kv(KvConfig merged) {
  RunConfig config;
  config.raw = merged;
  if (!merged.has("seed")) {
    throw ConfigError("seed is mandatory: pass --seed or set seed= in the config");
  }
  config.seed = merged.require_u64("seed");

  std::string out_dir = merged.get_string("out", "");
  if (const char* env = std::getenv("LENDSCORE_OUT"); env != nullptr && !merged.has("out.flag")) {
    out_dir = env;
  }
  if (merged.has("out.flag")) out_dir = merged.require_string("out.flag");
  if (out_dir.empty()) {
    throw ConfigError("output directory is mandatory: pass --out or set out= in the config");
  }
  config.out_dir = out_dir;

  const bool has_csv = merged.has("input.csv");
  const auto synthetic_n = merged.get_int("input.synthetic.n", 0);
  if (has_csv && synthetic_n > 0) {
    throw ConfigError("choose one input: input.csv or input.synthetic.n");
  }
  if (!has_csv && synthetic_n <= 0) {
    throw ConfigError("an input is mandatory: set input.csv or input.synthetic.n");
  }
  if (has_csv) {
    config.input_csv = fs::path(merged.require_string("input.csv"));
    config.schema = schema_from_kv(merged);
  } else {
    config.synthetic_n = static_cast<std::size_t>(synthetic_n);
    config.generator = data::GeneratorConfig::from_kv(merged, "input.synthetic.");
  }

  config.plan = preprocess::PreprocessPlan::from_kv(merged, "preprocess.");
  config.plan.seed = config.seed;

  config.model_names = merged.get_list("models", models::known_variants());
  for (const auto& name : config.model_names) {
    const auto& known = models::known_variants();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ConfigError("unknown model variant '" + name + "'");
    }
  }
  if (config.model_names.empty()) throw ConfigError("at least one model is required");

  config.explain.method = merged.get_string("explain.method", config.explain.method);
  if (config.explain.method != "exact" && config.explain.method != "kernel") {
    throw ConfigError("explain.method must be 'exact' or 'kernel'");
  }
  config.explain.n_coalitions =
      static_cast<std::size_t>(merged.get_int("explain.n_coalitions", 0));
  config.explain.background_size =
      static_cast<std::size_t>(merged.get_int("explain.background_size", 100));
  config.explain.lime_samples =
      static_cast<std::size_t>(merged.get_int("explain.lime_samples", 5000));
  config.explain.lime_mode = merged.get_string("explain.lime_mode", config.explain.lime_mode);
  if (config.explain.lime_mode != "discretized" && config.explain.lime_mode != "raw") {
    throw ConfigError("explain.lime_mode must be 'discretized' or 'raw'");
  }
  config.explain.top_k = static_cast<std::size_t>(merged.get_int("explain.top_k", 10));
  config.explain.kernel_width = merged.get_double("explain.kernel_width", 0.0);
  config.explain.ridge_lambda = merged.get_double("explain.ridge_lambda", 1.0);
  config.explain.instances = parse_instances(merged);

  config.sweep.grid_step = merged.get_double("sweep.grid_step", 0.01);
  config.run_cv = merged.get_bool("evaluate.cv", true);
  return config;
}

RunConfig RunConfig::load(const fs::path& config_path, const KvConfig& overrides) {
  KvConfig merged = KvConfig::parse_file(config_path);
  for (const auto& [key, value] : overrides.values()) merged.set(key, value);
  return from_kv(std::move(merged));
}

void write_encoded_csv(const fs::path& path, const data::Dataset& ds) {
  ds.validate();
  for (const auto& name : ds.feature_names) {
    if (name == "label" || name == "funded_amount" || name == "total_payment") {
      throw ConfigError("feature name '" + name + "' collides with a dataset artifact column");
    }
  }
  csv::Table table;
  table.header = ds.feature_names;
  table.header.push_back("label");
  if (ds.economics) {
    table.header.push_back("funded_amount");
    table.header.push_back("total_payment");
  }
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    for (std::size_t j = 0; j < ds.cols(); ++j) {
      row.push_back(format_double(ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    }
    row.push_back(std::to_string(ds.y[i]));
    if (ds.economics) {
      row.push_back(format_double(ds.economics->funded_amount[i]));
      row.push_back(format_double(ds.economics->total_payment[i]));
    }
    table.rows.push_back(std::move(row));
  }
  csv::write(path, table);
}

data::Dataset read_encoded_csv(const fs::path& path) {
  const auto table = csv::read(path);
  std::size_t label_col = table.header.size();
  std::optional<std::size_t> funded_col, payment_col;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == "label") label_col = c;
    else if (table.header[c] == "funded_amount") funded_col = c;
    else if (table.header[c] == "total_payment") payment_col = c;
  }
  if (label_col == table.header.size()) {
    throw DataError(path.string() + ": missing 'label' column");
  }
  std::vector<std::size_t> feature_cols;
  data::Dataset ds;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == label_col || c == funded_col || c == payment_col) continue;
    feature_cols.push_back(c);
    ds.feature_names.push_back(table.header[c]);
  }
  ds.X.resize(static_cast<Eigen::Index>(table.rows.size()),
              static_cast<Eigen::Index>(feature_cols.size()));
  if (funded_col && payment_col) ds.economics.emplace();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      auto v = parse_double(row[feature_cols[j]]);
      if (!v) throw DataError(path.string() + ": bad numeric cell at row " + std::to_string(i));
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
    auto label = parse_int(row[label_col]);
    if (!label || (*label != 0 && *label != 1)) {
      throw DataError(path.string() + ": bad label at row " + std::to_string(i));
    }
    ds.y.push_back(static_cast<int>(*label));
    if (ds.economics) {
      auto funded = parse_double(row[*funded_col]);
      auto payment = parse_double(row[*payment_col]);
      if (!funded || !payment) {
        throw DataError(path.string() + ": bad economics at row " + std::to_string(i));
      }
      ds.economics->funded_amount.push_back(*funded);
      ds.economics->total_payment.push_back(*payment);
    }
  }
  ds.validate();
  return ds;
}

namespace {

struct PreparedInput {
  data::RawTable table;
  data::FeatureSchema schema;
};

PreparedInput load_input(const RunConfig& config) {
  if (config.input_csv) {
    return {data::load_csv(*config.input_csv, config.schema), config.schema};
  }
  auto synthetic = data::generate_synthetic(config.synthetic_n, derive_seed(config.seed, "synthetic"),
                                            config.generator);
  return {std::move(synthetic.table), std::move(synthetic.schema)};
}

fs::path model_path(const RunConfig& config, const std::string& name) {
  return config.out_dir / ("model_" + name + ".json");
}

models::ModelPtr load_model(const RunConfig& config, const std::string& name) {
  return models::model_from_json_text(csv::read_text(model_path(config, name)));
}

std::vector<std::string> select_models(const RunConfig& config,
                                       const std::vector<std::string>& only_models) {
  if (only_models.empty()) return config.model_names;
  for (const auto& name : only_models) {
    if (std::find(config.model_names.begin(), config.model_names.end(), name) ==
        config.model_names.end()) {
      throw ConfigError("model '" + name + "' is not in the configured model list");
    }
  }
  return only_models;
}

}  // namespace

CommandResult cmd_prepare(const RunConfig& config) {
  auto input = load_input(config);
  const auto target = data::map_target(input.table, input.schema);
  const auto split =
      preprocess::split_train_test(target.labels, config.plan.split_ratio, derive_seed(config.seed, "split"));

  auto to_raw_rows = [&](const std::vector<std::size_t>& kept_idx) {
    std::vector<std::size_t> rows;
    rows.reserve(kept_idx.size());
    for (std::size_t i : kept_idx) rows.push_back(target.kept_rows[i]);
    return rows;
  };
  const auto train_rows = to_raw_rows(split.train);
  const auto test_rows = to_raw_rows(split.test);

  auto fitted = preprocess::fit_transform(input.table, input.schema, config.plan, train_rows);

  auto build_dataset = [&](const std::vector<std::size_t>& raw_rows,
                           const std::vector<std::size_t>& kept_idx) {
    data::Dataset ds;
    preprocess::TransformStats stats;
    ds.X = fitted.transform.apply(input.table, raw_rows, &stats);
    ds.feature_names = fitted.transform.encoded_names;
    for (std::size_t i : kept_idx) ds.y.push_back(target.labels[i]);
    if (!input.schema.funded_column.empty() && !input.schema.payment_column.empty()) {
      ds.economics = data::extract_economics(input.table, input.schema, raw_rows);
    }
    ds.validate();
    return ds;
  };

  const auto train_ds = build_dataset(train_rows, split.train);
  const auto test_ds = build_dataset(test_rows, split.test);

  json report = json::parse(fitted.log.to_json_text());
  report["rows_total"] = input.table.rows.size();
  report["rows_dropped_by_target"] = target.dropped;
  report["rows_train"] = train_rows.size();
  report["rows_test"] = test_rows.size();
  report["encoded_columns"] = fitted.transform.encoded_width();

  write_encoded_csv(config.out_dir / "train_encoded.csv", train_ds);
  write_encoded_csv(config.out_dir / "test_encoded.csv", test_ds);
  csv::write_text_atomic(config.out_dir / "transform.json", fitted.transform.to_json_text());
  csv::write_text_atomic(config.out_dir / "cleaning_report.json", report.dump(2) + "\n");
  return {};
}

CommandResult cmd_train(const RunConfig& config) {
  const auto train_ds = read_encoded_csv(config.out_dir / "train_encoded.csv");
  CommandResult result;
  json report;
  for (const auto& name : config.model_names) {
    try {
      const auto spec = models::spec_from_kv(config.raw, name, config.seed);
      const auto model = models::fit_model(train_ds, spec);
      csv::write_text_atomic(model_path(config, name), model->to_json_text() + "\n");
      report["models"][name] = {{"status", "ok"}};
    } catch (const Error& e) {
      result.failed_models.push_back(name);
      report["models"][name] = {{"status", "error"}, {"message", e.what()}};
    }
  }
  csv::write_text_atomic(config.out_dir / "train_report.json", report.dump(2) + "\n");
  result.exit_code = result.failed_models.empty() ? 0 : 1;
  return result;
}

CommandResult cmd_evaluate(const RunConfig& config) {
  const auto train_ds = read_encoded_csv(config.out_dir / "train_encoded.csv");
  const auto test_ds = read_encoded_csv(config.out_dir / "test_encoded.csv");

  CommandResult result;
  std::vector<eval::MetricRow> in_sample, out_sample, cv_folds;
  csv::Table cv_table;
  cv_table.header = {"model",  "sample", "sensitivity", "specificity", "accuracy",
                     "auc",    "f1",     "loss",        "sensitivity_std", "specificity_std",
                     "accuracy_std", "auc_std", "f1_std", "loss_std"};

  for (const auto& name : config.model_names) {
    try {
      const auto model = load_model(config, name);
      const Vector train_scores = model->predict_proba(train_ds.X);
      const Vector test_scores = model->predict_proba(test_ds.X);
      in_sample.push_back(eval::score_metrics(name, "in_sample", train_scores, train_ds.y, 0.5));
      out_sample.push_back(eval::score_metrics(name, "out_sample", test_scores, test_ds.y, 0.5));
      eval::write_roc_csv(config.out_dir / ("roc_" + name + "_insample.csv"),
                          eval::roc_curve(train_scores, train_ds.y));
      eval::write_roc_csv(config.out_dir / ("roc_" + name + "_outsample.csv"),
                          eval::roc_curve(test_scores, test_ds.y));

      if (config.run_cv) {
        const auto folds = preprocess::make_stratified_folds(
            train_ds.y, config.plan.k_folds, derive_seed(config.seed, "cv-folds"));
        const auto summary =
            eval::cross_validate(train_ds, models::spec_from_kv(config.raw, name, config.seed),
                                 folds);
        for (std::size_t f = 0; f < summary.folds.size(); ++f) {
          eval::MetricRow row = summary.folds[f];
          row.sample = "cv_fold_" + std::to_string(f);
          cv_folds.push_back(std::move(row));
        }
        cv_table.rows.push_back(
            {name, "cv", eval::metric_csv_cell(summary.mean.sensitivity),
             eval::metric_csv_cell(summary.mean.specificity),
             eval::metric_csv_cell(summary.mean.accuracy), eval::metric_csv_cell(summary.mean.auc),
             eval::metric_csv_cell(summary.mean.f1), eval::metric_csv_cell(summary.mean.log_loss),
             eval::metric_csv_cell(summary.stddev.sensitivity),
             eval::metric_csv_cell(summary.stddev.specificity),
             eval::metric_csv_cell(summary.stddev.accuracy),
             eval::metric_csv_cell(summary.stddev.auc), eval::metric_csv_cell(summary.stddev.f1),
             eval::metric_csv_cell(summary.stddev.log_loss)});
      }
    } catch (const Error& e) {
      result.failed_models.push_back(name);
      std::cerr << json({{"model", name}, {"error", e.what()}}).dump() << "\n";
    }
  }

  eval::write_metric_rows_csv(config.out_dir / "metrics_insample.csv", in_sample);
  eval::write_metric_rows_csv(config.out_dir / "metrics_outsample.csv", out_sample);
  if (config.run_cv) {
    csv::write(config.out_dir / "metrics_cv.csv", cv_table);
    eval::write_metric_rows_csv(config.out_dir / "cv_folds.csv", cv_folds);
  }
  result.exit_code = result.failed_models.empty() ? 0 : 1;
  return result;
}

CommandResult cmd_explain(const RunConfig& config, const std::vector<std::string>& only_models) {
  const auto train_ds = read_encoded_csv(config.out_dir / "train_encoded.csv");
  const auto test_ds = read_encoded_csv(config.out_dir / "test_encoded.csv");
  const auto transform = preprocess::FittedTransform::from_json_text(
      csv::read_text(config.out_dir / "transform.json"));
  const auto grouping = explain::FeatureGrouping::from_transform(transform);
  const auto lime_stats = explain::LimeStats::from_training(train_ds.X, grouping);

  // Seeded background sample from the training rows.
  Matrix background;
  {
    std::vector<std::size_t> order(train_ds.rows());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, "background"));
    rng.shuffle(order);
    const std::size_t b = std::min(config.explain.background_size, order.size());
    order.resize(b);
    std::sort(order.begin(), order.end());
    background.resize(static_cast<Eigen::Index>(b), train_ds.X.cols());
    for (std::size_t i = 0; i < b; ++i) {
      background.row(static_cast<Eigen::Index>(i)) =
          train_ds.X.row(static_cast<Eigen::Index>(order[i]));
    }
  }

  for (std::size_t idx : config.explain.instances) {
    if (idx >= test_ds.rows()) {
      throw ConfigError("explain: instance index " + std::to_string(idx) +
                        " out of range (test rows: " + std::to_string(test_ds.rows()) + ")");
    }
  }

  CommandResult result;
  for (const auto& name : select_models(config, only_models)) {
    try {
      const auto model = load_model(config, name);
      const auto scorer = [&model](const Matrix& rows) { return model->predict_proba(rows); };
      std::vector<explain::ShapExplanation> shap_explanations;
      std::vector<std::vector<std::string>> shap_values;
      for (std::size_t idx : config.explain.instances) {
        explain::ValueFunctionCtx ctx;
        ctx.f = scorer;
        ctx.x = test_ds.X.row(static_cast<Eigen::Index>(idx)).transpose();
        ctx.background = background;
        ctx.grouping = grouping;

        const auto display = transform.display_values(ctx.x);
        explain::ShapExplanation shap;
        if (config.explain.method == "exact") {
          shap = explain::exact_shapley(ctx);
        } else {
          shap = explain::kernel_shap(
              ctx, config.explain.n_coalitions,
              derive_seed(config.seed, "shap:" + name + ":" + std::to_string(idx)));
        }
        const auto tag = name + "_i" + std::to_string(idx);
        explain::write_shap_csv(config.out_dir / ("shap_" + tag + ".csv"), shap, display);
        explain::write_shap_sidecar_json(config.out_dir / ("shap_" + tag + ".json"), shap);
        shap_explanations.push_back(shap);
        shap_values.push_back(display);

        const auto lime = explain::lime_explain(
            ctx, lime_stats,
            config.explain.lime_mode == "raw" ? explain::LimeMode::raw
                                              : explain::LimeMode::discretized,
            config.explain.lime_samples, config.explain.top_k, config.explain.kernel_width,
            config.explain.ridge_lambda,
            derive_seed(config.seed, "lime:" + name + ":" + std::to_string(idx)));
        explain::write_lime_csv(config.out_dir / ("lime_" + tag + ".csv"), lime, display,
                                grouping.group_names);
        explain::write_lime_sidecar_json(config.out_dir / ("lime_" + tag + ".json"), lime);
      }
      const auto summary = explain::shap_summary(shap_explanations, shap_values);
      explain::write_shap_summary_csv(config.out_dir / ("shap_summary_" + name + ".csv"), summary);
      explain::write_shap_points_csv(config.out_dir / ("shap_points_" + name + ".csv"), summary);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      result.failed_models.push_back(name);
      std::cerr << json({{"model", name}, {"error", e.what()}}).dump() << "\n";
    }
  }
  result.exit_code = result.failed_models.empty() ? 0 : 1;
  return result;
}

CommandResult cmd_sweep(const RunConfig& config, const std::vector<std::string>& only_models) {
  const auto test_ds = read_encoded_csv(config.out_dir / "test_encoded.csv");
  if (!test_ds.economics) {
    throw DataError(
        "sweep: the test dataset lacks economics columns funded_amount/total_payment");
  }

  // The held-out set splits into a validation book (threshold selection) and
  // a final book the chosen threshold is re-evaluated on.
  const auto book_split =
      preprocess::split_train_test(test_ds.y, 0.5, derive_seed(config.seed, "book-split"));
  const auto validation = test_ds.subset(book_split.train);
  const auto holdout = test_ds.subset(book_split.test);
  const auto grid = invest::default_grid(config.sweep.grid_step);

  auto book_of = [](const data::Dataset& ds, const Vector& scores) {
    invest::LoanBook book;
    book.scores = scores;
    book.funded_amount = ds.economics->funded_amount;
    book.total_payment = ds.economics->total_payment;
    book.labels = ds.y;
    book.validate();
    return book;
  };

  CommandResult result;
  csv::Table optima;
  optima.header = {"model",         "roi",        "threshold",   "sensitivity",
                   "specificity",   "accuracy",   "roc_auc",     "accepted_rate",
                   "loss",          "roi_at_default", "test_roi", "test_roi_at_default",
                   "all_rejected",  "rejection_dominates"};

  for (const auto& name : select_models(config, only_models)) {
    try {
      const auto model = load_model(config, name);
      const auto validation_book = book_of(validation, model->predict_proba(validation.X));
      const auto holdout_book = book_of(holdout, model->predict_proba(holdout.X));

      const auto sweep = invest::threshold_sweep(validation_book, grid);
      invest::write_sweep_csv(config.out_dir / ("sweep_" + name + ".csv"), sweep);
      invest::write_roi_curve_csv(config.out_dir / ("roi_curve_" + name + ".csv"), sweep);

      const auto pick = invest::optimal_threshold(sweep);
      const auto roi_default = invest::roi(validation_book, invest::accept_at(validation_book, 0.5));
      std::optional<double> test_roi, test_roi_default;
      test_roi_default = invest::roi(holdout_book, invest::accept_at(holdout_book, 0.5));
      double chosen_threshold = 0.5;
      if (pick.row) {
        chosen_threshold = pick.row->threshold;
        test_roi = invest::roi(holdout_book, invest::accept_at(holdout_book, chosen_threshold));
      }
      optima.rows.push_back(
          {name, pick.row ? eval::metric_csv_cell(pick.row->roi) : "NA",
           pick.row ? format_double(pick.row->threshold) : "NA",
           pick.row ? eval::metric_csv_cell(pick.row->sensitivity) : "NA",
           pick.row ? eval::metric_csv_cell(pick.row->specificity) : "NA",
           pick.row ? eval::metric_csv_cell(pick.row->accuracy) : "NA",
           pick.row ? eval::metric_csv_cell(pick.row->roc_auc) : "NA",
           pick.row ? format_double(pick.row->accepted_rate) : "NA",
           pick.row ? eval::metric_csv_cell(pick.row->log_loss) : "NA",
           eval::metric_csv_cell(roi_default), eval::metric_csv_cell(test_roi),
           eval::metric_csv_cell(test_roi_default), pick.all_rejected ? "true" : "false",
           pick.rejection_dominates ? "true" : "false"});
    } catch (const Error& e) {
      result.failed_models.push_back(name);
      std::cerr << json({{"model", name}, {"error", e.what()}}).dump() << "\n";
    }
  }
  csv::write(config.out_dir / "optimal_thresholds.csv", optima);
  result.exit_code = result.failed_models.empty() ? 0 : 1;
  return result;
}

namespace {

void append_metric_section(std::string& md, json& report, const fs::path& path,
                           const std::string& title) {
  if (!fs::exists(path)) return;
  const auto table = csv::read(path);
  md += "\n## " + title + "\n\n";
  md += "| " + join(table.header, " | ") + " |\n";
  std::vector<std::string> rule(table.header.size(), "---");
  md += "| " + join(rule, " | ") + " |\n";
  json rows = json::array();
  for (const auto& row : table.rows) {
    md += "| " + join(row, " | ") + " |\n";
    json obj;
    for (std::size_t c = 0; c < table.header.size(); ++c) obj[table.header[c]] = row[c];
    rows.push_back(std::move(obj));
  }
  report[title] = std::move(rows);
}

}  // namespace

CommandResult cmd_report(const RunConfig& config) {
  std::string md = "# lendscore run report\n";
  json report;
  report["seed"] = config.seed;
  append_metric_section(md, report, config.out_dir / "metrics_insample.csv", "in_sample_metrics");
  append_metric_section(md, report, config.out_dir / "metrics_outsample.csv",
                        "out_sample_metrics");
  append_metric_section(md, report, config.out_dir / "metrics_cv.csv", "cv_metrics");
  append_metric_section(md, report, config.out_dir / "optimal_thresholds.csv",
                        "optimal_thresholds");
  csv::write_text_atomic(config.out_dir / "report.md", md);
  csv::write_text_atomic(config.out_dir / "report.json", report.dump(2) + "\n");
  return {};
}

int run_command(const std::string& command, const RunConfig& config,
                const std::vector<std::string>& only_models) {
  try {
    CommandResult result;
    if (command == "prepare") result = cmd_prepare(config);
    else if (command == "train") result = cmd_train(config);
    else if (command == "evaluate") result = cmd_evaluate(config);
    else if (command == "explain") result = cmd_explain(config, only_models);
    else if (command == "sweep") result = cmd_sweep(config, only_models);
    else if (command == "report") result = cmd_report(config);
    else throw ConfigError("unknown command '" + command + "'");
    if (!result.failed_models.empty()) {
      std::cerr << json({{"error", "model failures"}, {"models", result.failed_models}}).dump()
                << "\n";
    }
    return result.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << json({{"kind", "config"}, {"error", e.what()}}).dump() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << json({{"kind", "data"}, {"error", e.what()}}).dump() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << json({{"kind", "run"}, {"error", e.what()}}).dump() << "\n";
    return 1;
  }
}

}  // namespace lendscore::cli
