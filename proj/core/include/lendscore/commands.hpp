#pragma once

#include "lendscore/data.hpp"
#include "lendscore/explain.hpp"
#include "lendscore/invest.hpp"
#include "lendscore/kvconfig.hpp"
#include "lendscore/preprocess.hpp"
#include "lendscore/synthetic.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lendscore::cli {

struct ExplainOptions {
  std::string method = "kernel";         // exact | kernel
  std::size_t n_coalitions = 0;          // kernel draws; 0 = exhaustive
  std::size_t background_size = 100;
  std::size_t lime_samples = 5000;
  std::string lime_mode = "discretized";  // discretized | raw
  std::size_t top_k = 10;
  double kernel_width = 0.0;  // 0 = 0.75*sqrt(M)
  double ridge_lambda = 1.0;
  std::vector<std::size_t> instances{0};
};

struct SweepOptions {
  double grid_step = 0.01;
};

/// Everything a command needs; a pure function of the config file, CLI
/// overrides, and the mandatory seed.
struct RunConfig {
  KvConfig raw;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> input_csv;
  std::size_t synthetic_n = 0;  // > 0 selects the synthetic generator
  data::GeneratorConfig generator;
  data::FeatureSchema schema;  // csv mode; synthetic mode supplies its own
  preprocess::PreprocessPlan plan;
  std::vector<std::string> model_names;
  ExplainOptions explain;
  SweepOptions sweep;
  bool run_cv = true;

  /// overrides take precedence over file keys; the LENDSCORE_OUT environment
  /// variable overrides the configured output directory (flags override both).
  static RunConfig load(const std::filesystem::path& config_path, const KvConfig& overrides);
  static RunConfig from_kv(KvConfig merged);
};

struct CommandResult {
  int exit_code = 0;  // 0 ok, 1 partial model failure, 2 config/input error
  std::vector<std::string> failed_models;
};

CommandResult cmd_prepare(const RunConfig& config);
CommandResult cmd_train(const RunConfig& config);
CommandResult cmd_evaluate(const RunConfig& config);
CommandResult cmd_explain(const RunConfig& config, const std::vector<std::string>& only_models = {});
CommandResult cmd_sweep(const RunConfig& config, const std::vector<std::string>& only_models = {});
CommandResult cmd_report(const RunConfig& config);

/// Dispatches a subcommand by name, mapping exceptions to exit codes and a
/// one-line machine-readable error JSON on stderr.
int run_command(const std::string& command, const RunConfig& config,
                const std::vector<std::string>& only_models = {});

/// Encoded dataset artifact IO (feature columns, label, optional economics).
void write_encoded_csv(const std::filesystem::path& path, const data::Dataset& ds);
data::Dataset read_encoded_csv(const std::filesystem::path& path);

}  // namespace lendscore::cli
