#include "lendscore/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"lendscore: credit-scoring pipeline (prepare, train, evaluate, explain, sweep, report)"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed;
  std::string out_dir;
  std::vector<std::string> models;
  std::string instances;
  std::string grid_step;

  const std::vector<std::string> commands = {"prepare", "train",  "evaluate",
                                             "explain", "sweep", "report"};
  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key=value config file")->required();
    sub->add_option("--seed", seed, "master seed (overrides config)");
    sub->add_option("--out", out_dir, "output directory (overrides config and LENDSCORE_OUT)");
    if (name == "explain" || name == "sweep") {
      sub->add_option("--model", models, "restrict to the named model(s)");
    }
    if (name == "explain") {
      sub->add_option("--instances", instances, "comma-separated test row indices");
    }
    if (name == "sweep") {
      sub->add_option("--grid-step", grid_step, "threshold grid step");
    }
  }

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  lendscore::KvConfig overrides;
  if (!seed.empty()) overrides.set("seed", seed);
  if (!out_dir.empty()) overrides.set("out.flag", out_dir);
  if (!instances.empty()) overrides.set("explain.instances", instances);
  if (!grid_step.empty()) overrides.set("sweep.grid_step", grid_step);

  try {
    const auto config = lendscore::cli::RunConfig::load(config_path, overrides);
    return lendscore::cli::run_command(command, config, models);
  } catch (const lendscore::ConfigError& e) {
    std::cerr << "{\"kind\":\"config\",\"error\":" << nlohmann::json(e.what()).dump() << "}\n";
    return 2;
  } catch (const lendscore::Error& e) {
    std::cerr << "{\"kind\":\"run\",\"error\":" << nlohmann::json(e.what()).dump() << "}\n";
    return 2;
  }
}
