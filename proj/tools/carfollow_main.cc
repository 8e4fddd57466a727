// carfollow: command-line front end for simulation, perturbation analysis,
// training, evaluation and summary tables.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "carfollow/config.h"
#include "carfollow/errors.h"
#include "carfollow/experiments.h"
#include "carfollow/trajectory_io.h"

namespace fs = std::filesystem;
using namespace carfollow;

namespace {

struct CommonFlags {
  std::string config_file;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string controller;
  std::string checkpoint;
  std::optional<double> target_headway;
  std::optional<int> steps;
  std::optional<int> episodes;
  // Dotted-key overrides in command-line order.
  std::vector<std::pair<std::string, std::string>> overrides;
};

void AddCommonFlags(CLI::App* app, CommonFlags& flags, bool training) {
  app->add_option("--config", flags.config_file, "YAML config file with dotted keys")
      ->check(CLI::ExistingFile);
  app->add_option("--preset", flags.preset, "closed-loop | ring-single | perturbation");
  app->add_option("--seed", flags.seed, "scenario seed");
  app->add_option("--out", flags.out, "output directory");
  app->add_option("--controller", flags.controller,
                  "controller of the controlled slots: idm | gipps | bcm | unilateral | rl");
  app->add_option("--checkpoint", flags.checkpoint, "policy checkpoint for RL vehicles");
  app->add_option("--target-headway", flags.target_headway,
                  "target time headway (s); also retargets the efficiency reward");
  app->add_option("--steps", flags.steps, training ? "steps per episode" : "steps to simulate");
  if (training) app->add_option("--episodes", flags.episodes, "training episodes");
  // Every config key is also a flag: --reward.weights.safety 2
  const Config defaults = Config::Defaults("closed-loop");
  for (const auto& [key, value] : defaults.values()) {
    if (key == "scenario.preset") continue;
    const std::string name = key;
    app->add_option_function<std::string>(
        "--" + name, [&flags, name](const std::string& v) { flags.overrides.emplace_back(name, v); },
        "config key");
  }
  app->get_formatter()->column_width(40);
}

Config ResolveConfig(const CommonFlags& flags, const std::string& fallback_preset, bool training) {
  std::string preset = flags.preset;
  if (preset.empty() && !flags.config_file.empty()) preset = PresetFromYamlFile(flags.config_file);
  if (preset.empty()) preset = fallback_preset;
  Config config = Config::Defaults(preset);
  if (!flags.config_file.empty()) config.MergeYamlFile(flags.config_file);
  for (const auto& [key, value] : flags.overrides) config.Set(key, value);
  if (flags.seed) config.Set("scenario.seed", std::to_string(*flags.seed));
  if (!flags.controller.empty()) config.Set("scenario.controller", flags.controller);
  if (!flags.checkpoint.empty()) config.Set("controllers.rl.checkpoint", flags.checkpoint);
  if (flags.target_headway) {
    char exact[40];
    std::snprintf(exact, sizeof exact, "%.17g", *flags.target_headway);
    config.Set("scenario.target_headway", exact);
    config.Set("reward.target_headway", exact);
  }
  if (flags.steps) config.Set(training ? "train.steps" : "scenario.steps", std::to_string(*flags.steps));
  if (flags.episodes) config.Set("train.episodes", std::to_string(*flags.episodes));
  return config;
}

void PrintMetrics(const nlohmann::json& metrics) { std::cout << metrics.dump(2) << "\n"; }

std::vector<int> ParseIds(const std::string& text) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      ids.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("bad vehicle id '" + item + "'");
    }
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Car-following simulation, training and evaluation harness"};
  app.require_subcommand(1);

  CommonFlags sim_flags, perturb_flags, train_flags, eval_flags;
  auto* simulate = app.add_subcommand("simulate", "run one episode and export its trajectory");
  AddCommonFlags(simulate, sim_flags, false);
  auto* perturb = app.add_subcommand("perturb", "forced-leader platoon run with stability report");
  AddCommonFlags(perturb, perturb_flags, false);
  auto* train = app.add_subcommand("train", "train a shared DDPG policy");
  AddCommonFlags(train, train_flags, true);
  auto* eval = app.add_subcommand("eval", "evaluate a policy or controller over several seeds");
  AddCommonFlags(eval, eval_flags, false);

  std::string metrics_csv, metrics_vehicles, metrics_format = "json", metrics_out;
  auto* metrics = app.add_subcommand("metrics", "recompute episode metrics from a trajectory CSV");
  metrics->add_option("trajectory", metrics_csv, "trajectory.csv")->required()->check(CLI::ExistingFile);
  metrics->add_option("--vehicles", metrics_vehicles, "comma-separated vehicle ids (default all)");
  metrics->add_option("--format", metrics_format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  metrics->add_option("--out", metrics_out, "output file (default stdout)");

  std::vector<std::string> table_dirs;
  std::string table_out = ".";
  auto* table = app.add_subcommand("table", "summary table over run directories");
  table->add_option("runs", table_dirs, "run directories holding metrics.json")->required();
  table->add_option("--out", table_out, "directory for summary.csv and summary.txt");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const auto config = ResolveConfig(sim_flags, "closed-loop", false);
      const auto outcome = RunSimulate(config, sim_flags.out);
      PrintMetrics(outcome.metrics);
      if (outcome.exit_code != 0) std::cerr << "carfollow: " << outcome.report << "\n";
      return outcome.exit_code;
    }
    if (perturb->parsed()) {
      const auto config = ResolveConfig(perturb_flags, "perturbation", false);
      const auto outcome = RunPerturb(config, perturb_flags.out);
      PrintMetrics(outcome.run.metrics);
      if (outcome.run.exit_code != 0) std::cerr << "carfollow: " << outcome.run.report << "\n";
      return outcome.run.exit_code;
    }
    if (train->parsed()) {
      const auto config = ResolveConfig(train_flags, "closed-loop", true);
      const auto result = RunTrain(config, train_flags.out);
      for (const auto& row : result.curve) {
        std::cout << "episode " << row.episode << " mean_reward " << FormatNumber(row.mean_reward)
                  << (row.collisions ? " collision" : "") << "\n";
      }
      return 0;
    }
    if (eval->parsed()) {
      const auto config = ResolveConfig(eval_flags, "closed-loop", false);
      const auto outcome = RunEval(config, eval_flags.out);
      std::ifstream in(fs::path(eval_flags.out) / "metrics.json");
      std::cout << in.rdbuf();
      return outcome.collisions > 0 ? kExitCollision : 0;
    }
    if (metrics->parsed()) {
      const auto records = ReadTrajectoryCsv(fs::path(metrics_csv));
      const auto ids = ParseIds(metrics_vehicles);
      const auto m = ComputeEpisodeMetrics(records, ids);
      std::string text;
      if (metrics_format == "json") {
        text = MetricsToJson(m).dump(2) + "\n";
      } else {
        const auto j = MetricsToJson(m);
        std::string header, row;
        for (const auto& [key, value] : j.items()) {
          if (!header.empty()) header += ",", row += ",";
          header += key;
          if (value.is_number_float()) {
            row += FormatNumber(value.get<double>());
          } else if (!value.is_null()) {
            row += value.dump();
          }
        }
        text = header + "\n" + row + "\n";
      }
      if (metrics_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(metrics_out) << text;
      }
      return 0;
    }
    if (table->parsed()) {
      std::vector<fs::path> dirs(table_dirs.begin(), table_dirs.end());
      const auto summary = BuildSummaryTable(dirs);
      fs::create_directories(table_out);
      std::ofstream(fs::path(table_out) / "summary.csv") << FormatTableCsv(summary);
      const auto text = FormatTableText(summary);
      std::ofstream(fs::path(table_out) / "summary.txt") << text;
      std::cout << text;
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "carfollow: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "carfollow: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
