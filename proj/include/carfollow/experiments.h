#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carfollow/checkpoint.h"
#include "carfollow/config.h"
#include "carfollow/env.h"
#include "carfollow/train.h"
#include "carfollow/trajectory_io.h"
#include "json.hpp"

namespace carfollow {

inline constexpr int kExitCollision = 3;
inline constexpr int kExitRoadEnd = 4;

// Uniform actions over [-bound, bound]; deterministic for a given seed.
Policy RandomPolicy(int obs_dim, double bound, std::uint64_t seed);

// Loads the checkpoint when the scenario has RL vehicles and aligns the
// observation variant with it. Returns nullopt when no vehicle is RL.
// Throws ConfigError when an RL vehicle exists and no checkpoint is set.
std::optional<LoadedPolicy> LoadPolicyFor(ExperimentConfig& exp);

// "perturbation" when the lead vehicle is forced, else "closed-loop".
std::string MetricsStyle(const ExperimentConfig& exp);

struct SimulateOutcome {
  EpisodeResult episode;
  nlohmann::json metrics;
  int exit_code = 0;
  std::string report;  // collision or road-end description; empty on success
};

// Writes trajectory.csv, metrics.json and manifest.json into `out`.
SimulateOutcome RunSimulate(const Config& config, const std::filesystem::path& out);

struct PerturbOutcome {
  SimulateOutcome run;
  SpaceTime spacetime;
  std::vector<int> amplitude_ids;  // measured vehicles, front to back
  std::vector<double> amplitudes;  // empty if the run ended too early
};

// Writes trajectory.csv, spacetime.csv, stability.csv, metrics.json and
// manifest.json. Amplitudes are computed from the space-time table.
PerturbOutcome RunPerturb(const Config& config, const std::filesystem::path& out);

// Amplitudes of `ids` from a space-time table, as in RunPerturb.
std::vector<double> AmplitudesFromSpaceTime(const SpaceTime& data, std::span<const int> ids,
                                            double period, double transient_cut);

// Writes policy.ckpt, curve.csv and manifest.json.
TrainResult RunTrain(const Config& config, const std::filesystem::path& out);

struct EvalOutcome {
  std::vector<EpisodeResult> episodes;
  double mean_reward = 0.0;  // mean of per-episode means
  EpisodeMetrics metrics;    // per-field mean over episodes
  int collisions = 0;
};

// Runs eval.episodes episodes (seeds scenario.seed + e) without exploration.
// Writes eval.json, metrics.json and manifest.json.
EvalOutcome RunEval(const Config& config, const std::filesystem::path& out);

struct SummaryTable {
  std::string style;
  std::vector<std::string> columns;
  struct Row {
    std::string method;
    std::vector<std::optional<double>> values;
  };
  std::vector<Row> rows;  // sorted by method
};

// One row per run directory holding a metrics.json. Throws ConfigError when
// the runs mix styles, naming the offending directories.
SummaryTable BuildSummaryTable(std::span<const std::filesystem::path> run_dirs);
std::string FormatTableCsv(const SummaryTable& table);
std::string FormatTableText(const SummaryTable& table);

std::string Sha256Hex(const std::filesystem::path& file);

// manifest.json: command, resolved config, seed and SHA-256 of each artifact.
void WriteManifest(const std::filesystem::path& out, std::string_view command,
                   const Config& config, std::span<const std::filesystem::path> artifacts);

// Rebuilds the resolved config recorded in a manifest.json.
Config ConfigFromManifest(const std::filesystem::path& manifest);

}  // namespace carfollow
