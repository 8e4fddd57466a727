#include "carfollow/experiments.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include "carfollow/errors.h"

namespace fs = std::filesystem;

namespace carfollow {

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

void WriteJson(const fs::path& path, const nlohmann::json& j) { WriteText(path, j.dump(2) + "\n"); }

void PrepareOutDir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
}

nlohmann::json OptionalJson(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

std::vector<std::string> StyleColumns(const std::string& style) {
  if (style == "perturbation") return {"Headway", "Jerk", "Safety"};
  return {"Headway", "Jerk", "TTC"};
}

nlohmann::json ColumnValues(const std::string& style, const EpisodeMetrics& m) {
  nlohmann::json columns = nlohmann::json::object();
  columns["Headway"] = OptionalJson(m.mean_time_headway);
  columns["Jerk"] = m.mean_abs_jerk;
  if (style == "perturbation") {
    columns["Safety"] = m.mean_log_ttc_safety;
  } else {
    columns["TTC"] = OptionalJson(m.mean_ttc);
  }
  return columns;
}

nlohmann::json MetricsDocument(const ExperimentConfig& exp, const EpisodeMetrics& metrics) {
  const auto style = MetricsStyle(exp);
  nlohmann::json j;
  j["method"] = exp.method;
  j["style"] = style;
  j["preset"] = exp.preset;
  j["controller"] = std::string(ToString(exp.controller));
  j["seed"] = exp.env.scenario.rng_seed;
  j["vehicle_ids"] = MeasuredVehicles(exp.env.scenario);
  j["metrics"] = MetricsToJson(metrics);
  j["columns"] = ColumnValues(style, metrics);
  return j;
}

std::string Report(const EpisodeResult& episode, int& exit_code) {
  exit_code = 0;
  if (episode.collided) {
    exit_code = kExitCollision;
    const auto& last = episode.trajectory.back();
    std::string ids;
    for (const auto& v : last.vehicles) {
      if (!v.collision) continue;
      if (!ids.empty()) ids += ", ";
      ids += std::to_string(v.id);
    }
    char t[32];
    std::snprintf(t, sizeof t, "%.1f", last.t);
    return "collision at t=" + std::string(t) + " s (step " + std::to_string(last.step) +
           "), vehicles " + ids;
  }
  if (episode.road_end_reached) {
    exit_code = kExitRoadEnd;
    return "a vehicle reached the end of the road after " + std::to_string(episode.steps) +
           " steps; episode frozen";
  }
  return "";
}

SimulateOutcome SimulateInto(ExperimentConfig& exp, const fs::path& out, Simulation* initial) {
  auto loaded = LoadPolicyFor(exp);
  Policy policy;
  if (loaded) policy = loaded->agent.AsPolicy();
  MultiAgentEnv env(exp.env);
  env.Reset();
  if (initial) *initial = env.sim();
  RolloutOptions options;
  options.keep_transitions = false;
  SimulateOutcome outcome;
  outcome.episode = RunEpisode(env, loaded ? &policy : nullptr, options);
  outcome.report = Report(outcome.episode, outcome.exit_code);
  outcome.metrics = MetricsDocument(exp, outcome.episode.metrics);
  outcome.metrics["steps"] = outcome.episode.steps;
  outcome.metrics["collided"] = outcome.episode.collided;
  outcome.metrics["road_end_reached"] = outcome.episode.road_end_reached;
  if (!env.agents().empty()) outcome.metrics["mean_reward"] = outcome.episode.mean_reward;
  WriteTrajectoryCsv(out / "trajectory.csv", outcome.episode.trajectory);
  return outcome;
}

}  // namespace

Policy RandomPolicy(int obs_dim, double bound, std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return Policy{obs_dim, [rng, bound](std::span<const double>) {
                  return std::uniform_real_distribution<double>(-bound, bound)(*rng);
                }};
}

std::optional<LoadedPolicy> LoadPolicyFor(ExperimentConfig& exp) {
  const bool has_rl = std::any_of(exp.env.scenario.vehicles.begin(), exp.env.scenario.vehicles.end(),
                                  [](const VehicleSpec& v) { return v.controller == ControllerTag::kRl; });
  if (!has_rl) return std::nullopt;
  if (exp.checkpoint.empty()) {
    throw ConfigError("RL controller requires a checkpoint (--checkpoint or controllers.rl.checkpoint)");
  }
  auto loaded = LoadCheckpoint(exp.checkpoint);
  exp.env.variant = loaded.meta.variant;
  if (exp.method == "rl-bilateral" || exp.method == "rl-cfm") {
    exp.method = "rl-" + std::string(ToString(loaded.meta.variant));
  }
  if (loaded.agent.config().action_bound != exp.env.controllers.accel_bound) {
    throw ConfigError("checkpoint action bound differs from controllers.accel_bound");
  }
  return loaded;
}

std::string MetricsStyle(const ExperimentConfig& exp) {
  return exp.env.scenario.perturbation ? "perturbation" : "closed-loop";
}

SimulateOutcome RunSimulate(const Config& config, const fs::path& out) {
  ExperimentConfig exp = BuildExperiment(config);
  PrepareOutDir(out);
  SimulateOutcome outcome = SimulateInto(exp, out, nullptr);
  WriteJson(out / "metrics.json", outcome.metrics);
  const std::array<fs::path, 2> artifacts = {out / "trajectory.csv", out / "metrics.json"};
  WriteManifest(out, "simulate", config, artifacts);
  return outcome;
}

std::vector<double> AmplitudesFromSpaceTime(const SpaceTime& data, std::span<const int> ids,
                                            double period, double transient_cut) {
  const auto speeds = SpeedsFromSpaceTime(data);
  std::vector<std::vector<double>> selected;
  for (int id : ids) {
    const auto it = std::find(data.vehicle_ids.begin(), data.vehicle_ids.end(), id);
    if (it == data.vehicle_ids.end()) {
      throw AnalysisError("vehicle " + std::to_string(id) + " missing from space-time data");
    }
    selected.push_back(speeds[static_cast<std::size_t>(it - data.vehicle_ids.begin())]);
  }
  return OscillationAmplitudes(selected, data.dt, period, transient_cut);
}

PerturbOutcome RunPerturb(const Config& config, const fs::path& out) {
  ExperimentConfig exp = BuildExperiment(config);
  if (exp.env.scenario.is_ring() || !exp.env.scenario.perturbation) {
    throw ConfigError("perturb needs an open-chain scenario with a perturbation profile");
  }
  PrepareOutDir(out);
  PerturbOutcome outcome;
  Simulation initial(exp.env.scenario);
  outcome.run = SimulateInto(exp, out, &initial);
  outcome.spacetime = BuildSpaceTime(initial, outcome.run.episode.trajectory);
  WriteSpaceTimeCsv(out / "spacetime.csv", outcome.spacetime);
  outcome.amplitude_ids = MeasuredVehicles(exp.env.scenario);
  try {
    outcome.amplitudes = AmplitudesFromSpaceTime(outcome.spacetime, outcome.amplitude_ids,
                                                 exp.analysis_period, exp.transient_cut);
  } catch (const AnalysisError& e) {
    if (outcome.run.exit_code == 0) throw;
    outcome.amplitudes.clear();
  }

  std::string stability = "vehicle_id,position_in_chain,controller,amplitude\n";
  for (std::size_t i = 0; i < outcome.amplitude_ids.size(); ++i) {
    const int id = outcome.amplitude_ids[i];
    stability += std::to_string(id) + "," + std::to_string(i + 1) + "," +
                 std::string(ToString(exp.env.scenario.vehicles[id].controller)) + "," +
                 (outcome.amplitudes.empty() ? "" : FormatNumber(outcome.amplitudes[i])) + "\n";
  }
  WriteText(out / "stability.csv", stability);

  auto& metrics = outcome.run.metrics;
  metrics["period"] = exp.analysis_period;
  metrics["transient_cut"] = exp.transient_cut;
  metrics["amplitudes"] = outcome.amplitudes;
  WriteJson(out / "metrics.json", metrics);
  const std::array<fs::path, 4> artifacts = {out / "trajectory.csv", out / "spacetime.csv",
                                             out / "stability.csv", out / "metrics.json"};
  WriteManifest(out, "perturb", config, artifacts);
  return outcome;
}

TrainResult RunTrain(const Config& config, const fs::path& out) {
  ExperimentConfig exp = BuildExperiment(config);
  PrepareOutDir(out);
  std::string curve = "episode,mean_reward,mean_headway,collisions\n";
  TrainResult result = Train(exp.env, exp.train, [&](const CurveRow& row) {
    curve += std::to_string(row.episode) + "," + FormatNumber(row.mean_reward) + "," +
             (row.mean_headway ? FormatNumber(*row.mean_headway) : "") + "," +
             std::to_string(row.collisions) + "\n";
  });
  WriteText(out / "curve.csv", curve);
  SaveCheckpoint(out / "policy.ckpt", result.agent,
                 CheckpointMeta{exp.train.seed, exp.train.episodes, exp.env.variant});
  const std::array<fs::path, 2> artifacts = {out / "policy.ckpt", out / "curve.csv"};
  WriteManifest(out, "train", config, artifacts);
  return result;
}

EvalOutcome RunEval(const Config& config, const fs::path& out) {
  ExperimentConfig exp = BuildExperiment(config);
  const auto& mode = config.Get("eval.policy");
  std::optional<LoadedPolicy> loaded;
  Policy policy;
  MultiAgentEnv probe(exp.env);
  const bool has_agents = !probe.agents().empty();
  if (mode == "random") {
    if (has_agents) {
      policy = RandomPolicy(probe.obs_dim(), exp.env.controllers.accel_bound,
                            exp.env.scenario.rng_seed);
    }
    exp.method = "random";
  } else if (mode == "checkpoint") {
    loaded = LoadPolicyFor(exp);
    if (loaded) policy = loaded->agent.AsPolicy();
  } else {
    throw ConfigError("eval.policy must be checkpoint or random");
  }
  PrepareOutDir(out);

  MultiAgentEnv env(exp.env);
  EvalOutcome outcome;
  RolloutOptions options;
  options.keep_trajectory = false;
  options.keep_transitions = false;
  nlohmann::json episodes = nlohmann::json::array();
  double headway_sum = 0.0, ttc_sum = 0.0;
  int headway_n = 0, ttc_n = 0;
  for (int e = 0; e < exp.eval_episodes; ++e) {
    const std::uint64_t seed = exp.env.scenario.rng_seed + static_cast<std::uint64_t>(e);
    env.Reset(seed);
    auto episode = RunEpisode(env, has_agents ? &policy : nullptr, options);
    const auto& m = episode.metrics;
    episodes.push_back({{"seed", seed},
                        {"steps", episode.steps},
                        {"mean_reward", episode.mean_reward},
                        {"collided", episode.collided},
                        {"metrics", MetricsToJson(m)}});
    outcome.mean_reward += episode.mean_reward / exp.eval_episodes;
    outcome.collisions += episode.collided ? 1 : 0;
    auto& agg = outcome.metrics;
    if (m.mean_time_headway) headway_sum += *m.mean_time_headway, ++headway_n;
    if (m.mean_ttc) ttc_sum += *m.mean_ttc, ++ttc_n;
    agg.mean_abs_jerk += m.mean_abs_jerk / exp.eval_episodes;
    agg.mean_log_ttc_safety += m.mean_log_ttc_safety / exp.eval_episodes;
    agg.mean_speed += m.mean_speed / exp.eval_episodes;
    agg.collision_count += m.collision_count;
    agg.samples += m.samples;
    outcome.episodes.push_back(std::move(episode));
  }
  if (headway_n) outcome.metrics.mean_time_headway = headway_sum / headway_n;
  if (ttc_n) outcome.metrics.mean_ttc = ttc_sum / ttc_n;

  nlohmann::json summary = MetricsDocument(exp, outcome.metrics);
  summary["episodes"] = exp.eval_episodes;
  summary["collisions"] = outcome.collisions;
  if (has_agents) summary["mean_reward"] = outcome.mean_reward;
  nlohmann::json eval = summary;
  eval["per_episode"] = episodes;
  WriteJson(out / "eval.json", eval);
  WriteJson(out / "metrics.json", summary);
  const std::array<fs::path, 2> artifacts = {out / "eval.json", out / "metrics.json"};
  WriteManifest(out, "eval", config, artifacts);
  return outcome;
}

SummaryTable BuildSummaryTable(std::span<const fs::path> run_dirs) {
  if (run_dirs.empty()) throw ConfigError("table needs at least one run directory");
  struct Entry {
    fs::path dir;
    nlohmann::json doc;
  };
  std::vector<Entry> entries;
  for (const auto& dir : run_dirs) {
    const auto file = dir / "metrics.json";
    std::ifstream in(file);
    if (!in) throw ConfigError("no metrics.json in " + dir.string());
    try {
      entries.push_back({dir, nlohmann::json::parse(in)});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed " + file.string() + ": " + e.what());
    }
    if (!entries.back().doc.contains("style") || !entries.back().doc.contains("columns")) {
      throw ConfigError(file.string() + " lacks style/columns");
    }
  }
  SummaryTable table;
  table.style = entries.front().doc["style"].get<std::string>();
  std::vector<std::string> offenders;
  for (const auto& entry : entries) {
    const auto style = entry.doc["style"].get<std::string>();
    if (style != table.style) offenders.push_back(entry.dir.string() + " (" + style + ")");
  }
  if (!offenders.empty()) {
    std::string message = "runs mix column sets; expected " + table.style + " style, offenders:";
    for (const auto& o : offenders) message += " " + o;
    throw ConfigError(message);
  }
  table.columns = StyleColumns(table.style);
  for (const auto& entry : entries) {
    SummaryTable::Row row;
    row.method = entry.doc.value("method", entry.dir.filename().string());
    for (const auto& column : table.columns) {
      const auto& value = entry.doc["columns"][column];
      row.values.push_back(value.is_null() ? std::nullopt : std::optional<double>(value.get<double>()));
    }
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const auto& a, const auto& b) { return a.method < b.method; });
  return table;
}

std::string FormatTableCsv(const SummaryTable& table) {
  std::string text = "method";
  for (const auto& c : table.columns) text += "," + c;
  text += "\n";
  for (const auto& row : table.rows) {
    text += row.method;
    for (const auto& v : row.values) text += "," + (v ? FormatNumber(*v) : std::string());
    text += "\n";
  }
  return text;
}

std::string FormatTableText(const SummaryTable& table) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Method"});
  for (const auto& c : table.columns) cells.back().push_back(c);
  for (const auto& row : table.rows) {
    cells.push_back({row.method});
    for (const auto& v : row.values) {
      char buf[32] = "-";
      if (v) std::snprintf(buf, sizeof buf, "%.3f", *v);
      cells.back().push_back(buf);
    }
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::string text;
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i == 0) {
        text += line[i] + std::string(width[i] - line[i].size(), ' ');
      } else {
        text += "  " + std::string(width[i] - line[i].size(), ' ') + line[i];
      }
    }
    text += "\n";
  }
  return text;
}

std::string Sha256Hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw ConfigError("SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buffer;
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

void WriteManifest(const fs::path& out, std::string_view command, const Config& config,
                   std::span<const fs::path> artifacts) {
  nlohmann::json manifest;
  manifest["command"] = std::string(command);
  manifest["seed"] = config.GetUint("scenario.seed");
  manifest["config"] = config.ToJson();
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& artifact : artifacts) hashes[artifact.filename().string()] = Sha256Hex(artifact);
  manifest["artifacts"] = hashes;
  WriteJson(out / "manifest.json", manifest);
}

Config ConfigFromManifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError("cannot read " + manifest.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed manifest: " + std::string(e.what()));
  }
  const auto& values = j.at("config");
  Config config = Config::Defaults(values.at("scenario.preset").get<std::string>());
  for (const auto& [key, value] : values.items()) {
    if (key != "scenario.preset") config.Set(key, value.get<std::string>());
  }
  return config;
}

}  // namespace carfollow
