#include "carfollow/config.h"

#include <charconv>
#include <fstream>
#include <cmath>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "carfollow/checkpoint.h"
#include "carfollow/errors.h"

namespace carfollow {

namespace {

using Defaults = std::map<std::string, std::string>;

Defaults CommonDefaults() {
  return {
      {"scenario.preset", "closed-loop"},
      {"scenario.controller", "rl"},
      {"scenario.topology", "ring"},
      {"scenario.track_length", "300"},
      {"scenario.road_length", "10000"},
      {"scenario.num_vehicles", "10"},
      {"scenario.num_controlled", "5"},
      {"scenario.layout", "interleaved"},
      {"scenario.dt", "0.1"},
      {"scenario.steps", "3600"},
      {"scenario.seed", "0"},
      {"scenario.target_speed", "20"},
      {"scenario.target_headway", "1.26"},
      {"scenario.initial_speed", "0"},
      {"scenario.initial_jitter", "1"},
      {"scenario.vehicle_length", "5"},
      {"perturbation.waveform", "none"},
      {"perturbation.base_speed", "20"},
      {"perturbation.amplitude", "2"},
      {"perturbation.period", "60"},
      {"perturbation.drop", "5"},
      {"perturbation.duration", "10"},
      {"perturbation.start", "30"},
      {"controllers.idm.desired_speed", "30"},
      {"controllers.idm.max_accel", "1.4"},
      {"controllers.idm.comfortable_decel", "2.0"},
      {"controllers.idm.time_headway", ""},  // derived: scenario.target_headway
      {"controllers.idm.jam_distance", "2"},
      {"controllers.idm.exponent", "4"},
      {"controllers.gipps.desired_speed", "30"},
      {"controllers.gipps.max_accel", "3"},
      {"controllers.gipps.comfortable_decel", "3"},
      {"controllers.gipps.reaction_time", "1"},
      {"controllers.bcm.kd", "0.5"},
      {"controllers.bcm.kv", "1.0"},
      {"controllers.bcm.reaction_time", "1.26"},
      {"controllers.unilateral.kd", "0.5"},
      {"controllers.unilateral.kv", "1.0"},
      {"controllers.unilateral.reaction_time", "1.26"},
      {"controllers.clip_classical", "false"},
      {"controllers.accel_bound", "3"},
      {"controllers.rl.variant", "bilateral"},
      {"controllers.rl.checkpoint", ""},
      {"reward.weights.safety", "1"},
      {"reward.weights.efficiency", "1"},
      {"reward.weights.comfort", "1"},
      {"reward.target_headway", ""},  // derived: when set, u = ln(h) + sigma^2
      {"reward.u", "0.4226"},
      {"reward.sigma", "0.4365"},
      {"reward.collision_penalty", "-50"},
      {"train.episodes", "120"},
      {"train.steps", "3600"},
      {"train.gamma", "0.99"},
      {"train.tau", "0.005"},
      {"train.batch_size", "64"},
      {"train.actor_lr", "1e-4"},
      {"train.critic_lr", "1e-3"},
      {"train.noise", "0.3"},
      {"train.noise_decay", "0.995"},
      {"train.buffer_capacity", "100000"},
      {"train.hidden", "64,64"},
      {"train.updates_per_step", "1"},
      {"train.seed", ""},  // derived: scenario.seed
      {"eval.episodes", "5"},
      {"eval.policy", "checkpoint"},  // checkpoint | random
      {"analysis.transient_cut", ""},  // derived: two forcing periods
      {"output.method", ""},           // derived: controller tag
  };
}

std::string ScalarString(const YAML::Node& node) {
  if (node.IsNull()) return "";
  if (node.IsSequence()) {
    std::string joined;
    for (std::size_t i = 0; i < node.size(); ++i) {
      if (i) joined += ',';
      joined += node[i].as<std::string>();
    }
    return joined;
  }
  return node.as<std::string>();
}

void Flatten(const YAML::Node& node, const std::string& prefix,
             std::map<std::string, std::string>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      Flatten(kv.second, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else {
    if (prefix.empty()) throw ConfigError("config file must be a mapping");
    out[prefix] = ScalarString(node);
  }
}

std::map<std::string, std::string> ParseYaml(const std::string& text) {
  std::map<std::string, std::string> flat;
  try {
    const YAML::Node root = YAML::Load(text);
    if (!root.IsNull()) Flatten(root, "", flat);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return flat;
}

std::vector<int> ParseIntList(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("bad integer list '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

}  // namespace

const std::set<std::string>& Config::Presets() {
  static const std::set<std::string> presets = {"closed-loop", "ring-single", "perturbation"};
  return presets;
}

Config Config::Defaults(std::string_view preset) {
  if (!Presets().contains(std::string(preset))) {
    throw ConfigError("unknown preset '" + std::string(preset) + "'");
  }
  Config config;
  config.values_ = CommonDefaults();
  config.values_["scenario.preset"] = std::string(preset);
  if (preset == "ring-single") {
    config.values_["scenario.num_controlled"] = "1";
  } else if (preset == "perturbation") {
    config.values_["scenario.controller"] = "bcm";
    config.values_["scenario.topology"] = "open_chain";
    config.values_["scenario.num_vehicles"] = "12";
    config.values_["scenario.num_controlled"] = "10";
    config.values_["scenario.layout"] = "contiguous";
    config.values_["scenario.initial_speed"] = "20";
    config.values_["scenario.initial_jitter"] = "0";
    config.values_["perturbation.waveform"] = "sinusoid";
  }
  return config;
}

void Config::Set(std::string_view key, std::string value) {
  const auto it = values_.find(std::string(key));
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  if (key == "scenario.preset" && value != it->second) {
    throw ConfigError("scenario.preset must be chosen before other keys are applied");
  }
  it->second = std::move(value);
}

void Config::MergeYaml(const std::string& text) {
  for (auto& [key, value] : ParseYaml(text)) {
    if (key == "scenario.preset") continue;
    Set(key, std::move(value));
  }
}

void Config::MergeYamlFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  MergeYaml(buffer.str());
}

std::string PresetFromYamlFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto flat = ParseYaml(buffer.str());
  const auto it = flat.find("scenario.preset");
  return it == flat.end() ? "" : it->second;
}

const std::string& Config::Get(std::string_view key) const {
  const auto it = values_.find(std::string(key));
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

double Config::GetDouble(std::string_view key) const {
  const auto& text = Get(key);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + text + "'");
  }
  return value;
}

int Config::GetInt(std::string_view key) const {
  const auto& text = Get(key);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + text + "'");
  }
  return value;
}

std::uint64_t Config::GetUint(std::string_view key) const {
  const auto& text = Get(key);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key) + ": expected a nonnegative integer, got '" + text + "'");
  }
  return value;
}

bool Config::GetBool(std::string_view key) const {
  const auto& text = Get(key);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(std::string(key) + ": expected a boolean, got '" + text + "'");
}

nlohmann::json Config::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : values_) j[key] = value;
  return j;
}

double EquilibriumGap(ControllerTag tag, double v, const ControllerParams& params,
                      double target_headway, double vehicle_length) {
  switch (tag) {
    case ControllerTag::kGipps:
      return v * params.gipps.reaction_time;
    case ControllerTag::kUnilateral:
      return v * params.unilateral.reaction_time;
    case ControllerTag::kRl: {
      const double gap = target_headway * v - vehicle_length;
      if (gap > 0.0) return gap;
      return IdmEquilibriumGap(v, params.idm);
    }
    case ControllerTag::kIdm:
    case ControllerTag::kBcm:
      break;
  }
  return IdmEquilibriumGap(v, params.idm);
}

namespace {

std::vector<bool> ControlledSlots(int n, int k, const std::string& layout, bool skip_head,
                                  bool skip_tail) {
  std::vector<bool> controlled(static_cast<std::size_t>(n), false);
  const int first = skip_head ? 1 : 0;
  const int available = n - first - (skip_tail ? 1 : 0);
  if (k < 0 || k > available) {
    throw ConfigError("scenario.num_controlled must lie in [0, " + std::to_string(available) +
                      "]");
  }
  if (layout == "contiguous") {
    for (int i = 0; i < k; ++i) controlled[first + i] = true;
  } else if (layout == "interleaved") {
    for (int i = 0; i < k; ++i) controlled[first + (i * available) / k] = true;
  } else {
    throw ConfigError("scenario.layout must be interleaved or contiguous");
  }
  return controlled;
}

}  // namespace

ExperimentConfig BuildExperiment(const Config& c) {
  ExperimentConfig exp;
  exp.preset = c.Get("scenario.preset");
  exp.controller = ParseControllerTag(c.Get("scenario.controller"));
  exp.checkpoint = c.Get("controllers.rl.checkpoint");
  exp.eval_episodes = c.GetInt("eval.episodes");
  if (exp.eval_episodes < 1) throw ConfigError("eval.episodes must be >= 1");

  ScenarioConfig& sc = exp.env.scenario;
  sc.dt = c.GetDouble("scenario.dt");
  sc.steps_per_episode = c.GetInt("scenario.steps");
  sc.rng_seed = c.GetUint("scenario.seed");
  sc.target_speed = c.GetDouble("scenario.target_speed");
  sc.target_headway = c.GetDouble("scenario.target_headway");
  sc.initial_jitter = c.GetDouble("scenario.initial_jitter");
  if (!(sc.dt > 0.0)) throw ConfigError("scenario.dt must be positive");
  if (sc.steps_per_episode < 1) throw ConfigError("scenario.steps must be >= 1");
  if (!(sc.target_headway > 0.0)) throw ConfigError("scenario.target_headway must be positive");

  ControllerParams& cp = exp.env.controllers;
  cp.idm.desired_speed = c.GetDouble("controllers.idm.desired_speed");
  cp.idm.max_accel = c.GetDouble("controllers.idm.max_accel");
  cp.idm.comfortable_decel = c.GetDouble("controllers.idm.comfortable_decel");
  cp.idm.time_headway = c.IsSet("controllers.idm.time_headway")
                            ? c.GetDouble("controllers.idm.time_headway")
                            : sc.target_headway;
  cp.idm.jam_distance = c.GetDouble("controllers.idm.jam_distance");
  cp.idm.exponent = c.GetDouble("controllers.idm.exponent");
  cp.gipps.desired_speed = c.GetDouble("controllers.gipps.desired_speed");
  cp.gipps.max_accel = c.GetDouble("controllers.gipps.max_accel");
  cp.gipps.comfortable_decel = c.GetDouble("controllers.gipps.comfortable_decel");
  cp.gipps.reaction_time = c.GetDouble("controllers.gipps.reaction_time");
  cp.bcm.kd = c.GetDouble("controllers.bcm.kd");
  cp.bcm.kv = c.GetDouble("controllers.bcm.kv");
  cp.bcm.reaction_time = c.GetDouble("controllers.bcm.reaction_time");
  cp.unilateral.kd = c.GetDouble("controllers.unilateral.kd");
  cp.unilateral.kv = c.GetDouble("controllers.unilateral.kv");
  cp.unilateral.reaction_time = c.GetDouble("controllers.unilateral.reaction_time");
  cp.clip_classical = c.GetBool("controllers.clip_classical");
  cp.accel_bound = c.GetDouble("controllers.accel_bound");
  cp.target_speed = sc.target_speed;
  cp.Validate();

  exp.env.variant = ParseObservationVariant(c.Get("controllers.rl.variant"));

  RewardParams& rp = exp.env.reward;
  rp.weights.safety = c.GetDouble("reward.weights.safety");
  rp.weights.efficiency = c.GetDouble("reward.weights.efficiency");
  rp.weights.comfort = c.GetDouble("reward.weights.comfort");
  rp.eff.sigma = c.GetDouble("reward.sigma");
  if (!(rp.eff.sigma > 0.0)) throw ConfigError("reward.sigma must be positive");
  rp.eff.u = c.IsSet("reward.target_headway")
                 ? RetargetU(c.GetDouble("reward.target_headway"), rp.eff.sigma)
                 : c.GetDouble("reward.u");
  rp.collision_penalty = c.GetDouble("reward.collision_penalty");

  TrainConfig& tc = exp.train;
  tc.episodes = c.GetInt("train.episodes");
  tc.steps = c.GetInt("train.steps");
  tc.gamma = c.GetDouble("train.gamma");
  tc.tau = c.GetDouble("train.tau");
  tc.batch_size = c.GetInt("train.batch_size");
  tc.actor_lr = c.GetDouble("train.actor_lr");
  tc.critic_lr = c.GetDouble("train.critic_lr");
  tc.noise_sigma = c.GetDouble("train.noise");
  tc.noise_decay = c.GetDouble("train.noise_decay");
  tc.buffer_capacity = c.GetUint("train.buffer_capacity");
  tc.hidden = ParseIntList(c.Get("train.hidden"));
  tc.updates_per_step = c.GetInt("train.updates_per_step");
  tc.seed = c.IsSet("train.seed") ? c.GetUint("train.seed") : sc.rng_seed;
  tc.Validate();

  // Perturbation profile.
  const auto& waveform = c.Get("perturbation.waveform");
  if (waveform == "sinusoid" || waveform == "pulse") {
    PerturbationProfile profile;
    profile.base_speed = c.GetDouble("perturbation.base_speed");
    if (waveform == "sinusoid") {
      profile.waveform =
          Sinusoid{c.GetDouble("perturbation.amplitude"), c.GetDouble("perturbation.period")};
    } else {
      profile.waveform = Pulse{c.GetDouble("perturbation.drop"),
                               c.GetDouble("perturbation.duration"),
                               c.GetDouble("perturbation.start")};
    }
    profile.Validate();
    sc.perturbation = profile;
  } else if (waveform != "none") {
    throw ConfigError("perturbation.waveform must be none, sinusoid or pulse");
  }

  // Analysis window.
  const double horizon = sc.steps_per_episode * sc.dt;
  if (sc.perturbation) {
    if (const auto* sine = std::get_if<Sinusoid>(&sc.perturbation->waveform)) {
      exp.analysis_period = sine->period;
      exp.transient_cut = 2.0 * sine->period;
    } else {
      exp.analysis_period = horizon;
      exp.transient_cut = 0.0;
    }
  } else {
    exp.analysis_period = horizon;
    exp.transient_cut = 0.0;
  }
  if (c.IsSet("analysis.transient_cut")) exp.transient_cut = c.GetDouble("analysis.transient_cut");

  // Roster.
  const int n = c.GetInt("scenario.num_vehicles");
  if (n < 1) throw ConfigError("scenario.num_vehicles must be >= 1");
  const int k = c.GetInt("scenario.num_controlled");
  const double length = c.GetDouble("scenario.vehicle_length");
  const double initial_speed = c.GetDouble("scenario.initial_speed");
  const auto& topology = c.Get("scenario.topology");
  if (topology == "ring") {
    const double track = c.GetDouble("scenario.track_length");
    sc.topology = Ring{track};
    const auto controlled = ControlledSlots(n, k, c.Get("scenario.layout"), false, false);
    const double spacing = track / n;
    for (int i = 0; i < n; ++i) {
      VehicleSpec spec;
      spec.controller = controlled[i] ? exp.controller : ControllerTag::kIdm;
      spec.position = (n - 1 - i) * spacing + 0.5 * spacing;
      spec.speed = initial_speed;
      spec.length = length;
      spec.measured = controlled[i];
      sc.vehicles.push_back(spec);
    }
  } else if (topology == "open_chain") {
    sc.topology = OpenChain{c.GetDouble("scenario.road_length")};
    if (n < 2) throw ConfigError("an open-chain platoon needs at least 2 vehicles");
    // Head and tail stay IDM (the head is forced when a profile is set).
    const auto controlled = ControlledSlots(n, k, c.Get("scenario.layout"), true, true);
    std::vector<VehicleSpec> roster(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      roster[i].controller = controlled[i] ? exp.controller : ControllerTag::kIdm;
      roster[i].speed = initial_speed;
      roster[i].length = length;
      roster[i].measured = controlled[i];
    }
    // Lay out back to front at each vehicle's equilibrium gap.
    double position = 0.0;
    for (int i = n - 1; i >= 0; --i) {
      roster[i].position = position;
      if (i > 0) {
        const double gap = initial_speed > 0.0
                               ? EquilibriumGap(roster[i].controller, initial_speed, cp,
                                                sc.target_headway, length)
                               : cp.idm.jam_distance;
        position += gap + roster[i - 1].length;
      }
    }
    sc.vehicles = std::move(roster);
  } else {
    throw ConfigError("scenario.topology must be ring or open_chain");
  }
  sc.Validate();

  exp.method = c.IsSet("output.method") ? c.Get("output.method")
                                        : std::string(ToString(exp.controller));
  if (exp.method == "rl") exp.method = "rl-" + std::string(ToString(exp.env.variant));
  return exp;
}

}  // namespace carfollow
