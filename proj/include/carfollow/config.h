#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "carfollow/env.h"
#include "carfollow/train.h"
#include "json.hpp"

namespace carfollow {

// Flat configuration keyed by dotted names (`reward.weights.safety`,
// `controllers.idm.desired_speed`, ...). Every known key has a default that
// depends on the preset; setting an unknown key is a ConfigError. An empty
// value means "derived" for keys documented as such.
class Config {
 public:
  // Presets: closed-loop, ring-single, perturbation.
  static Config Defaults(std::string_view preset);
  static const std::set<std::string>& Presets();

  void Set(std::string_view key, std::string value);
  // Nested YAML maps are flattened with '.' separators.
  void MergeYaml(const std::string& text);
  void MergeYamlFile(const std::filesystem::path& path);

  const std::string& Get(std::string_view key) const;
  double GetDouble(std::string_view key) const;
  int GetInt(std::string_view key) const;
  std::uint64_t GetUint(std::string_view key) const;
  bool GetBool(std::string_view key) const;
  bool IsSet(std::string_view key) const { return !Get(key).empty(); }
  bool Has(std::string_view key) const { return values_.contains(std::string(key)); }

  const std::map<std::string, std::string>& values() const { return values_; }
  nlohmann::json ToJson() const;

 private:
  std::map<std::string, std::string> values_;
};

// Parses only the `scenario.preset` entry of a YAML file, if present.
std::string PresetFromYamlFile(const std::filesystem::path& path);

struct ExperimentConfig {
  std::string preset;
  ControllerTag controller = ControllerTag::kRl;  // for the controlled slots
  EnvConfig env;
  TrainConfig train;
  std::string checkpoint;
  std::string method;  // label used in summary tables
  double transient_cut = 120.0;  // s
  double analysis_period = 60.0;  // s
  int eval_episodes = 5;
};

// Builds the scenario roster and typed parameter structs from a resolved
// config. Throws ConfigError on invalid values.
ExperimentConfig BuildExperiment(const Config& config);

// Gap ahead of a vehicle of the given controller that holds speed v in a
// steady platoon (BCM has no unique one and takes the IDM value).
double EquilibriumGap(ControllerTag tag, double v, const ControllerParams& params,
                      double target_headway, double vehicle_length);

}  // namespace carfollow
