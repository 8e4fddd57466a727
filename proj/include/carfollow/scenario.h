#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace carfollow {

enum class ControllerTag { kIdm, kGipps, kBcm, kUnilateral, kRl };

std::string_view ToString(ControllerTag tag);
// Throws ConfigError on unknown names.
ControllerTag ParseControllerTag(std::string_view name);

struct Ring {
  double track_length = 300.0;
};

struct OpenChain {
  double road_length = 10000.0;
};

using Topology = std::variant<Ring, OpenChain>;

struct Sinusoid {
  double amplitude = 2.0;  // m/s
  double period = 60.0;    // s
};

// Speed drops by `drop` for `duration` seconds starting at `start`.
struct Pulse {
  double drop = 5.0;
  double duration = 10.0;
  double start = 30.0;
};

// Speed profile forced onto the lead vehicle of a perturbation run.
struct PerturbationProfile {
  double base_speed = 20.0;
  std::variant<Sinusoid, Pulse> waveform = Sinusoid{};

  double SpeedAt(double t) const;
  // base_speed minus the amplitude (or drop) must stay nonnegative.
  void Validate() const;
};

struct VehicleSpec {
  ControllerTag controller = ControllerTag::kIdm;
  double position = 0.0;
  double speed = 0.0;
  double length = 5.0;
  // Included in EpisodeMetrics aggregation.
  bool measured = true;
};

struct ScenarioConfig {
  Topology topology = Ring{};
  double dt = 0.1;
  int steps_per_episode = 3600;
  // Ordered front to back: vehicles[0] is the head, vehicles[i - 1] leads
  // vehicles[i]. On a ring the head follows the last vehicle.
  std::vector<VehicleSpec> vehicles;
  double target_speed = 20.0;
  double target_headway = 1.26;
  std::optional<PerturbationProfile> perturbation;
  std::uint64_t rng_seed = 0;
  // Uniform +/- jitter (m) applied to initial positions from rng_seed.
  double initial_jitter = 0.0;

  bool is_ring() const { return std::holds_alternative<Ring>(topology); }
  double track_length() const;  // ring length or open-chain road length

  // Throws ConfigError when dt <= 0, steps < 1, the roster is empty or
  // initial positions are not strictly ordered with positive gaps.
  void Validate() const;
};

// Bumper-to-bumper gaps of a roster laid out as in ScenarioConfig. Entry i is
// the gap from vehicle i to its leader; absent for an open-chain head.
std::vector<std::optional<double>> InitialGaps(const ScenarioConfig& config);

}  // namespace carfollow
