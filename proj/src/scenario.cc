#include "carfollow/scenario.h"

#include <cmath>
#include <numbers>

#include "carfollow/errors.h"

namespace carfollow {

std::string_view ToString(ControllerTag tag) {
  switch (tag) {
    case ControllerTag::kIdm:
      return "idm";
    case ControllerTag::kGipps:
      return "gipps";
    case ControllerTag::kBcm:
      return "bcm";
    case ControllerTag::kUnilateral:
      return "unilateral";
    case ControllerTag::kRl:
      return "rl";
  }
  return "unknown";
}

ControllerTag ParseControllerTag(std::string_view name) {
  for (ControllerTag tag : {ControllerTag::kIdm, ControllerTag::kGipps, ControllerTag::kBcm,
                            ControllerTag::kUnilateral, ControllerTag::kRl}) {
    if (ToString(tag) == name) return tag;
  }
  throw ConfigError("unknown controller tag '" + std::string(name) + "'");
}

double PerturbationProfile::SpeedAt(double t) const {
  if (const auto* sine = std::get_if<Sinusoid>(&waveform)) {
    return base_speed + sine->amplitude * std::sin(2.0 * std::numbers::pi * t / sine->period);
  }
  const auto& pulse = std::get<Pulse>(waveform);
  const bool active = t >= pulse.start && t < pulse.start + pulse.duration;
  return active ? base_speed - pulse.drop : base_speed;
}

void PerturbationProfile::Validate() const {
  if (!std::isfinite(base_speed) || base_speed < 0.0) {
    throw ConfigError("perturbation base speed must be finite and >= 0");
  }
  if (const auto* sine = std::get_if<Sinusoid>(&waveform)) {
    if (!(sine->period > 0.0)) throw ConfigError("perturbation period must be > 0");
    if (sine->amplitude < 0.0) throw ConfigError("perturbation amplitude must be >= 0");
    if (base_speed - sine->amplitude < 0.0) {
      throw ConfigError("perturbation profile would drive the leader to negative speed");
    }
  } else {
    const auto& pulse = std::get<Pulse>(waveform);
    if (pulse.duration < 0.0 || pulse.drop < 0.0) {
      throw ConfigError("pulse drop and duration must be >= 0");
    }
    if (base_speed - pulse.drop < 0.0) {
      throw ConfigError("perturbation profile would drive the leader to negative speed");
    }
  }
}

double ScenarioConfig::track_length() const {
  return std::visit(
      [](const auto& topo) {
        if constexpr (std::is_same_v<std::decay_t<decltype(topo)>, Ring>) {
          return topo.track_length;
        } else {
          return topo.road_length;
        }
      },
      topology);
}

std::vector<std::optional<double>> InitialGaps(const ScenarioConfig& config) {
  const auto& v = config.vehicles;
  std::vector<std::optional<double>> gaps(v.size());
  for (std::size_t i = 1; i < v.size(); ++i) {
    gaps[i] = v[i - 1].position - v[i].position - v[i - 1].length;
  }
  if (config.is_ring() && !v.empty()) {
    gaps[0] = v.back().position + config.track_length() - v[0].position - v.back().length;
  }
  return gaps;
}

void ScenarioConfig::Validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (steps_per_episode < 1) throw ConfigError("steps_per_episode must be >= 1");
  if (vehicles.empty()) throw ConfigError("scenario has no vehicles");
  const double length = track_length();
  if (!(length > 0.0)) throw ConfigError("track/road length must be positive");
  if (!(target_speed > 0.0)) throw ConfigError("target_speed must be positive");
  if (!(target_headway > 0.0)) throw ConfigError("target_headway must be positive");
  if (initial_jitter < 0.0) throw ConfigError("initial_jitter must be >= 0");
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const auto& veh = vehicles[i];
    if (!(veh.length > 0.0)) throw ConfigError("vehicle length must be positive");
    if (veh.speed < 0.0 || !std::isfinite(veh.speed)) {
      throw ConfigError("initial speed must be finite and >= 0");
    }
    if (!std::isfinite(veh.position)) throw ConfigError("initial position must be finite");
    if (is_ring() && (veh.position < 0.0 || veh.position >= length)) {
      throw ConfigError("ring positions must lie in [0, track_length)");
    }
    if (i > 0 && !(vehicles[i - 1].position > veh.position)) {
      throw ConfigError("initial positions must be strictly decreasing front to back (vehicle " +
                        std::to_string(i) + ")");
    }
  }
  const auto gaps = InitialGaps(*this);
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const auto& gap = gaps[i];
    if (gap && !(*gap > 0.0)) {
      throw ConfigError("overlapping vehicles: initial gap of vehicle " + std::to_string(i) +
                        " is not positive");
    }
  }
  if (perturbation) perturbation->Validate();
}

}  // namespace carfollow
