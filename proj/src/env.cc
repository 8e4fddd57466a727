#include "carfollow/env.h"

#include <algorithm>
#include <string>

#include "carfollow/errors.h"

namespace carfollow {

int ObservationDim(ObservationVariant variant) {
  return variant == ObservationVariant::kBilateral ? 7 : 5;
}

std::vector<double> ObserveRaw(const Simulation& sim, int agent_id, ObservationVariant variant,
                               double target_speed) {
  const auto& self = sim.vehicle(agent_id);
  const auto view = sim.Neighbors(agent_id);
  const double front_gap = view.front ? std::min(view.front->gap, kSensingRange) : kSensingRange;
  const double front_dv = view.front ? view.front->speed - self.speed : 0.0;
  if (variant == ObservationVariant::kCfm) {
    return {self.speed, front_gap, front_dv, target_speed, self.accel};
  }
  const double back_gap = view.back ? std::min(view.back->gap, kSensingRange) : kSensingRange;
  const double back_dv = view.back ? self.speed - view.back->speed : 0.0;
  return {self.speed, front_gap, front_dv, back_gap, back_dv, target_speed, self.accel};
}

std::vector<double> NormalizeObservation(std::span<const double> raw,
                                         ObservationVariant variant) {
  static constexpr double kBilateralScales[] = {kSpeedScale,   kSensingRange, kSpeedScale,
                                                kSensingRange, kSpeedScale,   kSpeedScale,
                                                kAccelScale};
  static constexpr double kCfmScales[] = {kSpeedScale, kSensingRange, kSpeedScale, kSpeedScale,
                                          kAccelScale};
  const std::span<const double> scales =
      variant == ObservationVariant::kBilateral ? std::span<const double>(kBilateralScales)
                                                : std::span<const double>(kCfmScales);
  if (raw.size() != scales.size()) throw ConfigError("observation has the wrong dimension");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::clamp(raw[i] / scales[i], -1.0, 1.0);
  }
  return out;
}

std::vector<double> Observe(const Simulation& sim, int agent_id, ObservationVariant variant,
                            double target_speed) {
  return NormalizeObservation(ObserveRaw(sim, agent_id, variant, target_speed), variant);
}

std::vector<int> MeasuredVehicles(const ScenarioConfig& scenario) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < scenario.vehicles.size(); ++i) {
    if (scenario.vehicles[i].measured) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

MultiAgentEnv::MultiAgentEnv(EnvConfig config)
    : config_(std::move(config)), sim_(config_.scenario) {
  config_.controllers.Validate();
  if (!(config_.reward.eff.sigma > 0.0)) throw ConfigError("reward sigma must be positive");
  for (const auto& veh : sim_.vehicles()) {
    if (veh.controller == ControllerTag::kRl) agents_.push_back(veh.id);
  }
}

void MultiAgentEnv::Reset(std::optional<std::uint64_t> seed) {
  ScenarioConfig scenario = config_.scenario;
  if (seed) scenario.rng_seed = *seed;
  sim_ = Simulation(std::move(scenario));
}

std::vector<std::vector<double>> MultiAgentEnv::Observations() const {
  std::vector<std::vector<double>> out;
  out.reserve(agents_.size());
  for (int id : agents_) {
    out.push_back(Observe(sim_, id, config_.variant, config_.scenario.target_speed));
  }
  return out;
}

EnvStep MultiAgentEnv::Step(std::span<const double> actions) {
  if (actions.size() != agents_.size()) {
    throw SimulationError("expected " + std::to_string(agents_.size()) + " actions, got " +
                          std::to_string(actions.size()));
  }
  const double bound = config_.controllers.accel_bound;
  std::vector<double> commands(static_cast<std::size_t>(sim_.num_vehicles()));
  for (int i = 0; i < sim_.num_vehicles(); ++i) {
    const auto tag = sim_.vehicle(i).controller;
    if (i == 0 && config_.scenario.perturbation) {
      commands[i] = ForcedCommand(*config_.scenario.perturbation, sim_, i);
    } else if (tag != ControllerTag::kRl) {
      commands[i] = ClassicalCommand(tag, sim_, i, config_.controllers);
    }
  }
  for (std::size_t k = 0; k < agents_.size(); ++k) {
    const int id = agents_[k];
    if (id == 0 && config_.scenario.perturbation) continue;
    commands[id] = ClipAccel(actions[k], -bound, bound);
  }

  EnvStep out;
  out.record = sim_.Step(commands);
  out.rewards.reserve(agents_.size());
  const auto& weights = config_.reward.weights;
  const auto& eff = config_.reward.eff;
  for (int id : agents_) {
    auto& rec = out.record.vehicles[id];
    RewardTerms terms;
    if (config_.variant == ObservationVariant::kBilateral) {
      const auto back = sim_.Neighbors(id).back;
      std::optional<double> ttc_back, headway_back;
      if (back) {
        ttc_back = out.record.vehicles[back->id].ttc;
        headway_back = out.record.vehicles[back->id].time_headway;
      }
      terms = BilateralTerms(rec.ttc, rec.time_headway, ttc_back, headway_back, rec.jerk,
                             weights, eff);
    } else {
      terms.safety = FSafety(rec.ttc);
      terms.efficiency = FEff(rec.time_headway, eff);
      terms.comfort = FComfort(rec.jerk);
      terms.total = RewardCfm(rec.ttc, rec.time_headway, rec.jerk, weights, eff);
    }
    if (rec.collision) terms.total += config_.reward.collision_penalty;
    rec.reward = terms;
    out.rewards.push_back(terms.total);
  }
  out.done = sim_.terminated();
  out.observations = Observations();
  return out;
}

EpisodeResult RunEpisode(MultiAgentEnv& env, const Policy* policy, const RolloutOptions& options) {
  const auto& agents = env.agents();
  if (!agents.empty()) {
    if (policy == nullptr || !policy->act) {
      throw ConfigError("scenario has RL vehicles but no policy was supplied");
    }
    if (policy->obs_dim != env.obs_dim()) {
      throw ConfigError("policy expects " + std::to_string(policy->obs_dim) +
                        "-dim observations, environment produces " +
                        std::to_string(env.obs_dim()));
    }
  }
  if (options.explore && options.rng == nullptr) {
    throw ConfigError("exploration requires an rng");
  }
  const double bound = env.config().controllers.accel_bound;
  std::normal_distribution<double> noise(0.0, options.noise_sigma * bound);

  EpisodeResult result;
  const auto measured = MeasuredVehicles(env.config().scenario);
  EpisodeMetricsAccumulator metrics(measured);
  auto observations = env.Observations();
  std::vector<double> actions(agents.size());
  std::vector<Transition> step_transitions;
  while (!env.done()) {
    for (std::size_t k = 0; k < agents.size(); ++k) {
      double a = policy->act(observations[k]);
      if (options.explore) a += noise(*options.rng);
      actions[k] = ClipAccel(a, -bound, bound);
    }
    EnvStep step = env.Step(actions);
    step_transitions.clear();
    for (std::size_t k = 0; k < agents.size(); ++k) {
      step_transitions.push_back(Transition{std::move(observations[k]), actions[k],
                                            step.rewards[k], step.observations[k], step.done,
                                            agents[k]});
      result.total_reward += step.rewards[k];
    }
    if (options.on_step) options.on_step(step_transitions);
    if (options.keep_transitions) {
      result.transitions.insert(result.transitions.end(), step_transitions.begin(),
                                step_transitions.end());
    }
    observations = std::move(step.observations);
    metrics.Add(step.record);
    if (options.keep_trajectory) result.trajectory.push_back(std::move(step.record));
    ++result.steps;
  }
  result.collided = env.sim().collided();
  result.road_end_reached = env.sim().road_end_reached();
  const auto agent_steps = static_cast<double>(agents.size()) * result.steps;
  result.mean_reward = agent_steps > 0 ? result.total_reward / agent_steps : 0.0;
  result.metrics = metrics.Result();
  return result;
}

}  // namespace carfollow
