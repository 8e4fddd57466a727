#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "carfollow/controllers.h"
#include "carfollow/metrics.h"
#include "carfollow/reward.h"
#include "carfollow/scenario.h"
#include "carfollow/sim.h"

namespace carfollow {

// kBilateral: (v, S_front, dV_front, S_back, dV_back, v_l, a_prev).
// kCfm: the front-only projection (v, S_front, dV_front, v_l, a_prev).
enum class ObservationVariant { kBilateral, kCfm };

int ObservationDim(ObservationVariant variant);

// Normalisation scales. Gaps are also capped at the sensing range, and every
// normalised entry is clamped to [-1, 1].
inline constexpr double kSpeedScale = 30.0;  // m/s
inline constexpr double kSensingRange = 100.0;  // m
inline constexpr double kAccelScale = 3.0;   // m/s^2

// Unnormalised state vector. Relative speeds use front-minus-back order
// (dV_front = v_leader - v_self, dV_back = v_self - v_follower). A missing
// neighbour reads as a gap at the sensing range with zero relative speed.
std::vector<double> ObserveRaw(const Simulation& sim, int agent_id, ObservationVariant variant,
                               double target_speed);

std::vector<double> NormalizeObservation(std::span<const double> raw,
                                         ObservationVariant variant);

std::vector<double> Observe(const Simulation& sim, int agent_id, ObservationVariant variant,
                            double target_speed);

struct RewardParams {
  RewardWeights weights;
  EffParams eff;
  // Added to the reward of an agent whose own front gap closes to <= 0.
  double collision_penalty = -50.0;
};

struct EnvConfig {
  ScenarioConfig scenario;
  ControllerParams controllers;
  RewardParams reward;
  ObservationVariant variant = ObservationVariant::kBilateral;
};

struct Transition {
  std::vector<double> obs;
  double action = 0.0;  // applied acceleration, m/s^2
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
  int agent_id = 0;
};

struct EnvStep {
  std::vector<std::vector<double>> observations;  // per agent, post-step
  std::vector<double> rewards;                    // per agent
  bool done = false;
  StepRecord record;
};

// Decentralised multi-agent environment: every RL-tagged vehicle is an agent
// acting on its own local observation; everything else follows its
// closed-form controller. The perturbation profile, when present, drives the
// head vehicle.
class MultiAgentEnv {
 public:
  explicit MultiAgentEnv(EnvConfig config);

  // Rebuilds the simulation; `seed` replaces the scenario seed when given.
  void Reset(std::optional<std::uint64_t> seed = std::nullopt);

  const std::vector<int>& agents() const { return agents_; }
  std::vector<std::vector<double>> Observations() const;

  // One action per agent, in agents() order. Actions are clipped to the
  // action bound before being applied.
  EnvStep Step(std::span<const double> actions);

  bool done() const { return sim_.terminated(); }
  const Simulation& sim() const { return sim_; }
  const EnvConfig& config() const { return config_; }
  int obs_dim() const { return ObservationDim(config_.variant); }

 private:
  EnvConfig config_;
  Simulation sim_;
  std::vector<int> agents_;
};

// Shared policy: maps one agent's normalised observation to an acceleration.
struct Policy {
  int obs_dim = 0;
  std::function<double(std::span<const double>)> act;
};

struct RolloutOptions {
  // Adds N(0, (noise_sigma * action bound)^2) to each policy action.
  bool explore = false;
  double noise_sigma = 0.3;
  std::mt19937_64* rng = nullptr;
  bool keep_trajectory = true;
  bool keep_transitions = true;
  // Called after every environment step with that step's transitions.
  std::function<void(std::span<const Transition>)> on_step;
};

struct EpisodeResult {
  std::vector<StepRecord> trajectory;
  std::vector<Transition> transitions;
  EpisodeMetrics metrics;  // over measured vehicles
  double mean_reward = 0.0;  // per agent-step
  double total_reward = 0.0;
  int steps = 0;
  bool collided = false;
  bool road_end_reached = false;
};

// Rolls the environment (after a Reset) to termination, querying the shared
// policy independently for every agent. Throws ConfigError when the policy's
// input size does not match the environment, or when agents exist but no
// policy is given.
EpisodeResult RunEpisode(MultiAgentEnv& env, const Policy* policy,
                         const RolloutOptions& options = {});

// Ids of vehicles flagged `measured` in the scenario.
std::vector<int> MeasuredVehicles(const ScenarioConfig& scenario);

}  // namespace carfollow
