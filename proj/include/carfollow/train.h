#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "carfollow/ddpg.h"
#include "carfollow/env.h"

namespace carfollow {

struct TrainConfig {
  int episodes = 120;
  int steps = 3600;  // per episode
  double gamma = 0.99;
  double tau = 0.005;
  int batch_size = 64;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double noise_sigma = 0.3;  // in units of the action bound
  double noise_decay = 0.995;  // per episode
  std::size_t buffer_capacity = 100000;
  std::vector<int> hidden = {64, 64};
  int updates_per_step = 1;
  std::uint64_t seed = 0;
  void Validate() const;
};

struct CurveRow {
  int episode = 0;
  double mean_reward = 0.0;  // per agent-step
  std::optional<double> mean_headway;
  int collisions = 0;
  int steps = 0;
};

struct TrainResult {
  DdpgAgent agent;
  std::vector<CurveRow> curve;
};

// Decentralised shared-policy DDPG: every agent's transitions go into one
// replay buffer, and one actor/critic pair is trained on it. Episode e is
// reset with scenario seed + e. Deterministic for a fixed cfg.seed.
TrainResult Train(const EnvConfig& env_config, const TrainConfig& cfg,
                  const std::function<void(const CurveRow&)>& on_episode = {});

}  // namespace carfollow
