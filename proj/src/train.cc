#include "carfollow/train.h"

#include <algorithm>
#include <random>

#include "carfollow/errors.h"
#include "carfollow/replay_buffer.h"

namespace carfollow {

void TrainConfig::Validate() const {
  if (episodes < 0) throw ConfigError("train.episodes must be >= 0");
  if (steps < 1) throw ConfigError("train.steps must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("train.gamma must lie in (0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("train.tau must lie in (0, 1]");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (noise_sigma < 0.0) throw ConfigError("train.noise must be >= 0");
  if (!(noise_decay > 0.0 && noise_decay <= 1.0)) {
    throw ConfigError("train.noise_decay must lie in (0, 1]");
  }
  if (buffer_capacity == 0) throw ConfigError("train.buffer_capacity must be positive");
  if (updates_per_step < 0) throw ConfigError("train.updates_per_step must be >= 0");
}

TrainResult Train(const EnvConfig& env_config, const TrainConfig& cfg,
                  const std::function<void(const CurveRow&)>& on_episode) {
  cfg.Validate();
  EnvConfig config = env_config;
  config.scenario.steps_per_episode = cfg.steps;
  MultiAgentEnv env(config);
  if (env.agents().empty()) throw ConfigError("training scenario has no RL vehicles");

  DdpgConfig ddpg;
  ddpg.obs_dim = env.obs_dim();
  ddpg.hidden = cfg.hidden;
  ddpg.gamma = cfg.gamma;
  ddpg.tau = cfg.tau;
  ddpg.actor_lr = cfg.actor_lr;
  ddpg.critic_lr = cfg.critic_lr;
  ddpg.action_bound = config.controllers.accel_bound;
  TrainResult result{DdpgAgent(ddpg, cfg.seed), {}};

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  ReplayBuffer buffer(cfg.buffer_capacity);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const Policy policy = result.agent.AsPolicy();

  RolloutOptions options;
  options.explore = true;
  options.noise_sigma = cfg.noise_sigma;
  options.rng = &rng;
  options.keep_trajectory = false;
  options.keep_transitions = false;
  options.on_step = [&](std::span<const Transition> transitions) {
    for (const auto& tr : transitions) buffer.Add(tr);
    if (buffer.size() < batch) return;
    for (int u = 0; u < cfg.updates_per_step; ++u) {
      const auto sample = buffer.Sample(batch, rng);
      result.agent.Update(sample);
    }
  };

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    env.Reset(config.scenario.rng_seed + static_cast<std::uint64_t>(episode));
    const EpisodeResult ep = RunEpisode(env, &policy, options);
    CurveRow row;
    row.episode = episode;
    row.mean_reward = ep.mean_reward;
    row.mean_headway = ep.metrics.mean_time_headway;
    row.collisions = ep.collided ? 1 : 0;
    row.steps = ep.steps;
    result.curve.push_back(row);
    if (on_episode) on_episode(row);
    options.noise_sigma *= cfg.noise_decay;
  }
  return result;
}

}  // namespace carfollow
