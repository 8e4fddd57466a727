#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "carfollow/env.h"
#include "carfollow/mlp.h"

namespace carfollow {

struct DdpgConfig {
  int obs_dim = 7;
  std::vector<int> hidden = {64, 64};
  double gamma = 0.99;
  double tau = 0.005;  // soft target update rate
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double action_bound = 3.0;
  void Validate() const;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_objective = 0.0;  // mean Q(s, mu(s)) before the actor step
};

// Deterministic actor-critic with target networks. The actor is
// obs -> hidden (tanh) -> tanh * action_bound; the critic takes the
// observation stacked with the action divided by action_bound.
class DdpgAgent {
 public:
  DdpgAgent(DdpgConfig config, std::uint64_t seed);
  // Restores networks from a checkpoint. Targets start as copies.
  DdpgAgent(DdpgConfig config, Mlp actor, Mlp critic);

  double Act(std::span<const double> obs) const;
  Eigen::MatrixXd ActBatch(const Eigen::MatrixXd& obs) const;
  double Q(std::span<const double> obs, double action) const;

  // One critic step toward r + gamma (1 - done) Q'(s', mu'(s')), one actor
  // step ascending Q(s, mu(s)), then soft target updates.
  // Throws TrainingError on a non-finite loss.
  UpdateStats Update(std::span<const Transition* const> batch);

  Policy AsPolicy() const;

  const DdpgConfig& config() const { return config_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& target_actor() const { return target_actor_; }
  const Mlp& target_critic() const { return target_critic_; }

 private:
  Eigen::MatrixXd CriticInput(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions) const;

  DdpgConfig config_;
  Mlp actor_, critic_, target_actor_, target_critic_;
  Adam actor_opt_, critic_opt_;
};

}  // namespace carfollow
