#include "carfollow/ddpg.h"

#include <cmath>
#include <random>
#include <string>

#include "carfollow/errors.h"

namespace carfollow {

void DdpgConfig::Validate() const {
  if (obs_dim <= 0) throw ConfigError("obs_dim must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(action_bound > 0.0)) throw ConfigError("action bound must be positive");
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("hidden sizes must be positive");
  }
}

namespace {

std::vector<int> LayerSizes(int in, const std::vector<int>& hidden) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

Eigen::MatrixXd ToColumns(std::span<const double> obs) {
  return Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
}

}  // namespace

DdpgAgent::DdpgAgent(DdpgConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  actor_ = Mlp(LayerSizes(config_.obs_dim, config_.hidden), Activation::kTanh, Activation::kTanh,
               config_.action_bound, rng);
  critic_ = Mlp(LayerSizes(config_.obs_dim + 1, config_.hidden), Activation::kTanh,
                Activation::kLinear, 1.0, rng);
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = Adam(actor_, config_.actor_lr);
  critic_opt_ = Adam(critic_, config_.critic_lr);
}

DdpgAgent::DdpgAgent(DdpgConfig config, Mlp actor, Mlp critic)
    : config_(std::move(config)), actor_(std::move(actor)), critic_(std::move(critic)) {
  config_.Validate();
  actor_.Validate();
  critic_.Validate();
  if (actor_.input_size() != config_.obs_dim || critic_.input_size() != config_.obs_dim + 1 ||
      actor_.output_size() != 1 || critic_.output_size() != 1) {
    throw ConfigError("actor/critic shapes do not match obs_dim " +
                      std::to_string(config_.obs_dim));
  }
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = Adam(actor_, config_.actor_lr);
  critic_opt_ = Adam(critic_, config_.critic_lr);
}

double DdpgAgent::Act(std::span<const double> obs) const {
  return actor_.Forward(ToColumns(obs))(0, 0);
}

Eigen::MatrixXd DdpgAgent::ActBatch(const Eigen::MatrixXd& obs) const {
  return actor_.Forward(obs);
}

double DdpgAgent::Q(std::span<const double> obs, double action) const {
  Eigen::MatrixXd a(1, 1);
  a(0, 0) = action;
  return critic_.Forward(CriticInput(ToColumns(obs), a))(0, 0);
}

Eigen::MatrixXd DdpgAgent::CriticInput(const Eigen::MatrixXd& obs,
                                       const Eigen::MatrixXd& actions) const {
  Eigen::MatrixXd input(obs.rows() + 1, obs.cols());
  input.topRows(obs.rows()) = obs;
  input.bottomRows(1) = actions / config_.action_bound;
  return input;
}

UpdateStats DdpgAgent::Update(std::span<const Transition* const> batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw TrainingError("empty update batch");
  const Eigen::Index d = config_.obs_dim;
  Eigen::MatrixXd obs(d, n), next_obs(d, n), actions(1, n);
  Eigen::RowVectorXd rewards(n), not_done(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& tr = *batch[j];
    if (static_cast<Eigen::Index>(tr.obs.size()) != d ||
        static_cast<Eigen::Index>(tr.next_obs.size()) != d) {
      throw TrainingError("transition observation size does not match obs_dim");
    }
    obs.col(j) = ToColumns(tr.obs);
    next_obs.col(j) = ToColumns(tr.next_obs);
    actions(0, j) = tr.action;
    rewards(j) = tr.reward;
    not_done(j) = tr.done ? 0.0 : 1.0;
  }

  // Critic.
  const Eigen::MatrixXd next_actions = target_actor_.Forward(next_obs);
  const Eigen::MatrixXd next_q = target_critic_.Forward(CriticInput(next_obs, next_actions));
  const Eigen::RowVectorXd targets =
      rewards + config_.gamma * not_done.cwiseProduct(next_q.row(0));
  Mlp::Tape critic_tape;
  const Eigen::MatrixXd q = critic_.Forward(CriticInput(obs, actions), critic_tape);
  const Eigen::RowVectorXd error = q.row(0) - targets;
  UpdateStats stats;
  stats.critic_loss = error.squaredNorm() / static_cast<double>(n);
  if (!std::isfinite(stats.critic_loss)) {
    throw TrainingError("non-finite critic loss (max |target| = " +
                        std::to_string(targets.cwiseAbs().maxCoeff()) + ")");
  }
  const Eigen::MatrixXd critic_grad_out = 2.0 * error / static_cast<double>(n);
  critic_opt_.Step(critic_, critic_.Backward(critic_tape, critic_grad_out));

  // Actor: ascend mean Q(s, mu(s)) by descending its negation.
  Mlp::Tape actor_tape;
  const Eigen::MatrixXd mu = actor_.Forward(obs, actor_tape);
  Mlp::Tape q_tape;
  const Eigen::MatrixXd q_mu = critic_.Forward(CriticInput(obs, mu), q_tape);
  stats.actor_objective = q_mu.mean();
  if (!std::isfinite(stats.actor_objective)) throw TrainingError("non-finite actor objective");
  Eigen::MatrixXd dq_dinput;
  critic_.Backward(q_tape, Eigen::MatrixXd::Constant(1, n, 1.0 / static_cast<double>(n)),
                   &dq_dinput);
  const Eigen::MatrixXd dq_dmu = dq_dinput.bottomRows(1) / config_.action_bound;
  actor_opt_.Step(actor_, actor_.Backward(actor_tape, -dq_dmu));

  target_critic_.SoftUpdateFrom(critic_, config_.tau);
  target_actor_.SoftUpdateFrom(actor_, config_.tau);
  return stats;
}

Policy DdpgAgent::AsPolicy() const {
  return Policy{config_.obs_dim, [this](std::span<const double> obs) { return Act(obs); }};
}

}  // namespace carfollow
