#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "carfollow/checkpoint.h"
#include "carfollow/ddpg.h"
#include "carfollow/errors.h"
#include "carfollow/mlp.h"
#include "carfollow/replay_buffer.h"
#include "carfollow/train.h"
#include "gradcheck.h"
#include "json.hpp"
#include "test_support.h"

namespace carfollow {
namespace {

TEST(MlpTest, ZeroParametersGiveZeroOutput) {
  std::mt19937_64 rng(1);
  const int sizes[] = {4, 8, 1};
  Mlp net(sizes, Activation::kTanh, Activation::kLinear, 1.0, rng);
  net.SetFlatParameters(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.num_parameters())));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
  EXPECT_EQ(net.Forward(x).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MlpTest, IdentityLayerReproducesInput) {
  DenseLayer layer{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), Activation::kLinear};
  Mlp net({layer}, 1.0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
  EXPECT_EQ((net.Forward(x) - x).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MlpTest, RejectsShapeMismatch) {
  std::mt19937_64 rng(1);
  const int sizes[] = {4, 8, 1};
  Mlp net(sizes, Activation::kTanh, Activation::kLinear, 1.0, rng);
  EXPECT_THROW(net.Forward(Eigen::MatrixXd::Zero(3, 2)), ConfigError);
  DenseLayer a{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4), Activation::kTanh};
  DenseLayer b{Eigen::MatrixXd::Zero(1, 5), Eigen::VectorXd::Zero(1), Activation::kLinear};
  EXPECT_THROW(Mlp({a, b}, 1.0), ConfigError);
  DenseLayer bad{Eigen::MatrixXd::Constant(1, 3, NAN), Eigen::VectorXd::Zero(1),
                 Activation::kLinear};
  EXPECT_THROW(Mlp({bad}, 1.0), ConfigError);
}

TEST(MlpTest, FlatParametersRoundTrip) {
  std::mt19937_64 rng(2);
  const int sizes[] = {3, 5, 2};
  Mlp net(sizes, Activation::kTanh, Activation::kTanh, 2.0, rng);
  const Eigen::VectorXd flat = net.FlatParameters();
  EXPECT_EQ(static_cast<std::size_t>(flat.size()), net.num_parameters());
  EXPECT_EQ(net.num_parameters(), 3u * 5 + 5 + 5 * 2 + 2);
  Mlp copy = net;
  copy.SetFlatParameters(Eigen::VectorXd::Zero(flat.size()));
  copy.SetFlatParameters(flat);
  EXPECT_EQ(copy.FlatParameters(), flat);
}

TEST(MlpGradientTest, ActorAndCriticMatchCentralDifferences) {
  std::mt19937_64 rng(3);
  for (int draw = 0; draw < 5; ++draw) {
    const Mlp actor = testing::RandomNet(rng, 7, Activation::kTanh, 3.0);
    const Mlp critic = testing::RandomNet(rng, 8, Activation::kLinear, 1.0);
    const Eigen::MatrixXd xa = Eigen::MatrixXd::Random(7, 3);
    const Eigen::MatrixXd xc = Eigen::MatrixXd::Random(8, 3);
    const Eigen::MatrixXd w = Eigen::MatrixXd::Random(1, 3);
    EXPECT_LT(testing::CheckGradients(actor, xa, w).max_relative_error, 1e-4);
    EXPECT_LT(testing::CheckGradients(critic, xc, w).max_relative_error, 1e-4);
  }
}

TEST(MlpPropertyTest, ActorOutputStaysInBound) {
  DdpgAgent agent(DdpgConfig{}, 4);
  std::mt19937_64 rng(4);
  Mlp actor = agent.actor();
  // Inflate weights to push tanh into saturation.
  actor.SetFlatParameters(actor.FlatParameters() * 200.0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(7, 500) * 5.0;
  const Eigen::MatrixXd out = actor.Forward(x);
  EXPECT_LE(out.cwiseAbs().maxCoeff(), 3.0);
  const Eigen::MatrixXd fresh = agent.ActBatch(x);
  EXPECT_LE(fresh.cwiseAbs().maxCoeff(), 3.0);
}

TEST(MlpTest, SoftUpdateInterpolates) {
  std::mt19937_64 rng(5);
  const int sizes[] = {2, 3, 1};
  Mlp a(sizes, Activation::kTanh, Activation::kLinear, 1.0, rng);
  Mlp b(sizes, Activation::kTanh, Activation::kLinear, 1.0, rng);
  Mlp mixed = a;
  mixed.SoftUpdateFrom(b, 0.25);
  const Eigen::VectorXd expected = 0.25 * b.FlatParameters() + 0.75 * a.FlatParameters();
  EXPECT_LT((mixed.FlatParameters() - expected).cwiseAbs().maxCoeff(), 1e-15);
}

Transition MakeTransition(int tag) {
  Transition t;
  t.obs = {static_cast<double>(tag)};
  t.next_obs = {static_cast<double>(tag)};
  t.agent_id = tag;
  return t;
}

TEST(ReplayBufferTest, FifoEvictionAtCapacity) {
  ReplayBuffer buffer(5);
  for (int i = 0; i < 12; ++i) {
    buffer.Add(MakeTransition(i));
    EXPECT_LE(buffer.size(), 5u);
  }
  std::vector<int> held;
  for (std::size_t i = 0; i < buffer.size(); ++i) held.push_back(buffer[i].agent_id);
  std::sort(held.begin(), held.end());
  EXPECT_EQ(held, (std::vector<int>{7, 8, 9, 10, 11}));
  EXPECT_THROW(ReplayBuffer(0), ConfigError);
}

// Pearson chi-square over a full, wrapped buffer. With 49 degrees of freedom
// the 0.001 upper quantile is 85.35.
TEST(ReplayBufferPropertyTest, UniformSampling) {
  const std::size_t capacity = 50;
  ReplayBuffer buffer(capacity);
  for (int i = 0; i < 137; ++i) buffer.Add(MakeTransition(i));
  std::mt19937_64 rng(6);
  std::vector<long> counts(capacity, 0);
  const long draws = 200000;
  for (long d = 0; d < draws / 100; ++d) {
    for (std::size_t idx : buffer.SampleIndices(100, rng)) ++counts[idx];
  }
  const double expected = static_cast<double>(draws) / capacity;
  double chi2 = 0.0;
  for (long c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 85.35);
}

TEST(DdpgTest, FullSoftUpdateCopiesOnlineNetworks) {
  DdpgConfig cfg;
  cfg.obs_dim = 3;
  cfg.hidden = {8, 8};
  cfg.tau = 1.0;
  DdpgAgent agent(cfg, 7);
  std::vector<Transition> data;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 16; ++i) {
    data.push_back(Transition{{n01(rng), n01(rng), n01(rng)}, n01(rng), n01(rng),
                              {n01(rng), n01(rng), n01(rng)}, false, 0});
  }
  std::vector<const Transition*> batch;
  for (const auto& t : data) batch.push_back(&t);
  agent.Update(batch);
  EXPECT_EQ(agent.target_actor().FlatParameters(), agent.actor().FlatParameters());
  EXPECT_EQ(agent.target_critic().FlatParameters(), agent.critic().FlatParameters());
}

TEST(DdpgTest, CriticLearnsConstantRewardWithoutBootstrap) {
  DdpgConfig cfg;
  cfg.obs_dim = 2;
  cfg.hidden = {16, 16};
  cfg.gamma = 0.0;
  cfg.critic_lr = 1e-2;
  DdpgAgent agent(cfg, 8);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> obs(-1.0, 1.0), act(-3.0, 3.0);
  std::vector<Transition> data;
  for (int i = 0; i < 64; ++i) {
    data.push_back(Transition{{obs(rng), obs(rng)}, act(rng), 0.75, {obs(rng), obs(rng)}, false, 0});
  }
  std::vector<const Transition*> batch;
  for (const auto& t : data) batch.push_back(&t);
  for (int it = 0; it < 1500; ++it) agent.Update(batch);
  for (const auto& t : data) EXPECT_NEAR(agent.Q(t.obs, t.action), 0.75, 0.02);
}

TEST(DdpgTest, RejectsBadConfigAndNonFiniteLoss) {
  DdpgConfig cfg;
  cfg.gamma = 1.0;
  EXPECT_THROW(DdpgAgent(cfg, 0), ConfigError);
  cfg = DdpgConfig{};
  cfg.tau = 0.0;
  EXPECT_THROW(DdpgAgent(cfg, 0), ConfigError);
  cfg = DdpgConfig{};
  cfg.obs_dim = 1;
  DdpgAgent agent(cfg, 0);
  Transition bad{{0.0}, 0.0, INFINITY, {0.0}, false, 0};
  const Transition* batch[] = {&bad};
  EXPECT_THROW(agent.Update(batch), TrainingError);
}

// One-step bandit with reward -(a - 0.5)^2: the actor should settle on 0.5.
TEST(DdpgTest, BanditActorFindsOptimum) {
  DdpgConfig cfg;
  cfg.obs_dim = 2;
  cfg.hidden = {32, 32};
  cfg.actor_lr = 1e-3;
  cfg.critic_lr = 1e-3;
  cfg.tau = 0.05;
  DdpgAgent agent(cfg, 9);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> obs(-1.0, 1.0), explore(-3.0, 3.0);
  std::vector<Transition> batch_data(64);
  std::vector<const Transition*> batch;
  for (const auto& t : batch_data) batch.push_back(&t);
  for (int it = 0; it < 8000; ++it) {
    for (auto& t : batch_data) {
      t.obs = {obs(rng), obs(rng)};
      t.action = explore(rng);
      t.reward = -(t.action - 0.5) * (t.action - 0.5);
      t.next_obs = t.obs;
      t.done = true;
    }
    agent.Update(batch);
  }
  for (int k = 0; k < 20; ++k) {
    const std::vector<double> o = {obs(rng), obs(rng)};
    EXPECT_NEAR(agent.Act(o), 0.5, 0.05);
  }
}

TEST(DdpgPropertyTest, SharedPolicyActsIdenticallyOnIdenticalObservations) {
  DdpgAgent agent(DdpgConfig{}, 10);
  MultiAgentEnv env(EnvConfig{testing::EvenRing(5, 150.0, 12.0, ControllerTag::kRl), {}, {}, {}});
  const auto observations = env.Observations();
  const Policy policy = agent.AsPolicy();
  for (const auto& o : observations) {
    ASSERT_EQ(o, observations.front());
    EXPECT_EQ(policy.act(o), policy.act(observations.front()));
  }
}

TEST(CheckpointTest, RoundTripGivesIdenticalActions) {
  DdpgConfig cfg;
  cfg.hidden = {16, 12};
  DdpgAgent agent(cfg, 11);
  const auto path = testing::TempDir("checkpoint") / "policy.ckpt";
  SaveCheckpoint(path, agent, CheckpointMeta{11, 3, ObservationVariant::kBilateral});
  const auto loaded = LoadCheckpoint(path);
  EXPECT_EQ(loaded.meta.seed, 11u);
  EXPECT_EQ(loaded.meta.episodes, 3);
  EXPECT_EQ(loaded.agent.actor().sizes(), (std::vector<int>{7, 16, 12, 1}));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(7, 64);
  EXPECT_EQ(loaded.agent.ActBatch(x), agent.ActBatch(x));
  EXPECT_EQ(loaded.agent.critic().FlatParameters(), agent.critic().FlatParameters());
}

TEST(CheckpointTest, RejectsCorruptInput) {
  EXPECT_THROW(CheckpointFromString("not json"), ConfigError);
  EXPECT_THROW(CheckpointFromString(R"({"format":"other"})"), ConfigError);
  DdpgAgent agent(DdpgConfig{}, 12);
  auto text = CheckpointToString(agent, CheckpointMeta{});
  auto j = nlohmann::json::parse(text);
  j["version"] = 99;
  EXPECT_THROW(CheckpointFromString(j.dump()), ConfigError);
  j = nlohmann::json::parse(text);
  j["actor"]["layers"][0]["rows"] = 3;
  EXPECT_THROW(CheckpointFromString(j.dump()), ConfigError);
  EXPECT_THROW(LoadCheckpoint("/nonexistent/policy.ckpt"), ConfigError);
}

EnvConfig SmokeEnv() {
  EnvConfig config;
  config.scenario = testing::EvenRing(4, 120.0, 0.0, ControllerTag::kIdm);
  config.scenario.vehicles[0].controller = ControllerTag::kRl;
  return config;
}

TEST(TrainTest, ZeroEpisodesReturnsInitialPolicy) {
  TrainConfig cfg;
  cfg.episodes = 0;
  cfg.seed = 13;
  const auto result = Train(SmokeEnv(), cfg);
  EXPECT_TRUE(result.curve.empty());
  DdpgConfig ddpg;
  const DdpgAgent fresh(ddpg, 13);
  EXPECT_EQ(result.agent.actor().FlatParameters(), fresh.actor().FlatParameters());
}

TEST(TrainTest, SameSeedSameCurve) {
  TrainConfig cfg;
  cfg.episodes = 3;
  cfg.steps = 80;
  cfg.batch_size = 16;
  cfg.seed = 14;
  const auto a = Train(SmokeEnv(), cfg);
  const auto b = Train(SmokeEnv(), cfg);
  ASSERT_EQ(a.curve.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.curve[i].mean_reward, b.curve[i].mean_reward);
    EXPECT_EQ(a.curve[i].steps, 80);
  }
  EXPECT_EQ(a.agent.actor().FlatParameters(), b.agent.actor().FlatParameters());
}

TEST(TrainTest, ConfigValidation) {
  TrainConfig cfg;
  cfg.gamma = 0.0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.tau = 1.5;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = TrainConfig{};
  EnvConfig no_agents = SmokeEnv();
  no_agents.scenario.vehicles[0].controller = ControllerTag::kIdm;
  EXPECT_THROW(Train(no_agents, cfg), ConfigError);
}

}  // namespace
}  // namespace carfollow
