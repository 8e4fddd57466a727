#include "carfollow/config.h"

#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "carfollow/errors.h"
#include "test_support.h"

namespace carfollow {
namespace {

TEST(ConfigTest, PresetsBuildValidScenarios) {
  for (const auto& preset : Config::Presets()) {
    auto config = Config::Defaults(preset);
    config.Set("controllers.rl.checkpoint", "");
    EXPECT_NO_THROW(BuildExperiment(config)) << preset;
  }
  EXPECT_THROW(Config::Defaults("highway"), ConfigError);
}

TEST(ConfigTest, ClosedLoopInterleavesFiveAgents) {
  const auto exp = BuildExperiment(Config::Defaults("closed-loop"));
  const auto& vehicles = exp.env.scenario.vehicles;
  ASSERT_EQ(vehicles.size(), 10u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(vehicles[i].controller, i % 2 == 0 ? ControllerTag::kRl : ControllerTag::kIdm);
    EXPECT_EQ(vehicles[i].measured, i % 2 == 0);
  }
  EXPECT_TRUE(exp.env.scenario.is_ring());
  EXPECT_EQ(exp.env.scenario.track_length(), 300.0);
}

TEST(ConfigTest, PerturbationLayout) {
  const auto exp = BuildExperiment(Config::Defaults("perturbation"));
  const auto& sc = exp.env.scenario;
  ASSERT_EQ(sc.vehicles.size(), 12u);
  EXPECT_FALSE(sc.is_ring());
  ASSERT_TRUE(sc.perturbation.has_value());
  EXPECT_EQ(sc.vehicles.front().controller, ControllerTag::kIdm);
  EXPECT_EQ(sc.vehicles.back().controller, ControllerTag::kIdm);
  EXPECT_FALSE(sc.vehicles.front().measured);
  EXPECT_FALSE(sc.vehicles.back().measured);
  const auto gaps = InitialGaps(sc);
  const double idm_gap = IdmEquilibriumGap(20.0, exp.env.controllers.idm);
  for (int i = 1; i <= 10; ++i) {
    EXPECT_EQ(sc.vehicles[i].controller, ControllerTag::kBcm);
    EXPECT_TRUE(sc.vehicles[i].measured);
    EXPECT_NEAR(*gaps[i], idm_gap, 1e-9);
    EXPECT_EQ(sc.vehicles[i].speed, 20.0);
  }
  EXPECT_EQ(exp.transient_cut, 120.0);
  EXPECT_EQ(exp.analysis_period, 60.0);
}

TEST(ConfigTest, EquilibriumSpacingFollowsController) {
  auto config = Config::Defaults("perturbation");
  config.Set("scenario.controller", "gipps");
  auto exp = BuildExperiment(config);
  auto gaps = InitialGaps(exp.env.scenario);
  EXPECT_NEAR(*gaps[3], 20.0, 1e-9);  // v tau
  config.Set("scenario.controller", "unilateral");
  exp = BuildExperiment(config);
  gaps = InitialGaps(exp.env.scenario);
  EXPECT_NEAR(*gaps[3], 20.0 * 1.26, 1e-9);
}

TEST(ConfigTest, UnknownKeyIsRejected) {
  auto config = Config::Defaults("closed-loop");
  EXPECT_THROW(config.Set("reward.weight.safety", "1"), ConfigError);
  EXPECT_THROW(config.MergeYaml("scenario:\n  stepz: 5\n"), ConfigError);
}

TEST(ConfigTest, YamlIsFlattened) {
  auto config = Config::Defaults("closed-loop");
  config.MergeYaml(
      "scenario:\n  steps: 200\n  seed: 9\nreward:\n  weights:\n    comfort: 2.5\n"
      "train:\n  hidden: [32, 16]\n");
  EXPECT_EQ(config.GetInt("scenario.steps"), 200);
  EXPECT_EQ(config.GetUint("scenario.seed"), 9u);
  EXPECT_EQ(config.GetDouble("reward.weights.comfort"), 2.5);
  const auto exp = BuildExperiment(config);
  EXPECT_EQ(exp.train.hidden, (std::vector<int>{32, 16}));
  EXPECT_EQ(exp.env.reward.weights.comfort, 2.5);
}

TEST(ConfigTest, MalformedValuesAreConfigErrors) {
  auto config = Config::Defaults("closed-loop");
  EXPECT_THROW(config.MergeYaml("scenario: [1, 2"), ConfigError);
  config.Set("scenario.steps", "0");
  EXPECT_THROW(BuildExperiment(config), ConfigError);
  config.Set("scenario.steps", "ten");
  EXPECT_THROW(BuildExperiment(config), ConfigError);
  config = Config::Defaults("closed-loop");
  config.Set("scenario.controller", "pid");
  EXPECT_THROW(BuildExperiment(config), ConfigError);
  config = Config::Defaults("perturbation");
  config.Set("perturbation.amplitude", "25");
  EXPECT_THROW(BuildExperiment(config), ConfigError);
}

TEST(ConfigTest, TargetHeadwayRetargetsReward) {
  auto config = Config::Defaults("closed-loop");
  config.Set("reward.target_headway", "0.8");
  const auto exp = BuildExperiment(config);
  EXPECT_NEAR(exp.env.reward.eff.u, std::log(0.8) + 0.4365 * 0.4365, 1e-15);
  EXPECT_NEAR(EffMode(exp.env.reward.eff), 0.8, 1e-12);
  // Default keeps the published constant.
  EXPECT_EQ(BuildExperiment(Config::Defaults("closed-loop")).env.reward.eff.u, 0.4226);
}

TEST(ConfigTest, IdmHeadwayTracksScenarioUnlessSet) {
  auto config = Config::Defaults("closed-loop");
  config.Set("scenario.target_headway", "1.5");
  EXPECT_EQ(BuildExperiment(config).env.controllers.idm.time_headway, 1.5);
  EXPECT_EQ(BuildExperiment(config).env.controllers.bcm.reaction_time, 1.26);
  config.Set("controllers.idm.time_headway", "1.1");
  EXPECT_EQ(BuildExperiment(config).env.controllers.idm.time_headway, 1.1);
}

TEST(ConfigTest, PresetFromFile) {
  const auto path = testing::TempDir("config") / "run.yaml";
  std::ofstream(path) << "scenario:\n  preset: perturbation\n  seed: 4\n";
  EXPECT_EQ(PresetFromYamlFile(path), "perturbation");
  auto config = Config::Defaults("perturbation");
  config.MergeYamlFile(path);
  EXPECT_EQ(config.GetUint("scenario.seed"), 4u);
  EXPECT_THROW(config.MergeYamlFile(path.parent_path() / "missing.yaml"), ConfigError);
}

TEST(ConfigTest, ContiguousLayout) {
  auto config = Config::Defaults("closed-loop");
  config.Set("scenario.layout", "contiguous");
  const auto exp = BuildExperiment(config);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(exp.env.scenario.vehicles[i].controller,
              i < 5 ? ControllerTag::kRl : ControllerTag::kIdm);
  }
  config.Set("scenario.num_controlled", "11");
  EXPECT_THROW(BuildExperiment(config), ConfigError);
}

}  // namespace
}  // namespace carfollow
