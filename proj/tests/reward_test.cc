#include "carfollow/reward.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "carfollow/errors.h"

namespace carfollow {
namespace {

// Independent oracle: log-normal density written from its textbook form.
double LogNormalPdf(double h, double u, double sigma) {
  const double d = std::log(h) - u;
  return 1.0 / (h * sigma * std::sqrt(2.0 * std::numbers::pi)) *
         std::exp(-(d * d) / (2.0 * sigma * sigma));
}

TEST(SafetyTest, Branches) {
  EXPECT_EQ(FSafety(4.0), 0.0);
  EXPECT_EQ(FSafety(10.0), 0.0);
  EXPECT_EQ(FSafety(std::nullopt), 0.0);
  EXPECT_NEAR(FSafety(2.0), std::log(0.5), 1e-12);
  EXPECT_NEAR(FSafety(2.0), -0.6931, 1e-4);
}

TEST(SafetyTest, FloorNearZeroTtc) {
  const double knee = 4.0 * std::exp(-10.0);
  EXPECT_NEAR(FSafety(knee * 1.0001), -10.0, 1e-3);
  EXPECT_EQ(FSafety(knee * 0.5), kSafetyFloor);
  EXPECT_EQ(FSafety(1e-300), kSafetyFloor);
  EXPECT_EQ(FSafety(0.0), kSafetyFloor);
  EXPECT_EQ(FSafety(-1.0), kSafetyFloor);
}

TEST(SafetyPropertyTest, NonPositiveAndZeroAboveThreshold) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ttc(0.0, 20.0);
  for (int i = 0; i < 10000; ++i) {
    const double t = ttc(rng);
    const double f = FSafety(t);
    EXPECT_LE(f, 0.0);
    EXPECT_GE(f, kSafetyFloor);
    if (t > 4.0) EXPECT_EQ(f, 0.0);
    if (t < 4.0 && t > 4.0 * std::exp(-10.0)) EXPECT_LT(f, 0.0);
  }
}

TEST(EfficiencyTest, Examples) {
  EXPECT_NEAR(FEff(1.26), 0.659, 5e-3);
  EXPECT_NEAR(FEff(std::exp(0.4226)), 1.0 / (std::sqrt(2.0 * std::numbers::pi) *
                                             std::exp(0.4226) * 0.4365),
              1e-12);
  EXPECT_NEAR(FEff(std::exp(0.4226)), 0.598, 1e-3);
  EXPECT_LT(FEff(1e-6), 1e-12);
  EXPECT_EQ(FEff(std::nullopt), 0.0);
  EXPECT_EQ(FEff(0.0), 0.0);
}

TEST(EfficiencyTest, MatchesOracle) {
  const EffParams p;
  for (double h = 0.05; h < 8.0; h += 0.0137) {
    EXPECT_NEAR(FEff(h, p), LogNormalPdf(h, p.u, p.sigma), 1e-13);
  }
}

TEST(EfficiencyPropertyTest, PositiveWithUniqueArgmaxAtMode) {
  for (const EffParams p : {EffParams{}, EffParams{RetargetU(0.8, 0.4365), 0.4365},
                            EffParams{0.1, 0.3}}) {
    double best_h = 0.0, best = -1.0;
    for (int k = 1; k < 10000; ++k) {
      const double h = 0.01 + 0.001 * k;
      if (h >= 10.0) break;
      const double f = FEff(h, p);
      EXPECT_GT(f, 0.0);
      if (f > best) best = f, best_h = h;
    }
    EXPECT_NEAR(best_h, EffMode(p), 0.01);
  }
}

TEST(ComfortTest, Examples) {
  EXPECT_EQ(FComfort(0.0), 0.0);
  EXPECT_EQ(FComfort(60.0), -1.0);
  EXPECT_EQ(FComfort(-60.0), -1.0);
  EXPECT_DOUBLE_EQ(FComfort(30.0), -0.25);
}

TEST(RewardTest, CfmExamples) {
  EXPECT_NEAR(RewardCfm(4.0, 1.26, 0.0), 0.659, 5e-3);
  EXPECT_NEAR(RewardCfm(4.0, 1.26, 0.0), FEff(1.26), 1e-15);
  EXPECT_EQ(RewardCfm(8.0, std::nullopt, 0.0), 0.0);
}

TEST(RewardTest, BilateralExamples) {
  EXPECT_NEAR(RewardBilateral(std::nullopt, 1.26, std::nullopt, 1.26, 0.0), 2.0 * FEff(1.26),
              1e-15);
  EXPECT_NEAR(RewardBilateral(std::nullopt, 1.26, std::nullopt, 1.26, 0.0), 1.318, 0.01);
  const double safe = RewardBilateral(std::nullopt, 1.26, std::nullopt, 1.26, 0.0);
  const double threatened = RewardBilateral(std::nullopt, 1.26, 2.0, 1.26, 0.0);
  EXPECT_NEAR(safe - threatened, -std::log(0.5), 1e-12);
}

TEST(RewardTest, WeightedDecomposition) {
  const RewardWeights w{0.7, 1.3, 2.1};
  const auto t = BilateralTerms(2.5, 1.1, 3.0, 1.6, 12.0, w);
  EXPECT_NEAR(t.total,
              0.7 * (t.safety + t.safety_follower) + 1.3 * (t.efficiency + t.efficiency_follower) +
                  2.1 * t.comfort,
              1e-12);
  EXPECT_DOUBLE_EQ(t.comfort, -144.0 / 3600.0);
}

TEST(RewardPropertyTest, AbsentFollowerEqualsCfmBitForBit) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ttc(-1.0, 12.0), h(0.0, 6.0), jerk(-60.0, 60.0),
      weight(0.0, 3.0), coin(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const std::optional<double> t = coin(rng) < 0.2 ? std::nullopt : std::optional(ttc(rng));
    const std::optional<double> hw = coin(rng) < 0.2 ? std::nullopt : std::optional(h(rng));
    const double j = jerk(rng);
    const RewardWeights w{weight(rng), weight(rng), weight(rng)};
    const double cfm = RewardCfm(t, hw, j, w);
    const double bilateral = RewardBilateral(t, hw, std::nullopt, std::nullopt, j, w);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(cfm), std::bit_cast<std::uint64_t>(bilateral));
  }
}

TEST(RetargetTest, Values) {
  EXPECT_NEAR(RetargetU(1.26, 0.4365), 0.4226, 0.002);
  EXPECT_NEAR(RetargetU(0.8, 0.4365), std::log(0.8) + 0.4365 * 0.4365, 1e-15);
  EXPECT_NEAR(RetargetU(0.8, 0.4365), -0.0326, 1e-4);
  EXPECT_THROW(RetargetU(0.0, 0.4365), ConfigError);
  EXPECT_THROW(RetargetU(-1.0, 0.4365), ConfigError);
}

}  // namespace
}  // namespace carfollow
