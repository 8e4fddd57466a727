#include "carfollow/metrics.h"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "carfollow/errors.h"
#include "carfollow/reward.h"

namespace carfollow {
namespace {

TEST(TtcTest, Examples) {
  // Follower 25 m/s, leader 20 m/s: leader-minus-follower is -5.
  EXPECT_NEAR(*TimeToCollision(20.0, 20.0 - 25.0), 4.0, 1e-12);
  EXPECT_FALSE(TimeToCollision(20.0, 3.0).has_value());
  EXPECT_FALSE(TimeToCollision(20.0, 0.0).has_value());
}

TEST(HeadwayTest, Examples) {
  EXPECT_NEAR(*TimeHeadway(20.2, 5.0, 20.0), 1.26, 1e-12);
  EXPECT_FALSE(TimeHeadway(20.0, 5.0, 0.0).has_value());
}

TEST(JerkTest, Examples) {
  EXPECT_EQ(Jerk(1.2, 1.2, 0.1), 0.0);
  EXPECT_NEAR(Jerk(3.0, -3.0, 0.1), 60.0, 1e-9);
  EXPECT_NEAR(Jerk(1.0, 0.5, 0.1), 5.0, 1e-12);
}

std::vector<double> Sine(double base, double amp, double period, double dt, int n,
                         double phase = 0.0) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    out[k] = base + amp * std::sin(2.0 * std::numbers::pi * (k * dt + phase) / period);
  }
  return out;
}

TEST(AmplitudeTest, ReproducesForcing) {
  const auto amps = OscillationAmplitudes({Sine(20.0, 2.0, 60.0, 0.1, 3600)}, 0.1, 60.0, 120.0);
  EXPECT_NEAR(amps[0], 2.0, 0.01);
}

TEST(AmplitudeTest, ConstantSeriesHasZeroAmplitude) {
  const std::vector<std::vector<double>> speeds(4, std::vector<double>(3600, 20.0));
  for (double a : OscillationAmplitudes(speeds, 0.1, 60.0, 120.0)) EXPECT_EQ(a, 0.0);
}

TEST(AmplitudeTest, ShortSeriesIsAnError) {
  EXPECT_THROW(OscillationAmplitudes({std::vector<double>(1500, 1.0)}, 0.1, 60.0, 120.0),
               AnalysisError);
  EXPECT_THROW(OscillationAmplitudes({std::vector<double>(10, 1.0)}, 0.1, 0.0, 0.0),
               AnalysisError);
}

// Moving the window by one full period leaves the amplitude unchanged.
TEST(AmplitudePropertyTest, PhaseInvariance) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> phase(0.0, 60.0), amp(0.1, 3.0);
  for (int i = 0; i < 20; ++i) {
    const auto series = Sine(15.0, amp(rng), 60.0, 0.1, 4800, phase(rng));
    const auto a = OscillationAmplitudes({series}, 0.1, 60.0, 60.0);
    const auto b = OscillationAmplitudes({series}, 0.1, 60.0, 120.0);
    EXPECT_NEAR(a[0], b[0], 1e-6);
  }
}

TEST(LogTtcSafetyTest, Examples) {
  const std::vector<std::optional<double>> safe = {5.0, 9.0, 100.0};
  EXPECT_EQ(LogTtcSafety(safe), 0.0);
  const std::vector<std::optional<double>> close = {2.0, 2.0};
  EXPECT_NEAR(LogTtcSafety(close), std::log(0.5), 1e-12);
  const std::vector<std::optional<double>> mixed = {2.0, 8.0, 2.0, 8.0};
  EXPECT_NEAR(LogTtcSafety(mixed), -0.347, 1e-3);
  const std::vector<std::optional<double>> none = {std::nullopt, std::nullopt};
  EXPECT_EQ(LogTtcSafety(none), 0.0);
}

TEST(LogTtcSafetyTest, UndefinedStepsAreExcluded) {
  const std::vector<std::optional<double>> series = {2.0, std::nullopt, 2.0};
  EXPECT_NEAR(LogTtcSafety(series), FSafety(2.0), 1e-15);
}

StepRecord MakeStep(int step, std::vector<VehicleRecord> vehicles) {
  return StepRecord{step, step * 0.1, std::move(vehicles)};
}

VehicleRecord Rec(int id, double speed, std::optional<double> ttc, std::optional<double> headway,
                  double jerk, bool collision = false) {
  VehicleRecord r;
  r.id = id;
  r.speed = speed;
  r.ttc = ttc;
  r.time_headway = headway;
  r.jerk = jerk;
  r.collision = collision;
  return r;
}

TEST(EpisodeMetricsTest, AggregatesDefinedValuesOnly) {
  const std::vector<StepRecord> records = {
      MakeStep(1, {Rec(0, 10.0, 2.0, 1.0, -1.0), Rec(1, 20.0, std::nullopt, 2.0, 3.0)}),
      MakeStep(2, {Rec(0, 12.0, std::nullopt, std::nullopt, 2.0),
                   Rec(1, 18.0, 6.0, 1.5, 0.0, true)}),
  };
  const auto all = ComputeEpisodeMetrics(records);
  EXPECT_NEAR(*all.mean_time_headway, (1.0 + 2.0 + 1.5) / 3.0, 1e-15);
  EXPECT_NEAR(all.mean_abs_jerk, (1.0 + 3.0 + 2.0 + 0.0) / 4.0, 1e-15);
  EXPECT_NEAR(*all.mean_ttc, 4.0, 1e-15);
  EXPECT_NEAR(all.mean_log_ttc_safety, (std::log(0.5) + 0.0) / 2.0, 1e-15);
  EXPECT_EQ(all.collision_count, 1);
  EXPECT_NEAR(all.mean_speed, 15.0, 1e-15);
  EXPECT_EQ(all.samples, 4);

  const std::vector<int> only_zero = {0};
  const auto zero = ComputeEpisodeMetrics(records, only_zero);
  EXPECT_NEAR(*zero.mean_time_headway, 1.0, 1e-15);
  EXPECT_EQ(zero.collision_count, 0);
  EXPECT_EQ(zero.samples, 2);
}

TEST(EpisodeMetricsTest, EmptyStreamHasNoDefinedMeans) {
  const auto m = ComputeEpisodeMetrics({});
  EXPECT_FALSE(m.mean_time_headway.has_value());
  EXPECT_FALSE(m.mean_ttc.has_value());
  EXPECT_EQ(m.samples, 0);
}

}  // namespace
}  // namespace carfollow
