#pragma once

#include <cmath>
#include <optional>

#include "carfollow/sim.h"

namespace carfollow {

struct RewardWeights {
  double safety = 1.0;
  double efficiency = 1.0;
  double comfort = 1.0;
};

// Log-normal headway preference; mode at exp(u - sigma^2) ~= 1.26 s.
struct EffParams {
  double u = 0.4226;
  double sigma = 0.4365;
};

inline constexpr double kTtcThreshold = 4.0;  // s
inline constexpr double kSafetyFloor = -10.0;
inline constexpr double kJerkScale = 3600.0;  // (60 m/s^3)^2

// ln(ttc / 4) for ttc <= 4, floored at kSafetyFloor; 0 for ttc > 4 or
// undefined TTC. A defined ttc <= 0 only occurs on a collision step and maps
// to the floor.
double FSafety(std::optional<double> ttc);

// Log-normal pdf of the time headway; 0 for undefined or nonpositive h.
double FEff(std::optional<double> headway, const EffParams& params = {});

// -jerk^2 / 3600.
double FComfort(double jerk);

double RewardCfm(std::optional<double> ttc, std::optional<double> headway, double jerk,
                 const RewardWeights& weights = {}, const EffParams& params = {});

// Back-view terms use the follower's TTC and time headway toward this
// vehicle; pass std::nullopt for both when there is no follower.
RewardTerms BilateralTerms(std::optional<double> ttc_front, std::optional<double> headway_front,
                           std::optional<double> ttc_back, std::optional<double> headway_back,
                           double jerk, const RewardWeights& weights = {},
                           const EffParams& params = {});

double RewardBilateral(std::optional<double> ttc_front, std::optional<double> headway_front,
                       std::optional<double> ttc_back, std::optional<double> headway_back,
                       double jerk, const RewardWeights& weights = {},
                       const EffParams& params = {});

// u that puts the log-normal mode exactly at h_target: ln(h_target) + sigma^2.
// Throws ConfigError if h_target <= 0.
double RetargetU(double h_target, double sigma);

// Location of the f_eff maximum: exp(u - sigma^2).
inline double EffMode(const EffParams& params) {
  return std::exp(params.u - params.sigma * params.sigma);
}

}  // namespace carfollow
