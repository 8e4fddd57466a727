#include "carfollow/reward.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "carfollow/errors.h"

namespace carfollow {

double FSafety(std::optional<double> ttc) {
  if (!ttc || *ttc > kTtcThreshold) return 0.0;
  if (*ttc <= 0.0) return kSafetyFloor;
  return std::max(kSafetyFloor, std::log(*ttc / kTtcThreshold));
}

double FEff(std::optional<double> headway, const EffParams& params) {
  if (!headway || !(*headway > 0.0)) return 0.0;
  const double h = *headway;
  const double z = (std::log(h) - params.u) / params.sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * h * params.sigma);
}

double FComfort(double jerk) { return -(jerk * jerk) / kJerkScale; }

double RewardCfm(std::optional<double> ttc, std::optional<double> headway, double jerk,
                 const RewardWeights& weights, const EffParams& params) {
  return weights.safety * FSafety(ttc) + weights.efficiency * FEff(headway, params) +
         weights.comfort * FComfort(jerk);
}

RewardTerms BilateralTerms(std::optional<double> ttc_front, std::optional<double> headway_front,
                           std::optional<double> ttc_back, std::optional<double> headway_back,
                           double jerk, const RewardWeights& weights, const EffParams& params) {
  RewardTerms terms;
  terms.safety = FSafety(ttc_front);
  terms.efficiency = FEff(headway_front, params);
  terms.comfort = FComfort(jerk);
  terms.safety_follower = FSafety(ttc_back);
  terms.efficiency_follower = FEff(headway_back, params);
  terms.total = weights.safety * (terms.safety + terms.safety_follower) +
                weights.efficiency * (terms.efficiency + terms.efficiency_follower) +
                weights.comfort * terms.comfort;
  return terms;
}

double RewardBilateral(std::optional<double> ttc_front, std::optional<double> headway_front,
                       std::optional<double> ttc_back, std::optional<double> headway_back,
                       double jerk, const RewardWeights& weights, const EffParams& params) {
  return BilateralTerms(ttc_front, headway_front, ttc_back, headway_back, jerk, weights, params)
      .total;
}

double RetargetU(double h_target, double sigma) {
  if (!(h_target > 0.0)) throw ConfigError("target headway must be positive");
  return std::log(h_target) + sigma * sigma;
}

}  // namespace carfollow
