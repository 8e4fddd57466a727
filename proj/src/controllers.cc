#include "carfollow/controllers.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "carfollow/errors.h"

namespace carfollow {

void GippsParams::Validate() const {
  if (!(desired_speed > 0.0 && max_accel > 0.0 && comfortable_decel > 0.0 && reaction_time > 0.0)) {
    throw ConfigError("Gipps parameters must all be strictly positive");
  }
}

void IdmParams::Validate() const {
  if (!(desired_speed > 0.0 && max_accel > 0.0 && comfortable_decel > 0.0 && time_headway > 0.0 &&
        jam_distance > 0.0 && exponent > 0.0)) {
    throw ConfigError("IDM parameters must all be strictly positive");
  }
}

void BcmGains::Validate() const {
  if (!(kd > 0.0 && kv > 0.0)) throw ConfigError("BCM gains kd and kv must be positive");
  if (!(reaction_time > 0.0)) throw ConfigError("BCM reaction time must be positive");
}

void ControllerParams::Validate() const {
  gipps.Validate();
  idm.Validate();
  bcm.Validate();
  unilateral.Validate();
  if (!(accel_bound > 0.0)) throw ConfigError("accel_bound must be positive");
}

double GippsSafeSpeed(double gap, double v_leader, const GippsParams& p) {
  if (gap < 0.0) throw std::domain_error("Gipps safe speed needs gap >= 0");
  const double bt = p.comfortable_decel * p.reaction_time;
  return -bt + std::sqrt(bt * bt + v_leader * v_leader + 2.0 * p.comfortable_decel * gap);
}

double GippsSpeed(double v_self, std::optional<double> gap, double v_leader,
                  const GippsParams& p, double dt) {
  double speed = std::min(v_self + p.max_accel * dt, p.desired_speed);
  if (gap) speed = std::min(speed, GippsSafeSpeed(*gap, v_leader, p));
  return speed;
}

double IdmDesiredGap(double v, double dv, const IdmParams& p) {
  const double dynamic =
      v * p.time_headway + v * dv / (2.0 * std::sqrt(p.max_accel * p.comfortable_decel));
  return p.jam_distance + std::max(dynamic, 0.0);
}

double IdmFreeAccel(double v_self, const IdmParams& p) {
  return p.max_accel * (1.0 - std::pow(v_self / p.desired_speed, p.exponent));
}

double IdmAccel(double v_self, double gap, double dv, const IdmParams& p) {
  if (!(gap > 0.0)) throw std::domain_error("IDM needs a positive gap");
  const double ratio = IdmDesiredGap(v_self, dv, p) / gap;
  return IdmFreeAccel(v_self, p) - p.max_accel * ratio * ratio;
}

double IdmEquilibriumGap(double v, const IdmParams& p) {
  const double free = 1.0 - std::pow(v / p.desired_speed, p.exponent);
  if (!(free > 0.0)) {
    throw ConfigError("IDM has no equilibrium gap at or above its desired speed");
  }
  return (p.jam_distance + v * p.time_headway) / std::sqrt(free);
}

double BcmAccel(double front_gap, double back_gap, double r_front, double r_back,
                const BcmGains& g) {
  return g.kd * (front_gap - back_gap) + g.kv * (r_front - r_back);
}

double UnilateralAccel(double front_gap, double v_self, double v_leader, const BcmGains& g) {
  const double desired_gap = v_self * g.reaction_time;
  return g.kd * (front_gap - desired_gap) + g.kv * (v_leader - v_self);
}

double ClipAccel(double a, double lo, double hi) { return std::clamp(a, lo, hi); }

namespace {

double RawCommand(ControllerTag tag, const Simulation& sim, int id, const ControllerParams& params) {
  const auto& self = sim.vehicle(id);
  const auto view = sim.Neighbors(id);
  switch (tag) {
    case ControllerTag::kIdm:
      if (!view.front) return IdmFreeAccel(self.speed, params.idm);
      return IdmAccel(self.speed, view.front->gap, self.speed - view.front->speed, params.idm);
    case ControllerTag::kGipps: {
      const std::optional<double> gap =
          view.front ? std::optional<double>(view.front->gap) : std::nullopt;
      const double v_leader = view.front ? view.front->speed : 0.0;
      const double dt = sim.config().dt;
      return (GippsSpeed(self.speed, gap, v_leader, params.gipps, dt) - self.speed) / dt;
    }
    case ControllerTag::kBcm:
      if (!view.front) return params.bcm.kv * (params.target_speed - self.speed);
      if (!view.back) {
        return UnilateralAccel(view.front->gap, self.speed, view.front->speed, params.bcm);
      }
      return BcmAccel(view.front->gap, view.back->gap, view.front->speed - self.speed,
                      self.speed - view.back->speed, params.bcm);
    case ControllerTag::kUnilateral:
      if (!view.front) return params.unilateral.kv * (params.target_speed - self.speed);
      return UnilateralAccel(view.front->gap, self.speed, view.front->speed, params.unilateral);
    case ControllerTag::kRl:
      break;
  }
  throw ConfigError("vehicle " + std::to_string(id) + " is RL-controlled; no closed-form command");
}

}  // namespace

double ClassicalCommand(ControllerTag tag, const Simulation& sim, int id,
                        const ControllerParams& params) {
  const double a = RawCommand(tag, sim, id, params);
  return params.clip_classical ? ClipAccel(a, -params.accel_bound, params.accel_bound) : a;
}

double ForcedCommand(const PerturbationProfile& profile, const Simulation& sim, int id) {
  const double dt = sim.config().dt;
  return (profile.SpeedAt(sim.time() + dt) - sim.vehicle(id).speed) / dt;
}

}  // namespace carfollow
