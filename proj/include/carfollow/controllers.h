#pragma once

#include <optional>

#include "carfollow/scenario.h"
#include "carfollow/sim.h"

namespace carfollow {

struct GippsParams {
  double desired_speed = 30.0;      // v_0
  double max_accel = 3.0;           // a
  double comfortable_decel = 3.0;   // b, positive magnitude
  double reaction_time = 1.0;       // tau
  void Validate() const;
};

struct IdmParams {
  double desired_speed = 30.0;     // v_0
  double max_accel = 1.4;          // a
  double comfortable_decel = 2.0;  // b
  double time_headway = 1.26;      // T
  double jam_distance = 2.0;       // s_0
  double exponent = 4.0;           // delta
  void Validate() const;
};

struct BcmGains {
  double kd = 0.5;              // s^-2
  double kv = 1.0;              // s^-1
  double reaction_time = 1.26;  // T of the unilateral fallback, s_0 = v T
  void Validate() const;
};

// Safe-braking speed: the largest speed that still lets the follower stop
// behind a leader that brakes to a standstill.
//   v_safe = -b tau + sqrt(b^2 tau^2 + v_leader^2 + 2 b gap)
double GippsSafeSpeed(double gap, double v_leader, const GippsParams& p);

// Next-step speed min(v + a dt, v_0, v_safe). Without a leader the safe-speed
// term is dropped.
double GippsSpeed(double v_self, std::optional<double> gap, double v_leader,
                  const GippsParams& p, double dt);

// s* = s_0 + max(v T + v dv / (2 sqrt(a b)), 0), dv = v_self - v_leader.
double IdmDesiredGap(double v, double dv, const IdmParams& p);

// a [1 - (v / v_0)^delta - (s* / gap)^2]. Throws std::domain_error if
// gap <= 0.
double IdmAccel(double v_self, double gap, double dv, const IdmParams& p);

// Free-road IDM term, a [1 - (v / v_0)^delta].
double IdmFreeAccel(double v_self, const IdmParams& p);

// Steady-platoon gap at speed v: (s_0 + v T) / sqrt(1 - (v / v_0)^delta).
// Throws ConfigError when v >= v_0 (no equilibrium).
double IdmEquilibriumGap(double v, const IdmParams& p);

// Bilateral law: kd (front_gap - back_gap) + kv (r_front - r_back) with
// r_front = v_leader - v_self and r_back = v_self - v_follower.
double BcmAccel(double front_gap, double back_gap, double r_front, double r_back,
                const BcmGains& g);

// Front-only fallback: kd (front_gap - v_self T) + kv (v_leader - v_self).
double UnilateralAccel(double front_gap, double v_self, double v_leader, const BcmGains& g);

double ClipAccel(double a, double lo, double hi);

struct ControllerParams {
  GippsParams gipps;
  IdmParams idm;
  BcmGains bcm;
  BcmGains unilateral;
  // Saturate classical controllers to +/- accel_bound as well. RL actions are
  // always saturated.
  bool clip_classical = false;
  double accel_bound = 3.0;
  // Free-road reference for BCM/unilateral vehicles without a leader.
  double target_speed = 20.0;
  void Validate() const;
};

// Acceleration command for vehicle `id` under a closed-form controller.
// Throws ConfigError for ControllerTag::kRl.
double ClassicalCommand(ControllerTag tag, const Simulation& sim, int id,
                        const ControllerParams& params);

// Command that puts the vehicle exactly on the profile speed at t + dt.
double ForcedCommand(const PerturbationProfile& profile, const Simulation& sim, int id);

}  // namespace carfollow
