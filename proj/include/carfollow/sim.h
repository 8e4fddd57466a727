#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "carfollow/scenario.h"

namespace carfollow {

struct VehicleState {
  int id = 0;
  double position = 0.0;  // ring: in [0, track_length)
  double speed = 0.0;     // >= 0
  double accel = 0.0;     // acceleration applied over the last step
  double length = 5.0;
  ControllerTag controller = ControllerTag::kIdm;
};

struct Neighbor {
  int id = 0;
  double gap = 0.0;  // bumper-to-bumper clearance
  double speed = 0.0;
  double accel = 0.0;
  double length = 0.0;
};

// Absent neighbours are std::nullopt, never a zero gap.
struct NeighborView {
  std::optional<Neighbor> front;
  std::optional<Neighbor> back;
};

struct RewardTerms {
  double safety = 0.0;
  double efficiency = 0.0;
  double comfort = 0.0;
  double safety_follower = 0.0;
  double efficiency_follower = 0.0;
  double total = 0.0;
};

struct VehicleRecord {
  int id = 0;
  ControllerTag controller = ControllerTag::kIdm;
  double position = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  std::optional<double> front_gap;
  std::optional<double> back_gap;
  std::optional<double> ttc;
  std::optional<double> time_headway;
  double jerk = 0.0;
  std::optional<RewardTerms> reward;  // RL-controlled vehicles only
  bool collision = false;
};

struct StepRecord {
  int step = 0;  // 1-based index of the step that produced this record
  double t = 0.0;
  std::vector<VehicleRecord> vehicles;
};

// Single-lane longitudinal kinematics with semi-implicit Euler integration:
//   v' = max(0, v + a dt),  x' = x + v' dt.
// Vehicles never reorder; a would-be overtake shows up as a nonpositive gap
// and is flagged as a collision, which terminates the run.
class Simulation {
 public:
  // Throws ConfigError if the config is invalid.
  explicit Simulation(ScenarioConfig config);

  // One acceleration command per vehicle, indexed by vehicle id.
  // Throws SimulationError on a non-finite command, a size mismatch, or when
  // the run has already terminated.
  StepRecord Step(std::span<const double> accel_commands);

  // Throws LookupError for unknown ids.
  NeighborView Neighbors(int vehicle_id) const;

  const ScenarioConfig& config() const { return config_; }
  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const VehicleState& vehicle(int vehicle_id) const;
  int num_vehicles() const { return static_cast<int>(vehicles_.size()); }
  double time() const { return steps_taken_ * config_.dt; }
  int steps_taken() const { return steps_taken_; }
  // Unwrapped distance coordinate; equals position on an open chain.
  double odometer(int vehicle_id) const { return odometer_.at(vehicle_id); }

  bool collided() const { return collided_; }
  bool road_end_reached() const { return road_end_reached_; }
  bool step_limit_reached() const { return steps_taken_ >= config_.steps_per_episode; }
  bool terminated() const { return collided_ || road_end_reached_ || step_limit_reached(); }

  std::mt19937_64& rng() { return rng_; }

 private:
  int FrontIndex(int i) const;  // -1 if none
  int BackIndex(int i) const;   // -1 if none
  double FrontGap(int i) const;

  ScenarioConfig config_;
  std::vector<VehicleState> vehicles_;
  std::vector<double> odometer_;
  int steps_taken_ = 0;
  bool collided_ = false;
  bool road_end_reached_ = false;
  std::mt19937_64 rng_;
};

}  // namespace carfollow
