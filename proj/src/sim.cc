#include "carfollow/sim.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "carfollow/errors.h"
#include "carfollow/metrics.h"

namespace carfollow {

Simulation::Simulation(ScenarioConfig config) : config_(std::move(config)), rng_(config_.rng_seed) {
  config_.Validate();
  if (config_.initial_jitter > 0.0) {
    std::uniform_real_distribution<double> jitter(-config_.initial_jitter, config_.initial_jitter);
    for (auto& veh : config_.vehicles) veh.position += jitter(rng_);
    if (config_.is_ring()) {
      const double length = config_.track_length();
      // Keep the head at the front of the roster after wrapping.
      for (auto& veh : config_.vehicles) veh.position = std::clamp(veh.position, 0.0, length);
    }
    try {
      config_.Validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("initial jitter produced an invalid roster: ") + e.what());
    }
  }
  const auto n = config_.vehicles.size();
  vehicles_.reserve(n);
  odometer_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& spec = config_.vehicles[i];
    vehicles_.push_back(VehicleState{static_cast<int>(i), spec.position, spec.speed, 0.0,
                                     spec.length, spec.controller});
    odometer_.push_back(spec.position);
  }
}

const VehicleState& Simulation::vehicle(int vehicle_id) const {
  if (vehicle_id < 0 || vehicle_id >= num_vehicles()) {
    throw LookupError("unknown vehicle id " + std::to_string(vehicle_id));
  }
  return vehicles_[vehicle_id];
}

int Simulation::FrontIndex(int i) const {
  if (i > 0) return i - 1;
  return config_.is_ring() ? num_vehicles() - 1 : -1;
}

int Simulation::BackIndex(int i) const {
  if (i + 1 < num_vehicles()) return i + 1;
  return config_.is_ring() ? 0 : -1;
}

double Simulation::FrontGap(int i) const {
  const int front = FrontIndex(i);
  double gap = odometer_[front] - odometer_[i] - vehicles_[front].length;
  if (i == 0) gap += config_.track_length();  // ring wrap-around
  return gap;
}

NeighborView Simulation::Neighbors(int vehicle_id) const {
  vehicle(vehicle_id);  // validates the id
  NeighborView view;
  if (const int f = FrontIndex(vehicle_id); f >= 0) {
    const auto& lead = vehicles_[f];
    view.front = Neighbor{f, FrontGap(vehicle_id), lead.speed, lead.accel, lead.length};
  }
  if (const int b = BackIndex(vehicle_id); b >= 0) {
    const auto& follower = vehicles_[b];
    view.back = Neighbor{b, FrontGap(b), follower.speed, follower.accel, follower.length};
  }
  return view;
}

StepRecord Simulation::Step(std::span<const double> accel_commands) {
  if (terminated()) throw SimulationError("cannot step a terminated simulation");
  if (static_cast<int>(accel_commands.size()) != num_vehicles()) {
    throw SimulationError("expected " + std::to_string(num_vehicles()) + " commands, got " +
                          std::to_string(accel_commands.size()));
  }
  for (int i = 0; i < num_vehicles(); ++i) {
    if (!std::isfinite(accel_commands[i])) {
      throw SimulationError("non-finite acceleration command for vehicle " + std::to_string(i));
    }
  }

  const double dt = config_.dt;
  std::vector<double> prev_accel(vehicles_.size());
  for (int i = 0; i < num_vehicles(); ++i) {
    auto& veh = vehicles_[i];
    prev_accel[i] = veh.accel;
    const double new_speed = std::max(0.0, veh.speed + accel_commands[i] * dt);
    veh.accel = (new_speed - veh.speed) / dt;
    veh.speed = new_speed;
    odometer_[i] += new_speed * dt;
    veh.position =
        config_.is_ring() ? std::fmod(odometer_[i], config_.track_length()) : odometer_[i];
  }
  ++steps_taken_;

  StepRecord record;
  record.step = steps_taken_;
  record.t = time();
  record.vehicles.resize(vehicles_.size());
  for (int i = 0; i < num_vehicles(); ++i) {
    const auto& veh = vehicles_[i];
    auto& rec = record.vehicles[i];
    rec.id = veh.id;
    rec.controller = veh.controller;
    rec.position = veh.position;
    rec.speed = veh.speed;
    rec.accel = veh.accel;
    rec.jerk = Jerk(veh.accel, prev_accel[i], dt);
    if (const int f = FrontIndex(i); f >= 0) {
      const double gap = FrontGap(i);
      rec.front_gap = gap;
      rec.ttc = TimeToCollision(gap, vehicles_[f].speed - veh.speed);
      rec.time_headway = TimeHeadway(gap, vehicles_[f].length, veh.speed);
      if (gap <= 0.0) {
        rec.collision = true;
        collided_ = true;
      }
    }
    if (const int b = BackIndex(i); b >= 0) rec.back_gap = FrontGap(b);
  }
  if (!config_.is_ring()) {
    for (const auto& veh : vehicles_) {
      if (veh.position > config_.track_length()) road_end_reached_ = true;
    }
  }
  return record;
}

}  // namespace carfollow
