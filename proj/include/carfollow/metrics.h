#pragma once

#include <optional>
#include <span>
#include <vector>

#include "carfollow/sim.h"

namespace carfollow {

// TTC with the relative speed in leader-minus-follower form
// (v_leader - v_self). Defined only while the follower closes in
// (relative_speed < 0); then gap / (v_self - v_leader).
std::optional<double> TimeToCollision(double gap, double relative_speed);

// (gap + leader_length) / speed; undefined at standstill.
std::optional<double> TimeHeadway(double gap, double leader_length, double speed);

double Jerk(double accel, double prev_accel, double dt);

// Half peak-to-peak speed of each series over an integer number of forcing
// periods after discarding `transient_cut` seconds. Series are sampled every
// dt. Throws AnalysisError when a series is shorter than the cut plus one
// period.
std::vector<double> OscillationAmplitudes(const std::vector<std::vector<double>>& speeds,
                                          double dt, double period, double transient_cut);

// Mean of FSafety over the defined entries; 0 when none are defined.
double LogTtcSafety(std::span<const std::optional<double>> ttc);

struct EpisodeMetrics {
  std::optional<double> mean_time_headway;  // over steps with defined headway
  double mean_abs_jerk = 0.0;
  std::optional<double> mean_ttc;  // over steps with defined TTC
  double mean_log_ttc_safety = 0.0;
  int collision_count = 0;
  double mean_speed = 0.0;
  long samples = 0;  // vehicle-steps aggregated
};

// Streaming form of ComputeEpisodeMetrics.
class EpisodeMetricsAccumulator {
 public:
  explicit EpisodeMetricsAccumulator(std::span<const int> vehicle_ids = {});
  void Add(const StepRecord& step);
  EpisodeMetrics Result() const;

 private:
  std::vector<int> vehicle_ids_;  // sorted; empty means all
  double headway_sum_ = 0.0, jerk_sum_ = 0.0, ttc_sum_ = 0.0, safety_sum_ = 0.0,
         speed_sum_ = 0.0;
  long headway_n_ = 0, ttc_n_ = 0, samples_ = 0;
  int collisions_ = 0;
};

// Aggregates over the records of `vehicle_ids`; an empty id list means all
// vehicles.
EpisodeMetrics ComputeEpisodeMetrics(std::span<const StepRecord> records,
                                     std::span<const int> vehicle_ids = {});

}  // namespace carfollow
