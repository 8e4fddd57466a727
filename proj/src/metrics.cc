#include "carfollow/metrics.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "carfollow/errors.h"
#include "carfollow/reward.h"

namespace carfollow {

std::optional<double> TimeToCollision(double gap, double relative_speed) {
  if (!(relative_speed < 0.0)) return std::nullopt;
  return gap / -relative_speed;
}

std::optional<double> TimeHeadway(double gap, double leader_length, double speed) {
  if (!(speed > 0.0)) return std::nullopt;
  return (gap + leader_length) / speed;
}

double Jerk(double accel, double prev_accel, double dt) { return (accel - prev_accel) / dt; }

std::vector<double> OscillationAmplitudes(const std::vector<std::vector<double>>& speeds,
                                          double dt, double period, double transient_cut) {
  if (!(dt > 0.0) || !(period > 0.0) || transient_cut < 0.0) {
    throw AnalysisError("amplitude analysis needs dt > 0, period > 0 and transient_cut >= 0");
  }
  const auto start = static_cast<std::size_t>(std::llround(transient_cut / dt));
  const auto per_period = static_cast<std::size_t>(std::llround(period / dt));
  if (per_period == 0) throw AnalysisError("forcing period shorter than one step");
  std::vector<double> amplitudes;
  amplitudes.reserve(speeds.size());
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    const auto& series = speeds[i];
    if (series.size() < start + per_period) {
      throw AnalysisError("series " + std::to_string(i) + " has " +
                          std::to_string(series.size()) +
                          " samples, fewer than transient + one period");
    }
    const std::size_t periods = (series.size() - start) / per_period;
    const auto first = series.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = first + static_cast<std::ptrdiff_t>(periods * per_period);
    const auto [lo, hi] = std::minmax_element(first, last);
    amplitudes.push_back((*hi - *lo) / 2.0);
  }
  return amplitudes;
}

double LogTtcSafety(std::span<const std::optional<double>> ttc) {
  double sum = 0.0;
  long count = 0;
  for (const auto& value : ttc) {
    if (!value) continue;
    sum += FSafety(value);
    ++count;
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

EpisodeMetricsAccumulator::EpisodeMetricsAccumulator(std::span<const int> vehicle_ids)
    : vehicle_ids_(vehicle_ids.begin(), vehicle_ids.end()) {
  std::sort(vehicle_ids_.begin(), vehicle_ids_.end());
}

void EpisodeMetricsAccumulator::Add(const StepRecord& step) {
  for (const auto& rec : step.vehicles) {
    if (!vehicle_ids_.empty() &&
        !std::binary_search(vehicle_ids_.begin(), vehicle_ids_.end(), rec.id)) {
      continue;
    }
    ++samples_;
    jerk_sum_ += std::abs(rec.jerk);
    speed_sum_ += rec.speed;
    if (rec.time_headway) {
      headway_sum_ += *rec.time_headway;
      ++headway_n_;
    }
    if (rec.ttc) {
      ttc_sum_ += *rec.ttc;
      safety_sum_ += FSafety(rec.ttc);
      ++ttc_n_;
    }
    if (rec.collision) ++collisions_;
  }
}

EpisodeMetrics EpisodeMetricsAccumulator::Result() const {
  EpisodeMetrics out;
  out.samples = samples_;
  out.collision_count = collisions_;
  if (samples_ > 0) {
    out.mean_abs_jerk = jerk_sum_ / static_cast<double>(samples_);
    out.mean_speed = speed_sum_ / static_cast<double>(samples_);
  }
  if (headway_n_ > 0) out.mean_time_headway = headway_sum_ / static_cast<double>(headway_n_);
  if (ttc_n_ > 0) {
    out.mean_ttc = ttc_sum_ / static_cast<double>(ttc_n_);
    out.mean_log_ttc_safety = safety_sum_ / static_cast<double>(ttc_n_);
  }
  return out;
}

EpisodeMetrics ComputeEpisodeMetrics(std::span<const StepRecord> records,
                                     std::span<const int> vehicle_ids) {
  EpisodeMetricsAccumulator acc(vehicle_ids);
  for (const auto& step : records) acc.Add(step);
  return acc.Result();
}

}  // namespace carfollow
