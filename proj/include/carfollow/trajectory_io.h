#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "carfollow/metrics.h"
#include "carfollow/sim.h"
#include "json.hpp"

namespace carfollow {

inline constexpr const char* kTrajectoryHeader =
    "t,vehicle_id,controller,position,speed,accel,front_gap,back_gap,ttc,time_headway,jerk,"
    "r_safety,r_eff,r_comfort,r_safety_f,r_eff_f,reward,collision";

// One row per vehicle per step; absent values are empty fields and floats are
// printed with 6 significant digits.
void WriteTrajectoryCsv(std::ostream& out, std::span<const StepRecord> records);
void WriteTrajectoryCsv(const std::filesystem::path& path, std::span<const StepRecord> records);

// Inverse of WriteTrajectoryCsv (up to the printed precision). Throws
// AnalysisError on malformed input.
std::vector<StepRecord> ReadTrajectoryCsv(std::istream& in);
std::vector<StepRecord> ReadTrajectoryCsv(const std::filesystem::path& path);

// Positions per vehicle sampled every dt, starting at t = 0.
struct SpaceTime {
  double dt = 0.1;
  std::vector<int> vehicle_ids;
  std::vector<double> times;
  std::vector<std::vector<double>> positions;  // [vehicle][sample]
};

SpaceTime BuildSpaceTime(const Simulation& initial, std::span<const StepRecord> records);

// CSV `t,vehicle_id,position`, 17 significant digits so that re-import is
// exact.
void WriteSpaceTimeCsv(const std::filesystem::path& path, const SpaceTime& data);
SpaceTime ReadSpaceTimeCsv(const std::filesystem::path& path);

// Per-vehicle speeds by finite differences of an open-chain space-time table;
// one sample fewer than the table.
std::vector<std::vector<double>> SpeedsFromSpaceTime(const SpaceTime& data);

nlohmann::json MetricsToJson(const EpisodeMetrics& metrics);
EpisodeMetrics MetricsFromJson(const nlohmann::json& j);

// Fixed "%.6g" rendering used by every CSV writer.
std::string FormatNumber(double value);

}  // namespace carfollow
