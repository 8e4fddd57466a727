#include "carfollow/trajectory_io.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "carfollow/errors.h"

namespace carfollow {

std::string FormatNumber(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

namespace {

std::string FormatExact(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string Opt(const std::optional<double>& value) {
  return value ? FormatNumber(*value) : std::string();
}

std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double ParseDouble(std::string_view field, long line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw AnalysisError("line " + std::to_string(line_no) + ": bad number '" +
                        std::string(field) + "'");
  }
  return value;
}

std::optional<double> ParseOpt(std::string_view field, long line_no) {
  if (field.empty()) return std::nullopt;
  return ParseDouble(field, line_no);
}

int ParseInt(std::string_view field, long line_no) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw AnalysisError("line " + std::to_string(line_no) + ": bad integer '" +
                        std::string(field) + "'");
  }
  return value;
}

std::string_view StripCr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

void WriteTrajectoryCsv(std::ostream& out, std::span<const StepRecord> records) {
  out << kTrajectoryHeader << '\n';
  std::string row;
  for (const auto& step : records) {
    const std::string t = FormatNumber(step.t);
    for (const auto& rec : step.vehicles) {
      row.clear();
      row += t;
      row += ',' + std::to_string(rec.id);
      row += ',';
      row += ToString(rec.controller);
      row += ',' + FormatNumber(rec.position);
      row += ',' + FormatNumber(rec.speed);
      row += ',' + FormatNumber(rec.accel);
      row += ',' + Opt(rec.front_gap);
      row += ',' + Opt(rec.back_gap);
      row += ',' + Opt(rec.ttc);
      row += ',' + Opt(rec.time_headway);
      row += ',' + FormatNumber(rec.jerk);
      if (rec.reward) {
        const auto& r = *rec.reward;
        for (double v : {r.safety, r.efficiency, r.comfort, r.safety_follower,
                         r.efficiency_follower, r.total}) {
          row += ',' + FormatNumber(v);
        }
      } else {
        row += ",,,,,,";
      }
      row += rec.collision ? ",1" : ",0";
      out << row << '\n';
    }
  }
}

void WriteTrajectoryCsv(const std::filesystem::path& path, std::span<const StepRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  WriteTrajectoryCsv(out, records);
}

std::vector<StepRecord> ReadTrajectoryCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || StripCr(line) != kTrajectoryHeader) {
    throw AnalysisError("trajectory CSV header does not match the expected columns");
  }
  std::vector<StepRecord> records;
  long line_no = 1;
  std::string last_t;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = StripCr(line);
    if (view.empty()) continue;
    const auto f = SplitCsv(view);
    if (f.size() != 18) {
      throw AnalysisError("line " + std::to_string(line_no) + ": expected 18 fields, got " +
                          std::to_string(f.size()));
    }
    if (records.empty() || f[0] != last_t) {
      last_t = std::string(f[0]);
      StepRecord step;
      step.step = static_cast<int>(records.size()) + 1;
      step.t = ParseDouble(f[0], line_no);
      if (!records.empty() && !(step.t > records.back().t)) {
        throw AnalysisError("line " + std::to_string(line_no) + ": time is not increasing");
      }
      records.push_back(std::move(step));
    }
    VehicleRecord rec;
    rec.id = ParseInt(f[1], line_no);
    try {
      rec.controller = ParseControllerTag(f[2]);
    } catch (const ConfigError& e) {
      throw AnalysisError("line " + std::to_string(line_no) + ": " + e.what());
    }
    rec.position = ParseDouble(f[3], line_no);
    rec.speed = ParseDouble(f[4], line_no);
    rec.accel = ParseDouble(f[5], line_no);
    rec.front_gap = ParseOpt(f[6], line_no);
    rec.back_gap = ParseOpt(f[7], line_no);
    rec.ttc = ParseOpt(f[8], line_no);
    rec.time_headway = ParseOpt(f[9], line_no);
    rec.jerk = ParseDouble(f[10], line_no);
    if (!f[16].empty()) {
      rec.reward = RewardTerms{ParseDouble(f[11], line_no), ParseDouble(f[12], line_no),
                               ParseDouble(f[13], line_no), ParseDouble(f[14], line_no),
                               ParseDouble(f[15], line_no), ParseDouble(f[16], line_no)};
    }
    if (f[17] != "0" && f[17] != "1") {
      throw AnalysisError("line " + std::to_string(line_no) + ": collision flag must be 0 or 1");
    }
    rec.collision = f[17] == "1";
    records.back().vehicles.push_back(std::move(rec));
  }
  return records;
}

std::vector<StepRecord> ReadTrajectoryCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AnalysisError("cannot open " + path.string());
  return ReadTrajectoryCsv(in);
}

SpaceTime BuildSpaceTime(const Simulation& initial, std::span<const StepRecord> records) {
  SpaceTime data;
  data.dt = initial.config().dt;
  const auto n = initial.vehicles().size();
  data.positions.resize(n);
  for (const auto& veh : initial.vehicles()) {
    data.vehicle_ids.push_back(veh.id);
    data.positions[veh.id].push_back(veh.position);
  }
  data.times.push_back(0.0);
  for (const auto& step : records) {
    data.times.push_back(step.step * data.dt);
    for (const auto& rec : step.vehicles) data.positions[rec.id].push_back(rec.position);
  }
  return data;
}

void WriteSpaceTimeCsv(const std::filesystem::path& path, const SpaceTime& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "t,vehicle_id,position\n";
  for (std::size_t k = 0; k < data.times.size(); ++k) {
    const std::string t = FormatExact(data.times[k]);
    for (std::size_t v = 0; v < data.vehicle_ids.size(); ++v) {
      out << t << ',' << data.vehicle_ids[v] << ',' << FormatExact(data.positions[v][k]) << '\n';
    }
  }
}

SpaceTime ReadSpaceTimeCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AnalysisError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || StripCr(line) != "t,vehicle_id,position") {
    throw AnalysisError("space-time CSV header must be t,vehicle_id,position");
  }
  SpaceTime data;
  std::map<int, std::size_t> slot;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = StripCr(line);
    if (view.empty()) continue;
    const auto f = SplitCsv(view);
    if (f.size() != 3) throw AnalysisError("line " + std::to_string(line_no) + ": need 3 fields");
    const double t = ParseDouble(f[0], line_no);
    const int id = ParseInt(f[1], line_no);
    if (data.times.empty() || t != data.times.back()) data.times.push_back(t);
    auto [it, inserted] = slot.try_emplace(id, data.vehicle_ids.size());
    if (inserted) {
      data.vehicle_ids.push_back(id);
      data.positions.emplace_back();
    }
    data.positions[it->second].push_back(ParseDouble(f[2], line_no));
  }
  for (const auto& series : data.positions) {
    if (series.size() != data.times.size()) {
      throw AnalysisError("space-time table is ragged");
    }
  }
  if (data.times.size() >= 2) data.dt = data.times[1] - data.times[0];
  return data;
}

std::vector<std::vector<double>> SpeedsFromSpaceTime(const SpaceTime& data) {
  std::vector<std::vector<double>> speeds(data.positions.size());
  for (std::size_t v = 0; v < data.positions.size(); ++v) {
    const auto& x = data.positions[v];
    for (std::size_t k = 1; k < x.size(); ++k) speeds[v].push_back((x[k] - x[k - 1]) / data.dt);
  }
  return speeds;
}

nlohmann::json MetricsToJson(const EpisodeMetrics& m) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"mean_time_headway", opt(m.mean_time_headway)},
          {"mean_abs_jerk", m.mean_abs_jerk},
          {"mean_ttc", opt(m.mean_ttc)},
          {"mean_log_ttc_safety", m.mean_log_ttc_safety},
          {"collision_count", m.collision_count},
          {"mean_speed", m.mean_speed},
          {"samples", m.samples}};
}

EpisodeMetrics MetricsFromJson(const nlohmann::json& j) {
  auto opt = [&](const char* key) -> std::optional<double> {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  EpisodeMetrics m;
  m.mean_time_headway = opt("mean_time_headway");
  m.mean_abs_jerk = j.at("mean_abs_jerk").get<double>();
  m.mean_ttc = opt("mean_ttc");
  m.mean_log_ttc_safety = j.at("mean_log_ttc_safety").get<double>();
  m.collision_count = j.at("collision_count").get<int>();
  m.mean_speed = j.at("mean_speed").get<double>();
  m.samples = j.value("samples", 0L);
  return m;
}

}  // namespace carfollow
