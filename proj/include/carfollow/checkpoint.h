#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "carfollow/ddpg.h"
#include "carfollow/env.h"

namespace carfollow {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint64_t seed = 0;
  int episodes = 0;
  ObservationVariant variant = ObservationVariant::kBilateral;
};

struct LoadedPolicy {
  DdpgAgent agent;
  CheckpointMeta meta;
};

// JSON text: header (format, version, layer sizes, seed, episode count)
// followed by actor and critic parameters. Doubles round-trip exactly.
void SaveCheckpoint(const std::filesystem::path& path, const DdpgAgent& agent,
                    const CheckpointMeta& meta);
std::string CheckpointToString(const DdpgAgent& agent, const CheckpointMeta& meta);

// Throws ConfigError on a missing file, wrong format/version or bad shapes.
LoadedPolicy LoadCheckpoint(const std::filesystem::path& path);
LoadedPolicy CheckpointFromString(const std::string& text);

std::string_view ToString(ObservationVariant variant);
ObservationVariant ParseObservationVariant(std::string_view name);

}  // namespace carfollow
