#include "carfollow/checkpoint.h"

#include <fstream>
#include <sstream>

#include "carfollow/errors.h"
#include "json.hpp"

namespace carfollow {

using nlohmann::json;

std::string_view ToString(ObservationVariant variant) {
  return variant == ObservationVariant::kBilateral ? "bilateral" : "cfm";
}

ObservationVariant ParseObservationVariant(std::string_view name) {
  if (name == "bilateral") return ObservationVariant::kBilateral;
  if (name == "cfm") return ObservationVariant::kCfm;
  throw ConfigError("unknown observation variant '" + std::string(name) + "'");
}

namespace {

constexpr const char* kFormat = "carfollow-policy";

json NetToJson(const Mlp& net) {
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    std::vector<double> weight;
    weight.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) weight.push_back(layer.weight(r, c));
    }
    std::vector<double> bias(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back({{"activation", ToString(layer.activation)},
                      {"rows", layer.weight.rows()},
                      {"cols", layer.weight.cols()},
                      {"weight", weight},
                      {"bias", bias}});
  }
  return {{"sizes", net.sizes()}, {"output_scale", net.output_scale()}, {"layers", layers}};
}

Mlp NetFromJson(const json& j) {
  std::vector<DenseLayer> layers;
  for (const auto& jl : j.at("layers")) {
    const auto rows = jl.at("rows").get<Eigen::Index>();
    const auto cols = jl.at("cols").get<Eigen::Index>();
    const auto weight = jl.at("weight").get<std::vector<double>>();
    const auto bias = jl.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(weight.size()) != rows * cols ||
        static_cast<Eigen::Index>(bias.size()) != rows) {
      throw ConfigError("checkpoint layer has inconsistent shapes");
    }
    DenseLayer layer;
    layer.activation = ParseActivation(jl.at("activation").get<std::string>());
    layer.weight.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = weight[r * cols + c];
    }
    layer.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), rows);
    layers.push_back(std::move(layer));
  }
  Mlp net(std::move(layers), j.at("output_scale").get<double>());
  if (net.sizes() != j.at("sizes").get<std::vector<int>>()) {
    throw ConfigError("checkpoint header sizes do not match layer shapes");
  }
  return net;
}

}  // namespace

std::string CheckpointToString(const DdpgAgent& agent, const CheckpointMeta& meta) {
  const auto& cfg = agent.config();
  json j = {{"format", kFormat},
            {"version", kCheckpointVersion},
            {"seed", meta.seed},
            {"episodes", meta.episodes},
            {"variant", ToString(meta.variant)},
            {"obs_dim", cfg.obs_dim},
            {"hidden", cfg.hidden},
            {"action_bound", cfg.action_bound},
            {"gamma", cfg.gamma},
            {"tau", cfg.tau},
            {"actor_lr", cfg.actor_lr},
            {"critic_lr", cfg.critic_lr},
            {"actor", NetToJson(agent.actor())},
            {"critic", NetToJson(agent.critic())}};
  return j.dump(1) + "\n";
}

void SaveCheckpoint(const std::filesystem::path& path, const DdpgAgent& agent,
                    const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out << CheckpointToString(agent, meta);
}

LoadedPolicy CheckpointFromString(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ConfigError("not a policy checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ConfigError("unsupported checkpoint version " + j.at("version").dump());
    }
    CheckpointMeta meta;
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.episodes = j.at("episodes").get<int>();
    meta.variant = ParseObservationVariant(j.at("variant").get<std::string>());
    DdpgConfig cfg;
    cfg.obs_dim = j.at("obs_dim").get<int>();
    cfg.hidden = j.at("hidden").get<std::vector<int>>();
    cfg.action_bound = j.at("action_bound").get<double>();
    cfg.gamma = j.at("gamma").get<double>();
    cfg.tau = j.at("tau").get<double>();
    cfg.actor_lr = j.at("actor_lr").get<double>();
    cfg.critic_lr = j.at("critic_lr").get<double>();
    if (cfg.obs_dim != ObservationDim(meta.variant)) {
      throw ConfigError("checkpoint obs_dim does not match its observation variant");
    }
    return LoadedPolicy{DdpgAgent(cfg, NetFromJson(j.at("actor")), NetFromJson(j.at("critic"))),
                        meta};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

LoadedPolicy LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return CheckpointFromString(buffer.str());
}

}  // namespace carfollow
