#include <map>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "carfollow/config.h"
#include "carfollow/controllers.h"
#include "carfollow/errors.h"
#include "carfollow/experiments.h"
#include "carfollow/reward.h"
#include "carfollow/trajectory_io.h"

namespace py = pybind11;
using namespace carfollow;

namespace {

Config MakeConfig(const std::string& preset, const std::map<std::string, std::string>& overrides) {
  Config config = Config::Defaults(preset);
  for (const auto& [key, value] : overrides) config.Set(key, value);
  return config;
}

// Steps a MultiAgentEnv built from a preset plus overrides.
class PyEnv {
 public:
  PyEnv(const std::string& preset, const std::map<std::string, std::string>& overrides)
      : env_(BuildExperiment(MakeConfig(preset, overrides)).env) {}

  void Reset(std::optional<std::uint64_t> seed) { env_.Reset(seed); }
  std::vector<std::vector<double>> Observations() const { return env_.Observations(); }
  py::tuple Step(const std::vector<double>& actions) {
    EnvStep step = env_.Step(actions);
    return py::make_tuple(step.observations, step.rewards, step.done);
  }
  const std::vector<int>& agents() const { return env_.agents(); }
  int obs_dim() const { return env_.obs_dim(); }
  bool done() const { return env_.done(); }
  double time() const { return env_.sim().time(); }

 private:
  MultiAgentEnv env_;
};

}  // namespace

PYBIND11_MODULE(_carfollow, m) {
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);

  m.def("f_safety", &FSafety, py::arg("ttc"));
  m.def(
      "f_eff",
      [](std::optional<double> h, double u, double sigma) { return FEff(h, EffParams{u, sigma}); },
      py::arg("headway"), py::arg("u") = EffParams{}.u, py::arg("sigma") = EffParams{}.sigma);
  m.def("f_comfort", &FComfort, py::arg("jerk"));
  m.def("retarget_u", &RetargetU, py::arg("target_headway"), py::arg("sigma") = EffParams{}.sigma);

  m.def(
      "idm_accel",
      [](double v, double gap, double dv) { return IdmAccel(v, gap, dv, IdmParams{}); },
      py::arg("speed"), py::arg("gap"), py::arg("dv"));
  m.def(
      "idm_equilibrium_gap", [](double v) { return IdmEquilibriumGap(v, IdmParams{}); },
      py::arg("speed"));
  m.def(
      "bcm_accel",
      [](double sf, double sb, double rf, double rb) { return BcmAccel(sf, sb, rf, rb, BcmGains{}); },
      py::arg("front_gap"), py::arg("back_gap"), py::arg("r_front"), py::arg("r_back"));
  m.def(
      "unilateral_accel",
      [](double sf, double v, double vl) { return UnilateralAccel(sf, v, vl, BcmGains{}); },
      py::arg("front_gap"), py::arg("speed"), py::arg("leader_speed"));

  m.def("presets", [] { return std::vector<std::string>(Config::Presets().begin(), Config::Presets().end()); });
  m.def(
      "default_config_json", [](const std::string& preset) { return Config::Defaults(preset).ToJson().dump(); },
      py::arg("preset"));

  // Runners return the JSON text of the document they write.
  m.def(
      "simulate_json",
      [](const std::string& preset, const std::map<std::string, std::string>& overrides,
         const std::filesystem::path& out) {
        py::gil_scoped_release release;
        return RunSimulate(MakeConfig(preset, overrides), out).metrics.dump();
      },
      py::arg("preset"), py::arg("overrides"), py::arg("out"));
  m.def(
      "perturb_json",
      [](const std::string& preset, const std::map<std::string, std::string>& overrides,
         const std::filesystem::path& out) {
        py::gil_scoped_release release;
        return RunPerturb(MakeConfig(preset, overrides), out).run.metrics.dump();
      },
      py::arg("preset"), py::arg("overrides"), py::arg("out"));
  m.def(
      "train_json",
      [](const std::string& preset, const std::map<std::string, std::string>& overrides,
         const std::filesystem::path& out) {
        py::gil_scoped_release release;
        const TrainResult result = RunTrain(MakeConfig(preset, overrides), out);
        nlohmann::json curve = nlohmann::json::array();
        for (const auto& row : result.curve) {
          curve.push_back({{"episode", row.episode},
                           {"mean_reward", row.mean_reward},
                           {"collisions", row.collisions},
                           {"steps", row.steps}});
        }
        return curve.dump();
      },
      py::arg("preset"), py::arg("overrides"), py::arg("out"));
  m.def(
      "eval_json",
      [](const std::string& preset, const std::map<std::string, std::string>& overrides,
         const std::filesystem::path& out) {
        py::gil_scoped_release release;
        const EvalOutcome outcome = RunEval(MakeConfig(preset, overrides), out);
        return nlohmann::json{{"mean_reward", outcome.mean_reward},
                              {"collisions", outcome.collisions},
                              {"metrics", MetricsToJson(outcome.metrics)}}
            .dump();
      },
      py::arg("preset"), py::arg("overrides"), py::arg("out"));

  py::class_<PyEnv>(m, "Env")
      .def(py::init<const std::string&, const std::map<std::string, std::string>&>(),
           py::arg("preset"), py::arg("overrides") = std::map<std::string, std::string>{})
      .def("reset", &PyEnv::Reset, py::arg("seed") = std::nullopt)
      .def("observations", &PyEnv::Observations)
      .def("step", &PyEnv::Step, py::arg("actions"))
      .def_property_readonly("agents", &PyEnv::agents)
      .def_property_readonly("obs_dim", &PyEnv::obs_dim)
      .def_property_readonly("done", &PyEnv::done)
      .def_property_readonly("time", &PyEnv::time);
}
