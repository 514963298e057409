// Python module `_scenesim`: kinematics, estimators, episode runs and metrics.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "scenesim/errors.hpp"
#include "scenesim/illumination.hpp"
#include "scenesim/kinematics.hpp"
#include "scenesim/metrics.hpp"
#include "scenesim/sim_engine.hpp"

namespace py = pybind11;
using namespace scenesim;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_scenesim, m) {
  m.doc() = "Deterministic closed-loop driving scenario simulator";

  static py::exception<Error> error_type(m, "ScenesimError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<VehicleState>(m, "VehicleState")
      .def(py::init<>())
      .def(py::init([](double x, double y, double heading, double v, double l_f, double l_r) {
             VehicleState s;
             s.x = x;
             s.y = y;
             s.heading = heading;
             s.v = v;
             s.l_f = l_f;
             s.l_r = l_r;
             return s;
           }),
           py::arg("x"), py::arg("y"), py::arg("heading"), py::arg("v"), py::arg("l_f") = 1.4, py::arg("l_r") = 1.4)
      .def_readwrite("x", &VehicleState::x)
      .def_readwrite("y", &VehicleState::y)
      .def_readwrite("heading", &VehicleState::heading)
      .def_readwrite("v", &VehicleState::v)
      .def_readwrite("l_f", &VehicleState::l_f)
      .def_readwrite("l_r", &VehicleState::l_r)
      .def_readwrite("width", &VehicleState::width)
      .def_readwrite("length", &VehicleState::length)
      .def("__eq__", [](const VehicleState& a, const VehicleState& b) { return a == b; })
      .def("__repr__", [](const VehicleState& s) {
        return "VehicleState(x=" + std::to_string(s.x) + ", y=" + std::to_string(s.y) +
               ", heading=" + std::to_string(s.heading) + ", v=" + std::to_string(s.v) + ")";
      });

  py::class_<ControlAction>(m, "ControlAction")
      .def(py::init([](double accel, double steer) { return ControlAction{accel, steer}; }), py::arg("accel") = 0.0,
           py::arg("steer") = 0.0)
      .def_readwrite("accel", &ControlAction::accel)
      .def_readwrite("steer", &ControlAction::steer)
      .def("clamped", &ControlAction::clamped);

  py::class_<KinematicParams>(m, "KinematicParams")
      .def(py::init([](double dt, double u1, double u2) { return KinematicParams{dt, u1, u2}; }), py::arg("dt") = 0.1,
           py::arg("u1") = 0.0, py::arg("u2") = 1.0)
      .def_readwrite("dt", &KinematicParams::dt)
      .def_readwrite("u1", &KinematicParams::u1)
      .def_readwrite("u2", &KinematicParams::u2);

  py::class_<ImuSample>(m, "ImuSample")
      .def(py::init([](long tick, double x, double y, double heading, double v) {
             return ImuSample{tick, x, y, heading, v};
           }),
           py::arg("tick"), py::arg("x"), py::arg("y"), py::arg("heading"), py::arg("v"))
      .def_readwrite("tick", &ImuSample::tick)
      .def_readwrite("x", &ImuSample::x)
      .def_readwrite("y", &ImuSample::y)
      .def_readwrite("heading", &ImuSample::heading)
      .def_readwrite("v", &ImuSample::v);

  m.def("akm_step", &akm_step, py::arg("state"), py::arg("action"), py::arg("params"));
  m.def("bicycle_step", &bicycle_step, py::arg("state"), py::arg("action"), py::arg("dt") = 0.1);
  m.def("slip_angle", &slip_angle, py::arg("steer"), py::arg("l_f"), py::arg("l_r"));

  m.def(
      "estimate_akm_params",
      [](const std::vector<std::vector<ImuSample>>& logs, double l_f, double l_r, double dt) {
        const AkmEstimate est = estimate_akm_params(logs, l_f, l_r, dt);
        return py::dict(py::arg("u1") = est.params.u1, py::arg("u2") = est.params.u2,
                        py::arg("residual") = est.objective, py::arg("pairs") = est.usable_pairs);
      },
      py::arg("logs"), py::arg("l_f"), py::arg("l_r"), py::arg("dt") = 0.1);
  m.def("read_imu_csv", &read_imu_csv, py::arg("path"));

  m.def(
      "estimate_light",
      [](const std::vector<std::vector<double>>& rows, double sigma) {
        ImageGrid img;
        img.height = static_cast<int>(rows.size());
        img.width = rows.empty() ? 0 : static_cast<int>(rows.front().size());
        for (const auto& r : rows) {
          if (static_cast<int>(r.size()) != img.width) throw Error(ErrorCode::kValidation, "ragged image rows");
          img.luminance.insert(img.luminance.end(), r.begin(), r.end());
        }
        const LightEstimate est = estimate_light(img, sigma);
        return py::dict(py::arg("l") = est.direction, py::arg("azimuth") = est.azimuth,
                        py::arg("peak") = py::make_tuple(est.peak_row, est.peak_col));
      },
      py::arg("image"), py::arg("sigma") = kDefaultBlurSigma);

  m.def(
      "compute_rates",
      [](const py::list& episodes) {
        std::vector<EpisodeResult> results;
        const auto dumps = py::module_::import("json").attr("dumps");
        for (const auto& e : episodes) {
          results.push_back(episode_result_from_json(nlohmann::json::parse(dumps(e).cast<std::string>())));
        }
        return to_python(to_json(compute_rates(results)));
      },
      py::arg("episodes"), "RC / VCR / LCR over episode dicts with ticks, flag lists and status booleans.");

  m.def(
      "load_configs",
      [](const std::filesystem::path& path) {
        py::list out;
        for (const auto& c : load_configs(path)) out.append(to_python(to_json(c)));
        return out;
      },
      py::arg("path"));

  m.def(
      "run_episode",
      [](const std::filesystem::path& config, const std::optional<std::filesystem::path>& out_dir,
         std::size_t index) {
        const auto configs = load_configs(config);
        if (index >= configs.size()) throw Error(ErrorCode::kConfig, "episode index out of range");
        DrivingLog log;
        {
          py::gil_scoped_release release;
          log = run_episode(configs[index]);
          if (out_dir) write_log(log, *out_dir);
        }
        py::dict d;
        d["name"] = configs[index].name;
        d["status"] = log.status;
        d["ticks"] = log.result.ticks;
        d["frames"] = log.frames.size();
        d["metrics"] = to_python(episode_metrics_json(log));
        d["speeds"] = [&] {
          std::vector<double> v;
          for (const auto& s : log.states) v.push_back(s.ego.v);
          return v;
        }();
        if (out_dir) d["log_hash"] = log_hash(*out_dir);
        return d;
      },
      py::arg("config"), py::arg("out_dir") = std::nullopt, py::arg("index") = 0);

  m.def(
      "generate_dataset",
      [](const std::filesystem::path& config, const std::filesystem::path& out_dir, int workers) {
        Manifest manifest;
        {
          py::gil_scoped_release release;
          manifest = generate_dataset(load_configs(config), out_dir, workers);
        }
        return to_python(to_json(manifest));
      },
      py::arg("config"), py::arg("out_dir"), py::arg("workers") = 1);

  m.def(
      "metrics_from_logs", [](const std::filesystem::path& root) { return to_python(to_json(metrics_from_logs(root))); },
      py::arg("root"));
}
