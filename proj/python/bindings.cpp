#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spinn/commands.hpp"
#include "spinn/config.hpp"
#include "spinn/io.hpp"
#include "spinn/poisson.hpp"
#include "spinn/simulate.hpp"
#include "spinn/train.hpp"

namespace py = pybind11;
using namespace spinn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (n, 2, m, m) array from per-frame component vectors.
template <class Frames, class Get>
Array stack(const Frames& frames, int m, Get get) {
  const auto n = static_cast<py::ssize_t>(frames.size());
  Array out({n, py::ssize_t{2}, py::ssize_t{m}, py::ssize_t{m}});
  double* dst = out.mutable_data();
  const std::size_t plane = static_cast<std::size_t>(m) * m;
  for (const auto& f : frames) {
    for (int c = 0; c < 2; ++c) {
      const double* src = get(f, c);
      std::memcpy(dst, src, plane * sizeof(double));
      dst += plane;
    }
  }
  return out;
}

// Checks an (n, 2, m, m) array and returns m.
int frame_side(const Array& a) {
  if (a.ndim() != 4 || a.shape(1) != 2 || a.shape(2) != a.shape(3)) {
    throw ShapeMismatch("expected an array of shape (frames, 2, n, n)");
  }
  return static_cast<int>(a.shape(2));
}

Array snapshot_frames(const SnapshotData& d) {
  const int n = d.frames.empty() ? 0 : d.frames.front().grid().n();
  return stack(d.frames, n, [](const VectorField& v, int c) { return v.component(c + 1).values().data(); });
}

SnapshotData make_snapshots(const Array& frames, double dt, int save_stride, double t0) {
  const int n = frame_side(frames);
  const Grid2D g(n);
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  SnapshotData d;
  d.dt = dt;
  d.save_stride = save_stride;
  d.t0 = t0;
  const double* src = frames.data();
  for (py::ssize_t k = 0; k < frames.shape(0); ++k) {
    std::vector<double> a(src, src + plane), b(src + plane, src + 2 * plane);
    d.frames.emplace_back(ScalarField(g, std::move(a)), ScalarField(g, std::move(b)));
    src += 2 * plane;
  }
  return d;
}

Array observation_frames(const ObservationSeries& o) {
  return stack(o.frames, o.partition.n_low, [](const LowResFrame& f, int c) { return f.values[c].data(); });
}

ObservationSeries make_observations(const Array& frames, int pool, double t0, double interval,
                                    double noise_bound) {
  const int m = frame_side(frames);
  const std::size_t plane = static_cast<std::size_t>(m) * m;
  ObservationSeries o;
  o.partition = {pool, m};
  o.t0 = t0;
  o.sample_interval = interval;
  o.noise_bound = noise_bound;
  const double* src = frames.data();
  for (py::ssize_t k = 0; k < frames.shape(0); ++k) {
    LowResFrame f(m);
    f.values[0].assign(src, src + plane);
    f.values[1].assign(src + plane, src + 2 * plane);
    o.frames.push_back(std::move(f));
    src += 2 * plane;
  }
  o.validate();
  return o;
}

py::dict curve_dict(const ErrorCurve& c) {
  py::dict d;
  d["t"] = Array(static_cast<py::ssize_t>(c.t.size()), c.t.data());
  d["eps_1"] = Array(static_cast<py::ssize_t>(c.eps1.size()), c.eps1.data());
  d["eps_2"] = Array(static_cast<py::ssize_t>(c.eps2.size()), c.eps2.data());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Super-resolution of 2D turbulent flow from block-averaged observations";

  static py::exception<Error> base_error(m, "SpinnError", PyExc_RuntimeError);
  static py::exception<Error> usage_error(m, "UsageError", base_error.ptr());
  static py::exception<Error> data_error(m, "DataError", base_error.ptr());
  static py::exception<Error> numerical_error(m, "NumericalError", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.category()) {
        case Error::Category::Usage: PyErr_SetString(usage_error.ptr(), e.what()); return;
        case Error::Category::Data: PyErr_SetString(data_error.ptr(), e.what()); return;
        case Error::Category::Numerical: PyErr_SetString(numerical_error.ptr(), e.what()); return;
      }
      PyErr_SetString(base_error.ptr(), e.what());
    }
  });

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_static("full_scale", &ExperimentConfig::full_scale)
      .def_static("desk_scale", &ExperimentConfig::desk_scale)
      .def_static(
          "from_json",
          [](const std::string& text, std::optional<ExperimentConfig> base) {
            return parse_config(text, base.value_or(ExperimentConfig::full_scale()));
          },
          py::arg("text"), py::arg("base") = py::none())
      .def("to_json", &config_to_json)
      .def("validate", &ExperimentConfig::validate)
      .def_readwrite("nu", &ExperimentConfig::nu)
      .def_readwrite("dt", &ExperimentConfig::dt)
      .def_readwrite("nx", &ExperimentConfig::nx)
      .def_readwrite("pool", &ExperimentConfig::pool)
      .def_readwrite("gamma", &ExperimentConfig::gamma)
      .def_readwrite("lambda_", &ExperimentConfig::lambda)
      .def_readwrite("train_t0", &ExperimentConfig::train_t0)
      .def_readwrite("train_t1", &ExperimentConfig::train_t1)
      .def_readwrite("predict_t1", &ExperimentConfig::predict_t1)
      .def_readwrite("learning_rate", &ExperimentConfig::learning_rate)
      .def_readwrite("batch_windows", &ExperimentConfig::batch_windows)
      .def_readwrite("window_len", &ExperimentConfig::window_len)
      .def_readwrite("steps", &ExperimentConfig::steps)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("output_gain", &ExperimentConfig::output_gain)
      .def_readwrite("known_forcing", &ExperimentConfig::known_forcing)
      .def_readwrite("save_stride", &ExperimentConfig::save_stride)
      .def_readwrite("ic_scale", &ExperimentConfig::ic_scale)
      .def_readwrite("noise_bound", &ExperimentConfig::noise_bound)
      .def_readwrite("channels", &ExperimentConfig::channels)
      .def_readwrite("gammas", &ExperimentConfig::gammas)
      .def("__repr__", [](const ExperimentConfig& c) { return "Config(" + config_to_json(c) + ")"; });

  py::class_<SnapshotData>(m, "Snapshots")
      .def(py::init(&make_snapshots), py::arg("frames"), py::arg("dt"), py::arg("save_stride"),
           py::arg("t0") = 0.0)
      .def_property_readonly("frames", &snapshot_frames)
      .def_readonly("dt", &SnapshotData::dt)
      .def_readonly("save_stride", &SnapshotData::save_stride)
      .def_readonly("t0", &SnapshotData::t0)
      .def_property_readonly("interval", &SnapshotData::interval)
      .def("__len__", [](const SnapshotData& d) { return d.frames.size(); })
      .def("save", [](const SnapshotData& d, const std::filesystem::path& p) { write_snapshots(p, d); })
      .def_static("load", &read_snapshots)
      .def("__eq__", [](const SnapshotData& a, const SnapshotData& b) {
        return encode_snapshots(a) == encode_snapshots(b);
      });

  py::class_<ObservationSeries>(m, "Observations")
      .def(py::init(&make_observations), py::arg("frames"), py::arg("pool"), py::arg("t0"),
           py::arg("interval"), py::arg("noise_bound") = 0.0)
      .def_property_readonly("frames", &observation_frames)
      .def_readonly("t0", &ObservationSeries::t0)
      .def_readonly("interval", &ObservationSeries::sample_interval)
      .def_readonly("noise_bound", &ObservationSeries::noise_bound)
      .def_property_readonly("pool", [](const ObservationSeries& o) { return o.partition.pool; })
      .def("__len__", &ObservationSeries::size)
      .def("save", [](const ObservationSeries& o, const std::filesystem::path& p) { write_observations(p, o); })
      .def_static("load", &read_observations);

  py::class_<SpinnParams>(m, "Model")
      .def_property_readonly("weights",
                             [](const SpinnParams& p) {
                               return Array(static_cast<py::ssize_t>(p.weights.size()), p.weights.data());
                             })
      .def_property_readonly("channels", [](const SpinnParams& p) { return p.spec.channels; })
      .def_readonly("seed", &SpinnParams::seed)
      .def("save", [](const SpinnParams& p, const std::filesystem::path& path) { write_model(path, p); })
      .def_static("load", &read_model)
      .def("__eq__", [](const SpinnParams& a, const SpinnParams& b) { return a == b; });

  m.def("generate", &cmd_generate, py::arg("config"), py::call_guard<py::gil_scoped_release>(),
        "Reference trajectory over [0, T].");
  m.def("observe", &cmd_observe, py::arg("snapshots"), py::arg("pool"), py::arg("noise_bound") = 0.0,
        py::arg("seed") = 0, "Block averages of every snapshot, with optional bounded noise.");
  m.def(
      "train",
      [](const ExperimentConfig& cfg, const ObservationSeries& obs) {
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = cmd_train(cfg, obs);
        }
        return py::make_tuple(r.params, report_to_json(r.report));
      },
      py::arg("config"), py::arg("observations"),
      "Trains on the training span; returns (model, report as JSON text).");
  m.def("predict", &cmd_predict, py::arg("model"), py::arg("config"), py::arg("observations"),
        py::call_guard<py::gil_scoped_release>(), "High-resolution states over the prediction span.");
  m.def(
      "evaluate", [](const SnapshotData& p, const SnapshotData& r) { return curve_dict(cmd_evaluate(p, r)); },
      py::arg("prediction"), py::arg("reference"), "Relative errors per frame: dict of t, eps_1, eps_2.");
  m.def(
      "baseline",
      [](const ObservationSeries& o, const SnapshotData& r, const ExperimentConfig& c) {
        return curve_dict(cmd_baseline(o, r, c));
      },
      py::arg("observations"), py::arg("reference"), py::arg("config"),
      "Bicubic-upsampling errors over the prediction span.");
  m.def(
      "sweep",
      [](const ExperimentConfig& cfg, const ObservationSeries& obs, std::optional<SnapshotData> ref) {
        SweepResult s;
        {
          py::gil_scoped_release release;
          s = cmd_sweep(cfg, obs, ref);
        }
        std::vector<SpinnParams> models;
        for (auto& r : s.models) models.push_back(std::move(r.params));
        return py::make_tuple(models, report_to_json(s.report), s.selected);
      },
      py::arg("config"), py::arg("observations"), py::arg("reference") = py::none(),
      "One model per gamma in config.gammas; returns (models, report JSON, selected index).");
  m.def(
      "feasibility",
      [](double nu, double h2) {
        const FeasibilityReport r = gamma_feasibility(nu, h2);
        py::dict d;
        d["h2_configured"] = r.h2_configured;
        d["h2_required"] = r.h2_required;
        d["feasible"] = r.feasible;
        d["min_blocks_per_side"] = r.min_blocks_per_side;
        d["summary"] = r.summary;
        return d;
      },
      py::arg("nu"), py::arg("h2"), "Partition-size check for observer convergence.");
  m.def(
      "solve_poisson",
      [](const Array& rhs, double tol) {
        if (rhs.ndim() != 2 || rhs.shape(0) != rhs.shape(1)) throw ShapeMismatch("rhs must be square");
        const int n = static_cast<int>(rhs.shape(0));
        const Grid2D g(n);
        ScalarField f(g, std::vector<double>(rhs.data(), rhs.data() + rhs.size()));
        const PoissonSolution sol = solve_neumann_poisson(f, tol);
        Array p({py::ssize_t{n}, py::ssize_t{n}});
        std::memcpy(p.mutable_data(), sol.p.values().data(), static_cast<std::size_t>(n) * n * sizeof(double));
        return py::make_tuple(p, sol.residual_norm);
      },
      py::arg("rhs"), py::arg("tol") = 1e-10,
      "Zero-mean solution of the Neumann pressure equation on the cell-centred grid.");
  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full = {"spinn"};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one command line; returns (exit code, stdout, stderr).");
}
