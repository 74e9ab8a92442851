#include "spinn/commands.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "spinn/plot.hpp"

namespace spinn {

namespace fs = std::filesystem;

int exit_code_for(const Error& e) noexcept {
  switch (e.category()) {
    case Error::Category::Usage: return kExitUsage;
    case Error::Category::Data: return kExitData;
    case Error::Category::Numerical: return kExitNumerical;
  }
  return kExitFailure;
}

namespace {

bool on_grid(double t, double t0, double interval, std::size_t& k) {
  const double x = (t - t0) / interval;
  const double r = std::round(x);
  if (r < 0.0 || std::abs(x - r) > 1e-6) return false;
  k = static_cast<std::size_t>(r);
  return true;
}

void require_grid_match(const ObservationSeries& obs, const ExperimentConfig& cfg) {
  if (obs.partition.pool * obs.partition.n_low != cfg.nx) {
    throw IncompatibleGrid("observations are " + std::to_string(obs.partition.n_low) + " blocks of " +
                           std::to_string(obs.partition.pool) + " nodes, config grid is " +
                           std::to_string(cfg.nx));
  }
}

}  // namespace

Dataset dataset_for(const ObservationSeries& obs, const ExperimentConfig& cfg) {
  obs.validate();
  require_grid_match(obs, cfg);
  steps_per_frame(obs.sample_interval, cfg.dt);
  const double tol = 1e-9 * std::max(1.0, cfg.predict_t1);
  ObservationSeries span = obs;
  span.frames.clear();
  bool first = true;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const double t = obs.time(k);
    if (t < cfg.train_t0 - tol || t > cfg.predict_t1 + tol) continue;
    if (first) span.t0 = t;
    first = false;
    span.frames.push_back(obs.frames[k]);
  }
  if (span.frames.empty()) throw ShapeMismatch("observations do not cover the configured spans");
  const double last = span.time(span.size() - 1);
  if (last < cfg.predict_t1 - obs.sample_interval / 2) {
    throw ShapeMismatch("observations end at t=" + std::to_string(last) + ", before T=" +
                        std::to_string(cfg.predict_t1));
  }
  return split_dataset(span, cfg.train_t1);
}

std::vector<VectorField> align_snapshots(const SnapshotData& data, double t0, double interval,
                                         std::size_t count) {
  if (data.frames.empty()) throw ShapeMismatch("snapshot file is empty");
  std::vector<VectorField> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t0 + static_cast<double>(k) * interval;
    std::size_t idx = 0;
    if (!on_grid(t, data.t0, data.interval(), idx) || idx >= data.frames.size()) {
      throw ShapeMismatch("reference has no snapshot at t=" + std::to_string(t));
    }
    out.push_back(data.frames[idx]);
  }
  return out;
}

SnapshotData cmd_generate(const ExperimentConfig& cfg) {
  cfg.validate();
  const SolverConfig solver = cfg.solver();
  const VectorField z0 = make_initial_condition(cfg.grid(), cfg.ic_scale);
  return SnapshotData::from(run(z0, solver, cfg.total_steps()));
}

ObservationSeries cmd_observe(const SnapshotData& traj, int pool, double noise_bound,
                              std::uint64_t seed) {
  if (traj.frames.empty()) throw ShapeMismatch("trajectory is empty");
  const PartitionSpec part = PartitionSpec::for_grid(traj.frames.front().grid(), pool);
  ObservationSeries obs;
  obs.partition = part;
  obs.t0 = traj.t0;
  obs.sample_interval = traj.interval();
  obs.frames.reserve(traj.frames.size());
  for (const auto& f : traj.frames) obs.frames.push_back(pool_average(f, part));
  if (noise_bound > 0.0) return add_bounded_noise(obs, noise_bound, seed);
  if (noise_bound < 0.0) throw InvalidArgument("noise bound must be >= 0");
  return obs;
}

TrainResult cmd_train(const ExperimentConfig& cfg, const ObservationSeries& obs) {
  cfg.validate();
  return train(dataset_for(obs, cfg), cfg.setup(), cfg.train_config());
}

SnapshotData cmd_predict(const SpinnParams& params, const ExperimentConfig& cfg,
                         const ObservationSeries& obs) {
  cfg.validate();
  const Dataset d = dataset_for(obs, cfg);
  SnapshotData out;
  out.frames = predict(params, cfg.setup(), cfg.gamma, d.predict, cfg.init);
  out.dt = cfg.dt;
  out.save_stride = steps_per_frame(d.predict.sample_interval, cfg.dt);
  out.t0 = d.predict.t0;
  return out;
}

ErrorCurve cmd_evaluate(const SnapshotData& prediction, const SnapshotData& reference) {
  const auto ref = align_snapshots(reference, prediction.t0, prediction.interval(), prediction.frames.size());
  return make_error_curve(ref, prediction.frames, prediction.t0, prediction.interval());
}

ErrorCurve cmd_baseline(const ObservationSeries& obs, const SnapshotData& reference,
                        const ExperimentConfig& cfg) {
  const Dataset d = dataset_for(obs, cfg);
  const auto ref = align_snapshots(reference, d.predict.t0, d.predict.sample_interval, d.predict.size());
  const auto bc = bicubic_baseline(d.predict, ref.front().grid());
  return make_error_curve(ref, bc, d.predict.t0, d.predict.sample_interval);
}

SweepResult cmd_sweep(const ExperimentConfig& cfg, const ObservationSeries& obs,
                      const std::optional<SnapshotData>& reference) {
  cfg.validate();
  const Dataset d = dataset_for(obs, cfg);
  std::vector<VectorField> ref;
  if (reference) ref = align_snapshots(*reference, d.predict.t0, d.predict.sample_interval, d.predict.size());
  return gamma_sweep(d, cfg.gammas, cfg.setup(), cfg.train_config(), ref);
}

// --- command line -------------------------------------------------------------

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<double> gammas;
  bool desk = false;
};

ExperimentConfig resolve(const Common& c) {
  const ExperimentConfig base = c.desk ? ExperimentConfig::desk_scale() : ExperimentConfig::full_scale();
  ExperimentConfig cfg = c.config.empty() ? base : load_config(c.config, base);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.gammas.empty()) {
    cfg.gammas = c.gammas;
    cfg.gamma = c.gammas.front();
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool needs_out) {
  app->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "random seed");
  auto* out = app->add_option("--out", c.out, "output path");
  if (needs_out) out->required();
  app->add_option("--gamma", c.gammas, "observer gain(s), comma separated")->delimiter(',');
  app->add_flag("--desk-scale", c.desk, "start from the desk-scale defaults");
}

double summary_error(const ErrorCurve& c) { return window_mean(c.eps1, 0.2, 1.0); }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Super-resolution of 2D turbulent flow from averaged observations", "spinn"};
  app.require_subcommand(1);

  Common c;
  std::string input, obs_path, model_path, reference_path, prediction_path, report_path;
  std::vector<std::string> csvs, labels;
  int pool = 0;
  double noise = -1.0;
  std::size_t frame = 0;
  int component = 1;

  auto* gen = app.add_subcommand("generate", "run the reference solver and write snapshots");
  add_common(gen, c, true);

  auto* obs = app.add_subcommand("observe", "block-average snapshots into observations");
  add_common(obs, c, true);
  obs->add_option("--input", input, "snapshot file")->required()->check(CLI::ExistingFile);
  obs->add_option("--pool", pool, "block size in nodes (default from config)");
  obs->add_option("--noise", noise, "uniform noise bound (default from config)");

  auto* tr = app.add_subcommand("train", "train a SPINN on the training span");
  add_common(tr, c, true);
  tr->add_option("--obs", obs_path, "observation file")->required()->check(CLI::ExistingFile);
  tr->add_option("--report", report_path, "training report (JSON)");

  auto* pr = app.add_subcommand("predict", "predict high-resolution snapshots over the prediction span");
  add_common(pr, c, true);
  pr->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  pr->add_option("--obs", obs_path, "observation file")->required()->check(CLI::ExistingFile);

  auto* ev = app.add_subcommand("evaluate", "relative errors of a prediction against a reference");
  add_common(ev, c, true);
  ev->add_option("--prediction", prediction_path, "predicted snapshots")->required()->check(CLI::ExistingFile);
  ev->add_option("--reference", reference_path, "reference snapshots")->required()->check(CLI::ExistingFile);

  auto* bl = app.add_subcommand("baseline", "relative errors of bicubic upsampling");
  add_common(bl, c, true);
  bl->add_option("--obs", obs_path, "observation file")->required()->check(CLI::ExistingFile);
  bl->add_option("--reference", reference_path, "reference snapshots")->required()->check(CLI::ExistingFile);

  auto* pl = app.add_subcommand("plot", "error curves (SVG) or a field triptych (PPM)");
  add_common(pl, c, true);
  pl->add_option("--csv", csvs, "error curve CSV files");
  pl->add_option("--label", labels, "legend labels, one per CSV");
  pl->add_option("--reference", reference_path, "reference snapshots (triptych)");
  pl->add_option("--obs", obs_path, "observation file (triptych)");
  pl->add_option("--prediction", prediction_path, "predicted snapshots (triptych)");
  pl->add_option("--frame", frame, "prediction frame index (triptych)");
  pl->add_option("--component", component, "velocity component 1 or 2")->check(CLI::Range(1, 2));

  auto* sw = app.add_subcommand("sweep", "train one model per gamma and select by observation misfit");
  add_common(sw, c, true);
  sw->add_option("--obs", obs_path, "observation file")->required()->check(CLI::ExistingFile);
  sw->add_option("--reference", reference_path, "reference snapshots, for reporting errors only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = resolve(c);
      write_snapshots(c.out, cmd_generate(cfg));
      out << "wrote " << c.out << "\n";
    } else if (obs->parsed()) {
      const ExperimentConfig cfg = resolve(c);
      const SnapshotData traj = read_snapshots(input);
      write_observations(c.out, cmd_observe(traj, pool > 0 ? pool : cfg.pool,
                                            noise >= 0.0 ? noise : cfg.noise_bound, cfg.seed));
      out << "wrote " << c.out << "\n";
    } else if (tr->parsed()) {
      const ExperimentConfig cfg = resolve(c);
      const TrainResult r = cmd_train(cfg, read_observations(obs_path));
      write_model(c.out, r.params);
      if (!report_path.empty()) atomic_write(report_path, report_to_json(r.report));
      out << "probe loss " << r.report.probe_loss_initial << " -> " << r.report.probe_loss_final
          << " in " << r.report.wall_seconds << " s\n";
    } else if (pr->parsed()) {
      const ExperimentConfig cfg = resolve(c);
      const SpinnParams params = read_model(model_path);
      write_snapshots(c.out, cmd_predict(params, cfg, read_observations(obs_path)));
      out << "wrote " << c.out << "\n";
    } else if (ev->parsed()) {
      const ErrorCurve curve = cmd_evaluate(read_snapshots(prediction_path), read_snapshots(reference_path));
      atomic_write(c.out, curve_to_csv(curve));
      out << "averaged eps_1 " << summary_error(curve) << "\n";
    } else if (bl->parsed()) {
      const ExperimentConfig cfg = resolve(c);
      const ErrorCurve curve = cmd_baseline(read_observations(obs_path), read_snapshots(reference_path), cfg);
      atomic_write(c.out, curve_to_csv(curve));
      out << "bicubic averaged eps_1 " << summary_error(curve) << "\n";
    } else if (pl->parsed()) {
      if (!csvs.empty()) {
        if (!labels.empty() && labels.size() != csvs.size()) {
          throw InvalidArgument("give one --label per --csv");
        }
        std::vector<LabelledCurve> curves;
        for (std::size_t i = 0; i < csvs.size(); ++i) {
          const auto bytes = read_file(csvs[i]);
          curves.push_back({labels.empty() ? fs::path(csvs[i]).stem().string() : labels[i],
                            curve_from_csv(std::string(bytes.begin(), bytes.end()))});
        }
        atomic_write(c.out, error_curves_svg(curves, component));
      } else {
        if (reference_path.empty() || obs_path.empty() || prediction_path.empty()) {
          throw InvalidArgument("plot needs --csv, or --reference, --obs and --prediction");
        }
        const SnapshotData pred = read_snapshots(prediction_path);
        if (frame >= pred.frames.size()) throw InvalidArgument("--frame is past the last prediction");
        const double t = pred.time(frame);
        const auto ref = align_snapshots(read_snapshots(reference_path), t, pred.interval(), 1);
        const ObservationSeries o = read_observations(obs_path);
        std::size_t k = 0;
        const double x = (t - o.t0) / o.sample_interval;
        k = static_cast<std::size_t>(std::llround(x));
        if (x < -1e-6 || std::abs(x - std::round(x)) > 1e-6 || k >= o.size()) {
          throw ShapeMismatch("no observation at t=" + std::to_string(t));
        }
        atomic_write(c.out, heatmap_triptych_ppm(ref.front(), o.frames[k], pred.frames[frame], component));
      }
      out << "wrote " << c.out << "\n";
    } else if (sw->parsed()) {
      const ExperimentConfig cfg = resolve(c);
      std::optional<SnapshotData> ref;
      if (!reference_path.empty()) ref = read_snapshots(reference_path);
      const SweepResult r = cmd_sweep(cfg, read_observations(obs_path), ref);
      fs::create_directories(c.out);
      for (std::size_t i = 0; i < r.models.size(); ++i) {
        std::ostringstream name;
        name << "model_gamma_" << cfg.gammas[i] << ".spmd";
        write_model(fs::path(c.out) / name.str(), r.models[i].params);
      }
      atomic_write(fs::path(c.out) / "report.json", report_to_json(r.report));
      for (const auto& g : r.report.gammas) {
        out << "gamma " << g.gamma << " misfit " << g.selection_misfit;
        if (g.averaged_error) out << " eps " << *g.averaged_error;
        out << "\n";
      }
      out << "selected gamma " << *r.report.selected_gamma << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace spinn
