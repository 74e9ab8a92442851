// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.
//
//   spinn_acceptance [N ...]     run the listed criteria (default: all)

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracle.hpp"
#include "spinn/commands.hpp"
#include "spinn/config.hpp"
#include "spinn/io.hpp"
#include "spinn/spinn.hpp"
#include "spinn/train.hpp"

using namespace spinn;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// --- shared desk-scale experiment for criteria 7 to 9 --------------------------

struct Evaluation {
  double averaged = 0.0;     // averaged eps_1 after burn-in
  double averaged_2 = 0.0;   // same for eps_2, reported only
  double initial = 0.0;      // mean eps_1 over the first 20% of the span
  double final_window = 0.0; // mean eps_1 over the last 20%
  double misfit = 0.0;
};

double selected_gamma(const SweepResult& s) { return s.report.gammas.at(s.selected).gamma; }

struct DeskExperiment {
  ExperimentConfig cfg = ExperimentConfig::desk_scale();
  Dataset dataset;
  std::vector<VectorField> reference;
  double bicubic = 0.0;
  double bicubic_2 = 0.0;

  std::optional<SweepResult> sweep;
  double sweep_seconds = 0.0;

  DeskExperiment() {
    const auto t = Clock::now();
    const SnapshotData traj = cmd_generate(cfg);
    const ObservationSeries obs = cmd_observe(traj, cfg.pool, cfg.noise_bound, cfg.seed);
    dataset = dataset_for(obs, cfg);
    reference = align_snapshots(traj, dataset.predict.t0, dataset.predict.sample_interval,
                                dataset.predict.size());
    const auto bc = bicubic_baseline(dataset.predict, cfg.grid());
    bicubic = averaged_prediction_error(reference, bc, 0.2, 1);
    bicubic_2 = averaged_prediction_error(reference, bc, 0.2, 2);
    std::printf("setup: desk-scale data, %zu training and %zu prediction frames, bicubic eps_1 %.4f "
                "eps_2 %.4f (%.1f s)\n",
                dataset.train.size(), dataset.predict.size(), bicubic, bicubic_2, seconds_since(t));
    std::fflush(stdout);
  }

  Evaluation evaluate(const SpinnParams& params, const SpinnSetup& setup, double gamma) const {
    const auto states = predict(params, setup, gamma, dataset.predict, cfg.init);
    const auto curve = error_curve(reference, states, 1);
    Evaluation e;
    e.averaged = averaged_prediction_error(reference, states, 0.2, 1);
    e.averaged_2 = averaged_prediction_error(reference, states, 0.2, 2);
    e.initial = window_mean(curve, 0.0, 0.2);
    e.final_window = window_mean(curve, 0.8, 1.0);
    e.misfit = observation_misfit(states, dataset.predict);
    return e;
  }

  TrainResult train_at(const Dataset& d, double gamma, bool known_forcing) const {
    SpinnSetup setup = cfg.setup();
    setup.known_forcing = known_forcing;
    TrainConfig tc = cfg.train_config();
    tc.gamma = gamma;
    return train(d, setup, tc);
  }

  const SweepResult& tuned() {
    if (!sweep) {
      const auto t = Clock::now();
      sweep = gamma_sweep(dataset, cfg.gammas, cfg.setup(), cfg.train_config(), reference);
      sweep_seconds = seconds_since(t);
      for (const auto& g : sweep->report.gammas) {
        std::printf("  sweep gamma %g: misfit %.4g, averaged eps_1 %.4f\n", g.gamma,
                    g.selection_misfit, g.averaged_error.value_or(NAN));
      }
      std::printf("  sweep selected gamma %g (%.0f s)\n", selected_gamma(*sweep), sweep_seconds);
      std::fflush(stdout);
    }
    return *sweep;
  }

  double tuned_gamma() { return selected_gamma(tuned()); }
};

DeskExperiment& desk() {
  static DeskExperiment d;
  return d;
}

std::string describe(const Evaluation& e) {
  return fmt("eps_1 %.4f (eps_2 %.4f), initial %.4f, final %.4f", e.averaged, e.averaged_2, e.initial,
             e.final_window);
}

// --- criteria ------------------------------------------------------------------

Outcome stencil_order() {
  auto errors = [](int n) {
    const Grid2D g(n);
    const auto f = ScalarField::from_function(g, [](double a, double b) { return std::sin(a) * std::sin(b); });
    const VectorField v(f, f);
    const auto div_exact = ScalarField::from_function(
        g, [](double a, double b) { return std::cos(a) * std::sin(b) + std::sin(a) * std::cos(b); });
    const auto lap_exact =
        ScalarField::from_function(g, [](double a, double b) { return -2.0 * std::sin(a) * std::sin(b); });
    return std::pair{test::max_interior_error(divergence(v), div_exact),
                     test::max_interior_error(laplacian(f), lap_exact)};
  };
  const auto [d32, l32] = errors(32);
  const auto [d64, l64] = errors(64);
  const double rd = d32 / d64, rl = l32 / l64;
  const bool ok = rd >= 3.5 && rd <= 4.5 && rl >= 3.5 && rl <= 4.5;
  return {ok, fmt("error ratio 32->64: divergence %.3f, laplacian %.3f (need [3.5, 4.5])", rd, rl)};
}

Outcome poisson_manufactured() {
  auto solve = [](int n) {
    const Grid2D g(n);
    const auto rhs = ScalarField::from_function(g, [](double a, double b) { return -2.0 * std::cos(a) * std::cos(b); });
    auto exact = ScalarField::from_function(g, [](double a, double b) { return std::cos(a) * std::cos(b); });
    const double m = mean(exact);
    for (auto& v : exact.values()) v -= m;
    const auto sol = solve_neumann_poisson(rhs);
    return std::pair{max_abs(sol.p - exact), sol.residual_norm};
  };
  const auto [e32, r32] = solve(32);
  const auto [e64, r64] = solve(64);
  const double ratio = e32 / e64;
  const bool ok = ratio >= 3.5 && ratio <= 4.5 && r32 <= 1e-8 && r64 <= 1e-8;
  return {ok, fmt("error 32: %.3e, 64: %.3e, ratio %.3f (need [3.5, 4.5]); residual %.2e (need <= 1e-8)",
                  e32, e64, ratio, std::max(r32, r64))};
}

// Regression bound frozen at the first verified implementation; the unit
// suite pins the same value.
constexpr double kFrozenDivergenceBound = 0.0363;

Outcome projection() {
  const ExperimentConfig cfg = ExperimentConfig::desk_scale();
  const Grid2D g = cfg.grid();
  const SolverConfig solver = cfg.solver();
  const auto z0 = make_initial_condition(g, cfg.ic_scale);
  const double div1 = l2_norm(divergence(step_reference(z0, solver)));

  // Oracle comparison on 8 x 8 for a reference and an observer step.
  const Grid2D g8(8);
  SolverConfig c8;
  c8.dt = 0.01;
  c8.nu = 0.05;
  c8.gamma = 5.0;
  c8.poisson_tol = 1e-12;
  VectorField z = test::random_vector(g8, 31);
  z *= 0.5;
  zero_boundary(z);
  const auto part = PartitionSpec::for_grid(g8, 2);
  const LowResFrame y = pool_average(test::random_vector(g8, 33), part);
  const VectorField f = make_forcing(c8.forcing, g8);
  const test::Oracle oracle{8, g8.dx()};
  const std::vector<double> zero(64, 0.0);
  auto max_diff = [](const VectorField& a, const std::vector<std::vector<double>>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < 64; ++k) {
      m = std::max({m, std::abs(a.c1()[k] - b[0][k]), std::abs(a.c2()[k] - b[1][k])});
    }
    return m;
  };
  SolverConfig plain = c8;
  plain.gamma = 0.0;
  const double e_ref = max_diff(step_reference(z, plain),
                                oracle.step(test::raw(z.c1()), test::raw(z.c2()), test::raw(f.c1()),
                                            test::raw(f.c2()), zero, zero, c8.nu, c8.dt));
  const VectorField F = innovation(z, y, c8.gamma, part);
  const double e_obs = max_diff(step_observer(z, y, c8, f),
                                oracle.step(test::raw(z.c1()), test::raw(z.c2()), test::raw(f.c1()),
                                            test::raw(f.c2()), test::raw(F.c1()), test::raw(F.c2()),
                                            c8.nu, c8.dt));
  const bool ok = div1 <= kFrozenDivergenceBound && e_ref <= 1e-12 && e_obs <= 1e-12;
  return {ok, fmt("||div z||_2 after one step %.6f (bound %.4f); oracle 8x8 max diff: reference %.2e, "
                  "observer %.2e (need <= 1e-12)",
                  div1, kFrozenDivergenceBound, e_ref, e_obs)};
}

Outcome observer_contraction() {
  const ExperimentConfig cfg = ExperimentConfig::desk_scale();
  const Grid2D g = cfg.grid();
  SolverConfig solver = cfg.solver();
  constexpr std::size_t kSteps = 2000;
  const auto truth = run(make_initial_condition(g, cfg.ic_scale), solver, kSteps, {.warn_cfl = false});
  ObservationSeries obs;
  obs.partition = PartitionSpec::for_grid(g, cfg.pool);
  obs.sample_interval = truth.interval();
  for (const auto& s : truth.snapshots) obs.frames.push_back(pool_average(s, obs.partition));
  // Wrong initial condition: the reversed vortex.
  const auto z0 = make_initial_condition(g, -cfg.ic_scale);

  auto end_error = [&](double gamma) {
    SolverConfig c = solver;
    c.gamma = gamma;
    RunOptions opt;
    opt.observations = obs;
    opt.warn_cfl = false;
    const auto est = run(z0, c, kSteps, opt);
    return relative_error(truth.snapshots.back(), est.snapshots.back(), 1);
  };
  const double e0 = end_error(0.0);
  std::string detail = fmt("eps_1 at step %zu: gamma 0 %.4f", kSteps, e0);
  double best = INFINITY, best_gamma = 0;
  for (double gamma : {2.0, 10.0, 100.0}) {
    const double e = end_error(gamma);
    detail += fmt(", gamma %g %.3e", gamma, e);
    if (e < best) {
      best = e;
      best_gamma = gamma;
    }
  }
  detail += fmt("; best gamma %g ratio %.3e (need <= 0.5)", best_gamma, best / e0);
  return {best <= 0.5 * e0, detail};
}

Outcome differentiability() {
  const Grid2D g(8);
  SolverConfig cfg;
  cfg.gamma = 10;
  cfg.dt = 0.01;
  const UNetSpec spec{2, 2, 3, {3, 4}};
  const SpinnModel model(g, cfg, spec);
  const auto params = SpinnParams::initialize(spec, 7);
  VectorField z0 = test::random_vector(g, 3);
  zero_boundary(z0);
  const auto part = PartitionSpec::for_grid(g, 2);
  std::vector<LowResFrame> frames;
  for (int k = 0; k < 4; ++k) frames.push_back(pool_average(test::random_vector(g, 10 + k), part));
  const Window w{frames, 1, 3};
  const double lambda = 0.1;
  const auto lg = model.loss_and_gradient(z0, w, params.weights, lambda);

  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> pick(0, params.weights.size() - 1);
  const double h = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t k = pick(rng);
    auto pp = params.weights, pm = params.weights;
    pp[k] += h;
    pm[k] -= h;
    const double fd =
        (loss(model.rollout(z0, w, pp), w, lambda) - loss(model.rollout(z0, w, pm), w, lambda)) / (2 * h);
    const double scale = std::max(std::abs(fd), std::abs(lg.grad[k]));
    const double rel = scale == 0.0 ? 0.0 : std::abs(fd - lg.grad[k]) / scale;
    worst = std::max(worst, rel);
  }
  return {worst <= 1e-4, fmt("3-step rollout on 8x8, 20 parameters: worst relative error %.3e (need <= 1e-4)", worst)};
}

Outcome oracle_h() {
  const ExperimentConfig desk_cfg = ExperimentConfig::desk_scale();
  const Grid2D g = desk_cfg.grid();
  SolverConfig cfg = desk_cfg.solver();
  cfg.gamma = 10;
  const ChorinStepper st(g, cfg);
  const Corrector oracle = [&](const VectorField& zs) { return st.pressure_correction(zs, st.forcing()); };
  const auto part = PartitionSpec::for_grid(g, desk_cfg.pool);
  double worst = 0.0;
  VectorField z = make_initial_condition(g, 1.0);
  for (int k = 0; k < 5; ++k) {
    const auto y = pool_average(test::random_vector(g, 40 + k), part);
    const auto a = spinn_step(z, &y, oracle, cfg);
    const auto b = st.step_observer(z, &y, st.forcing());
    worst = std::max({worst, max_abs(a.c1() - b.c1()), max_abs(a.c2() - b.c2())});
    z = b;
  }
  return {worst <= 1e-10, fmt("5 steps on %dx%d: max |SPINN(oracle H) - observer| %.3e (need <= 1e-10)",
                              g.n(), g.n(), worst)};
}

Outcome end_to_end(double& charged_seconds) {
  const auto t = Clock::now();
  DeskExperiment& d = desk();
  const SweepResult& sw = d.tuned();
  const double gamma = selected_gamma(sw);
  const Evaluation tuned = d.evaluate(sw.models[sw.selected].params, d.cfg.setup(), gamma);
  const TrainResult zero = d.train_at(d.dataset, 0.0, false);
  const Evaluation e0 = d.evaluate(zero.params, d.cfg.setup(), 0.0);
  charged_seconds = seconds_since(t);

  const bool below = tuned.averaged < d.bicubic;
  const bool grows = e0.final_window >= 2.0 * e0.initial;
  const bool plateau = tuned.final_window <= 1.5 * tuned.initial;
  const bool in_time = charged_seconds <= 30 * 60;
  std::string detail = fmt("tuned gamma %g: ", gamma) + describe(tuned) +
                       fmt(" | bicubic eps_1 %.4f | gamma 0 model: ", d.bicubic) + describe(e0) +
                       fmt(" | checks: tuned < bicubic %s, gamma-0 growth %.2fx (need >= 2) %s, tuned drift "
                           "%.2fx (need <= 1.5) %s, %.0f s (limit 1800) %s",
                           below ? "yes" : "no", e0.final_window / e0.initial, grows ? "yes" : "no",
                           tuned.final_window / tuned.initial, plateau ? "yes" : "no", charged_seconds,
                           in_time ? "yes" : "no");
  detail += fmt(" | ordering tuned < bicubic < gamma-0 end: %s",
                tuned.averaged < d.bicubic && d.bicubic < e0.final_window ? "holds" : "does not hold");
  return {below && grows && plateau && in_time, detail};
}

Outcome forcing_reconstruction(double earlier_seconds) {
  const auto t = Clock::now();
  DeskExperiment& d = desk();
  const SweepResult& sw = d.tuned();
  const double gamma = selected_gamma(sw);
  const Evaluation unknown = d.evaluate(sw.models[sw.selected].params, d.cfg.setup(), gamma);
  SpinnSetup known_setup = d.cfg.setup();
  known_setup.known_forcing = true;
  const TrainResult known_model = d.train_at(d.dataset, gamma, true);
  const Evaluation known = d.evaluate(known_model.params, known_setup, gamma);
  const double combined = earlier_seconds + seconds_since(t);
  const bool ok = unknown.averaged < d.bicubic && known.averaged < d.bicubic && combined <= 60 * 60;
  return {ok, fmt("gamma %g: unknown forcing eps_1 %.4f, known forcing eps_1 %.4f, bicubic %.4f; "
                  "with criterion 7 %.0f s (limit 3600)",
                  gamma, unknown.averaged, known.averaged, d.bicubic, combined)};
}

Outcome ablations() {
  DeskExperiment& d = desk();
  const double gamma = d.tuned_gamma();
  const auto t = Clock::now();
  const Dataset tail = ablate_dataset(d.dataset, AblationMode::TailFraction, 0.5);
  const Dataset stride = ablate_dataset(d.dataset, AblationMode::Stride, 2);
  const Evaluation et = d.evaluate(d.train_at(tail, gamma, false).params, d.cfg.setup(), gamma);
  const Evaluation es = d.evaluate(d.train_at(stride, gamma, false).params, d.cfg.setup(), gamma);
  const double secs = seconds_since(t);
  const bool ok = et.averaged < d.bicubic && es.averaged < d.bicubic && secs <= 30 * 60;
  return {ok, fmt("gamma %g: last 50%% (%zu frames) eps_1 %.4f, stride 2 (%zu frames) eps_1 %.4f, "
                  "bicubic %.4f; %.0f s (limit 1800)",
                  gamma, tail.train.size(), et.averaged, stride.train.size(), es.averaged, d.bicubic,
                  secs)};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("spinn_accept_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "spinn");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) throw std::runtime_error("spinn " + args[1] + " exited with " + std::to_string(code) + ": " + err.str());
  return code;
}

bool same_bits(const std::vector<VectorField>& a, const std::vector<VectorField>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (int c = 1; c <= 2; ++c) {
      const auto x = a[k].component(c).values(), y = b[k].component(c).values();
      if (std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) return false;
    }
  }
  return true;
}

bool same_frames(const ObservationSeries& a, const ObservationSeries& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (int c = 0; c < 2; ++c) {
      const auto& x = a.frames[k].values[c];
      const auto& y = b.frames[k].values[c];
      if (x.size() != y.size() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) return false;
    }
  }
  return true;
}

Outcome determinism_and_persistence() {
  TempDir tmp;
  const auto cfg = tmp.path / "cfg.json";
  atomic_write(cfg, std::string(R"({"grid": {"nx": 16}, "spans": {"train": [0, 0.4], "predict": [0.4, 0.5]},
      "unet": {"channels": [4, 8]},
      "training": {"steps": 4, "window_len": 10, "batch_windows": 2, "seed": 3}})"));
  auto pipeline = [&](const std::string& tag) {
    const fs::path dir = tmp.path / tag;
    fs::create_directories(dir);
    auto p = [&](const char* name) { return (dir / name).string(); };
    const std::vector<std::string> base = {"--desk-scale", "--config", cfg.string()};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
      head.insert(head.end(), base.begin(), base.end());
      head.insert(head.end(), tail.begin(), tail.end());
      return head;
    };
    cli(with({"generate"}, {"--out", p("ref.spnn")}));
    cli(with({"observe"}, {"--input", p("ref.spnn"), "--noise", "0.01", "--seed", "9", "--out", p("obs.spob")}));
    cli(with({"train"}, {"--obs", p("obs.spob"), "--out", p("m.spmd"), "--report", p("r.json")}));
    cli(with({"predict"}, {"--model", p("m.spmd"), "--obs", p("obs.spob"), "--out", p("pred.spnn")}));
    cli({"evaluate", "--prediction", p("pred.spnn"), "--reference", p("ref.spnn"), "--out", p("e.csv")});
    cli(with({"baseline"}, {"--obs", p("obs.spob"), "--reference", p("ref.spnn"), "--out", p("b.csv")}));
    return dir;
  };
  const fs::path a = pipeline("a");
  const fs::path b = pipeline("b");
  bool csv_same = true;
  for (const char* f : {"e.csv", "b.csv"}) csv_same = csv_same && read_file(a / f) == read_file(b / f);
  const bool model_same = read_file(a / "m.spmd") == read_file(b / "m.spmd");
  auto text = [](const fs::path& p) {
    const auto bytes = read_file(p);
    return std::string(bytes.begin(), bytes.end());
  };
  const bool report_same = report_from_json(text(a / "r.json")).same_results(report_from_json(text(b / "r.json")));

  // Bit-exact round trips of every file kind.
  const SnapshotData snaps = read_snapshots(a / "ref.spnn");
  const SnapshotData snaps2 = decode_snapshots(encode_snapshots(snaps));
  const bool snap_rt = same_bits(snaps.frames, snaps2.frames) && snaps.t0 == snaps2.t0 &&
                       snaps.dt == snaps2.dt && snaps.save_stride == snaps2.save_stride &&
                       encode_snapshots(snaps2) == read_file(a / "ref.spnn");
  const ObservationSeries obs = read_observations(a / "obs.spob");
  const ObservationSeries obs2 = decode_observations(encode_observations(obs));
  const bool obs_rt = same_frames(obs, obs2) && obs.t0 == obs2.t0 &&
                      obs.sample_interval == obs2.sample_interval && obs.noise_bound == obs2.noise_bound &&
                      encode_observations(obs2) == read_file(a / "obs.spob");
  const SpinnParams model = read_model(a / "m.spmd");
  const SpinnParams model2 = decode_model(encode_model(model));
  const bool model_rt = model == model2 && encode_model(model2) == read_file(a / "m.spmd");
  const ErrorCurve curve = curve_from_csv(text(a / "e.csv"));
  const bool csv_rt = curve_to_csv(curve) == text(a / "e.csv");
  const TrainReport report = report_from_json(text(a / "r.json"));
  const TrainReport report2 = report_from_json(report_to_json(report));
  const bool report_rt = report2.same_results(report) && report2.wall_seconds == report.wall_seconds;

  const bool ok = csv_same && model_same && report_same && snap_rt && obs_rt && model_rt && csv_rt && report_rt;
  auto yn = [](bool v) { return v ? "yes" : "no"; };
  return {ok, fmt("repeat runs: CSVs identical %s, models identical %s, reports equal %s; round trips: "
                  "snapshots %s, observations %s, model %s, CSV %s, report %s",
                  yn(csv_same), yn(model_same), yn(report_same), yn(snap_rt), yn(obs_rt), yn(model_rt),
                  yn(csv_rt), yn(report_rt))};
}

Outcome feasibility() {
  const Grid2D g(64);
  const auto r = gamma_feasibility(0.01, g, PartitionSpec::for_grid(g, 4));
  const double h52 = std::pow(2.0 * std::numbers::pi / 52.0, 2);
  const auto r52 = gamma_feasibility(0.01, h52);
  const bool h2_ok = std::abs(r.h2_required - 0.0155) <= 5e-5;
  const bool ok = !r.feasible && h2_ok && r52.feasible;
  return {ok, fmt("nu 0.01, 16x16 blocks: h^2 %.4f vs required %.4f, %s; 52x52 blocks (h^2 %.4f) %s; "
                  "smallest feasible partition %dx%d",
                  r.h2_configured, r.h2_required, r.feasible ? "feasible" : "infeasible", h52,
                  r52.feasible ? "feasible" : "infeasible", r.min_blocks_per_side, r.min_blocks_per_side)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long v = std::strtol(argv[i], &end, 10);
    if (*end != '\0' || v < 1 || v > 11) {
      std::fprintf(stderr, "usage: %s [criterion 1-11 ...]\n", argv[0]);
      return 2;
    }
    selected.insert(static_cast<int>(v));
  }
  if (selected.empty()) {
    for (int i = 1; i <= 11; ++i) selected.insert(i);
  }

  double end_to_end_seconds = 0.0;
  const std::vector<Criterion> criteria = {
      {1, "stencil order", 1, stencil_order},
      {2, "Poisson manufactured solution", 10, poisson_manufactured},
      {3, "projection", 1, projection},
      {4, "observer contraction", 300, observer_contraction},
      {5, "differentiability", 60, differentiability},
      {6, "oracle-H consistency", 10, oracle_h},
      // Criteria 7 to 9 check their own time budgets inside the outcome.
      {7, "end-to-end super resolution", 0, [&] { return end_to_end(end_to_end_seconds); }},
      {8, "forcing reconstruction", 0, [&] { return forcing_reconstruction(end_to_end_seconds); }},
      {9, "ablations", 0, ablations},
      {10, "determinism and persistence", 60, determinism_and_persistence},
      {11, "gamma feasibility", 1, feasibility},
  };

  int passed = 0, failed = 0;
  for (const auto& c : criteria) {
    if (!selected.contains(c.id)) continue;
    const auto t = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t);
    if (c.limit_seconds > 0 && secs > c.limit_seconds) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s limit", c.limit_seconds);
    }
    std::printf("criterion %2d %s: %s: %s (%.2f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    (o.pass ? passed : failed) += 1;
  }
  std::printf("acceptance: %d passed, %d failed\n", passed, failed);
  return failed == 0 ? 0 : 1;
}
