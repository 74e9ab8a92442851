#include "spinn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include "spinn/error.hpp"

namespace spinn {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, const AdamConfig& cfg) {
  if (params.size() != grads.size()) {
    throw ShapeMismatch("adam_step: " + std::to_string(params.size()) + " parameters, " +
                        std::to_string(grads.size()) + " gradients");
  }
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeMismatch("adam_step: moment size does not match parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

VectorField initial_state(const LowResFrame& frame, const Grid2D& grid, WindowInit init) {
  VectorField z = init == WindowInit::Bicubic ? bicubic_upsample(frame, grid)
                                               : lift(frame, grid, partition_for(grid, frame));
  zero_boundary(z);
  return z;
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (batch_windows < 1) throw InvalidArgument("batch_windows must be >= 1");
  if (window_len < 1) throw InvalidArgument("window_len must be >= 1");
  if (steps < 0) throw InvalidArgument("steps must be >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be >= 0");
  if (probe_windows < 1) throw InvalidArgument("probe_windows must be >= 1");
  if (!(output_gain >= 0.0)) throw InvalidArgument("output_gain must be >= 0");
}

SpinnModel SpinnSetup::model(double gamma) const {
  SolverConfig cfg = solver;
  cfg.gamma = gamma;
  const Grid2D grid(nx);
  std::optional<VectorField> f;
  if (known_forcing) f = make_forcing(cfg.forcing, grid);
  return SpinnModel(grid, cfg, unet, std::move(f));
}

void Dataset::validate() const {
  train.validate();
  predict.validate();
  if (train.partition.pool != predict.partition.pool ||
      train.partition.n_low != predict.partition.n_low) {
    throw ShapeMismatch("training and prediction observations use different partitions");
  }
  if (!train.frames.empty() && !predict.frames.empty()) {
    const double t1 = train.time(train.size() - 1);
    const double gap = predict.t0 - t1;
    const double tol = 1e-9 * std::max(1.0, std::abs(t1));
    if (gap <= 0.0) throw InvalidArgument("prediction span must start after the training span");
    if (std::abs(gap - predict.sample_interval) > tol && std::abs(gap - train.sample_interval) > tol) {
      throw InvalidArgument("training and prediction spans are not contiguous");
    }
  }
}

Dataset split_dataset(const ObservationSeries& all, double t1) {
  all.validate();
  Dataset d;
  d.train.partition = d.predict.partition = all.partition;
  d.train.sample_interval = d.predict.sample_interval = all.sample_interval;
  d.train.noise_bound = d.predict.noise_bound = all.noise_bound;
  d.train.t0 = all.t0;
  const double tol = 1e-9 * std::max(1.0, std::abs(t1));
  std::size_t k = 0;
  while (k < all.size() && all.time(k) <= t1 + tol) ++k;
  if (k == 0) throw InvalidArgument("training span is empty");
  if (k == all.size()) throw InvalidArgument("prediction span is empty");
  d.train.frames.assign(all.frames.begin(), all.frames.begin() + static_cast<std::ptrdiff_t>(k));
  d.predict.frames.assign(all.frames.begin() + static_cast<std::ptrdiff_t>(k), all.frames.end());
  d.predict.t0 = all.time(k);
  return d;
}

namespace {

// Frames a window of window_len steps touches: the start frame plus one per
// completed interval.
std::size_t frames_needed(int window_len, int spf) {
  return static_cast<std::size_t>(window_len / spf) + 1;
}

Window make_window(const ObservationSeries& obs, std::size_t start, int window_len, int spf) {
  Window w;
  w.steps_per_frame = spf;
  w.n_steps = static_cast<std::size_t>(window_len);
  const std::size_t count = std::min(frames_needed(window_len, spf), obs.size() - start);
  w.frames = std::span<const LowResFrame>(obs.frames).subspan(start, count);
  return w;
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

int worker_threads(int requested) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  int n = requested > 0 ? requested : hw;
  if (const char* env = std::getenv("SPINN_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1) {
      throw InvalidArgument(std::string("SPINN_THREADS must be a positive integer, got '") + env + "'");
    }
    n = std::min<long>(n, cap);
  }
  return std::max(1, n);
}

std::vector<std::size_t> sample_minibatch(const Dataset& dataset, const TrainConfig& cfg,
                                          int steps_per_frame, std::mt19937_64& rng) {
  if (steps_per_frame < 1) throw InvalidArgument("steps per frame must be >= 1");
  const std::size_t need = frames_needed(cfg.window_len, steps_per_frame);
  const std::size_t have = dataset.train.size();
  if (need > have) {
    throw InvalidArgument("window of " + std::to_string(cfg.window_len) + " steps needs " +
                          std::to_string(need) + " training frames, span has " +
                          std::to_string(have));
  }
  std::uniform_int_distribution<std::size_t> dist(0, have - need);
  std::vector<std::size_t> starts(static_cast<std::size_t>(cfg.batch_windows));
  for (auto& s : starts) s = dist(rng);
  return starts;
}

LossGradient batch_loss_and_gradient(const SpinnModel& model, const Dataset& dataset,
                                     std::span<const std::size_t> starts, const TrainConfig& cfg,
                                     std::span<const double> params) {
  const int spf = steps_per_frame(dataset.train.sample_interval, model.config().dt);
  std::vector<LossGradient> parts(starts.size());
  parallel_for(starts.size(), worker_threads(cfg.threads), [&](std::size_t b) {
    const Window w = make_window(dataset.train, starts[b], cfg.window_len, spf);
    const VectorField z0 = initial_state(w.frames[0], model.grid(), cfg.init);
    parts[b] = model.loss_and_gradient(z0, w, params, cfg.lambda);
  });
  LossGradient out;
  out.grad.assign(params.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(starts.size());
  for (const auto& p : parts) {
    out.loss += p.loss * scale;
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += p.grad[i] * scale;
  }
  return out;
}

namespace {

double batch_loss(const SpinnModel& model, const Dataset& dataset,
                  std::span<const std::size_t> starts, const TrainConfig& cfg,
                  std::span<const double> params) {
  const int spf = steps_per_frame(dataset.train.sample_interval, model.config().dt);
  std::vector<double> parts(starts.size());
  parallel_for(starts.size(), worker_threads(cfg.threads), [&](std::size_t b) {
    const Window w = make_window(dataset.train, starts[b], cfg.window_len, spf);
    const VectorField z0 = initial_state(w.frames[0], model.grid(), cfg.init);
    parts[b] = loss(model.rollout(z0, w, params), w, cfg.lambda);
  });
  double total = 0.0;
  for (double p : parts) total += p / static_cast<double>(starts.size());
  return total;
}

// Independent stream for the probe batch so it does not shift training draws.
constexpr std::uint64_t kProbeSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

bool TrainReport::same_results(const TrainReport& other) const {
  return loss_curve == other.loss_curve && probe_loss_initial == other.probe_loss_initial &&
         probe_loss_final == other.probe_loss_final && gammas == other.gammas &&
         selected_gamma == other.selected_gamma && seed == other.seed;
}

TrainResult train(const Dataset& dataset, const SpinnSetup& setup, const TrainConfig& cfg) {
  const auto t_begin = std::chrono::steady_clock::now();
  cfg.validate();
  dataset.validate();
  const SpinnModel model = setup.model(cfg.gamma);
  const int spf = steps_per_frame(dataset.train.sample_interval, model.config().dt);

  TrainResult result;
  result.params = SpinnParams::initialize(setup.unet, cfg.seed, cfg.output_gain);
  result.report.seed = cfg.seed;

  std::mt19937_64 rng(cfg.seed);
  std::mt19937_64 probe_rng(cfg.seed ^ kProbeSalt);
  TrainConfig probe_cfg = cfg;
  probe_cfg.batch_windows = cfg.probe_windows;
  const auto probe = sample_minibatch(dataset, probe_cfg, spf, probe_rng);
  result.report.probe_loss_initial = batch_loss(model, dataset, probe, cfg, result.params.weights);

  result.report.loss_curve.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    const auto starts = sample_minibatch(dataset, cfg, spf, rng);
    LossGradient lg = batch_loss_and_gradient(model, dataset, starts, cfg, result.params.weights);
    const bool finite = std::isfinite(lg.loss) &&
                        std::all_of(lg.grad.begin(), lg.grad.end(), [](double g) { return std::isfinite(g); });
    if (!finite) {
      throw DivergedTraining("loss became non-finite at Adam step " + std::to_string(step) +
                             " (gamma " + std::to_string(cfg.gamma) + ", lr " +
                             std::to_string(cfg.learning_rate) + ", lambda " +
                             std::to_string(cfg.lambda) + ")");
    }
    result.report.loss_curve.push_back(lg.loss);
    adam_step(result.params.weights, lg.grad, result.params.adam, cfg.learning_rate);
  }
  if (!result.params.all_finite()) throw DivergedTraining("parameters became non-finite");

  result.report.probe_loss_final = batch_loss(model, dataset, probe, cfg, result.params.weights);
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return result;
}

std::vector<VectorField> predict(const SpinnParams& params, const SpinnSetup& setup, double gamma,
                                 const ObservationSeries& observations, WindowInit init) {
  observations.validate();
  if (observations.frames.empty()) throw InvalidArgument("no observations to predict from");
  if (!(params.spec == setup.unet)) throw ShapeMismatch("model network does not match the setup");
  const SpinnModel model = setup.model(gamma);
  const int spf = steps_per_frame(observations.sample_interval, model.config().dt);

  std::vector<VectorField> states;
  states.reserve(observations.size());
  VectorField z = initial_state(observations.frames[0], model.grid(), init);
  states.push_back(z);
  const std::size_t n_steps = (observations.size() - 1) * static_cast<std::size_t>(spf);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const auto idx = frame_for_step(s, spf, model.config().feed);
    z = model.step(z, idx ? &observations.frames[*idx] : nullptr, params.weights);
    if ((s + 1) % static_cast<std::size_t>(spf) == 0) states.push_back(z);
  }
  return states;
}

std::vector<VectorField> bicubic_baseline(const ObservationSeries& observations, const Grid2D& grid) {
  observations.validate();
  std::vector<VectorField> out;
  out.reserve(observations.size());
  for (const auto& f : observations.frames) out.push_back(bicubic_upsample(f, grid));
  return out;
}

double observation_misfit(std::span<const VectorField> states, const ObservationSeries& observations) {
  if (states.size() != observations.size()) {
    throw ShapeMismatch("misfit: " + std::to_string(states.size()) + " states, " +
                        std::to_string(observations.size()) + " frames");
  }
  if (states.empty()) throw InvalidArgument("misfit of an empty series");
  double total = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const PartitionSpec part = partition_for(states[k].grid(), observations.frames[k]);
    const LowResFrame r = observations.frames[k] - pool_average(states[k], part);
    for (const auto& comp : r.values) {
      for (double v : comp) total += v * v;
    }
  }
  return total / static_cast<double>(states.size());
}

double relative_error(const VectorField& u, const VectorField& z, int component) {
  if (component != 1 && component != 2) throw InvalidArgument("component must be 1 or 2");
  require_same_grid(u.grid(), z.grid(), "relative_error");
  const ScalarField& a = u.component(component);
  const ScalarField& b = z.component(component);
  const double ref = l2_norm(a);
  if (ref == 0.0) throw ZeroReference("reference component " + std::to_string(component) + " is zero");
  ScalarField d = a;
  d -= b;
  return l2_norm(d) / ref;
}

std::vector<double> error_curve(std::span<const VectorField> reference,
                                std::span<const VectorField> prediction, int component) {
  if (reference.size() != prediction.size()) {
    throw ShapeMismatch("error curve: " + std::to_string(reference.size()) + " reference vs " +
                        std::to_string(prediction.size()) + " predicted snapshots");
  }
  std::vector<double> out;
  out.reserve(reference.size());
  for (std::size_t k = 0; k < reference.size(); ++k) {
    out.push_back(relative_error(reference[k], prediction[k], component));
  }
  return out;
}

double window_mean(std::span<const double> curve, double begin_fraction, double end_fraction) {
  if (!(begin_fraction >= 0.0 && begin_fraction < end_fraction && end_fraction <= 1.0)) {
    throw InvalidArgument("window fractions must satisfy 0 <= begin < end <= 1");
  }
  const auto n = static_cast<double>(curve.size());
  const auto lo = static_cast<std::size_t>(std::floor(begin_fraction * n));
  const auto hi = std::max(lo + 1, static_cast<std::size_t>(std::ceil(end_fraction * n)));
  if (hi > curve.size()) throw InvalidArgument("window is empty");
  double s = 0.0;
  for (std::size_t k = lo; k < hi; ++k) s += curve[k];
  return s / static_cast<double>(hi - lo);
}

double averaged_prediction_error(std::span<const VectorField> reference,
                                 std::span<const VectorField> prediction, double burn_in_fraction,
                                 int component) {
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw InvalidArgument("burn-in fraction must be in [0, 1)");
  }
  const auto curve = error_curve(reference, prediction, component);
  if (curve.empty()) throw InvalidArgument("no snapshots to average");
  return window_mean(curve, burn_in_fraction, 1.0);
}

SweepResult gamma_sweep(const Dataset& dataset, std::span<const double> gammas,
                        const SpinnSetup& setup, const TrainConfig& cfg,
                        std::span<const VectorField> reference) {
  if (gammas.empty()) throw InvalidArgument("gamma list is empty");
  if (!reference.empty() && reference.size() != dataset.predict.size()) {
    throw ShapeMismatch("reference has " + std::to_string(reference.size()) +
                        " snapshots, prediction span has " + std::to_string(dataset.predict.size()));
  }
  const auto t_begin = std::chrono::steady_clock::now();
  SweepResult out;
  out.report.seed = cfg.seed;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    TrainConfig c = cfg;
    c.gamma = gammas[g];
    TrainResult r = train(dataset, setup, c);
    const auto states = predict(r.params, setup, c.gamma, dataset.predict, c.init);
    GammaResult entry;
    entry.gamma = c.gamma;
    entry.selection_misfit = observation_misfit(states, dataset.predict);
    if (!reference.empty()) entry.averaged_error = averaged_prediction_error(reference, states);
    r.report.gammas.push_back(entry);
    out.report.gammas.push_back(entry);
    if (entry.selection_misfit < best) {
      best = entry.selection_misfit;
      out.selected = g;
    }
    out.models.push_back(std::move(r));
  }
  out.report.selected_gamma = gammas[out.selected];
  out.report.loss_curve = out.models[out.selected].report.loss_curve;
  out.report.probe_loss_initial = out.models[out.selected].report.probe_loss_initial;
  out.report.probe_loss_final = out.models[out.selected].report.probe_loss_final;
  out.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return out;
}

Dataset ablate_dataset(const Dataset& dataset, AblationMode mode, double value) {
  dataset.validate();
  Dataset out = dataset;
  const auto& src = dataset.train.frames;
  const std::size_t n = src.size();
  if (mode == AblationMode::TailFraction) {
    if (!(value > 0.0 && value <= 1.0)) throw InvalidArgument("tail fraction must be in (0, 1]");
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(value * n - 1e-9)));
    const std::size_t drop = n - keep;
    out.train.frames.assign(src.begin() + static_cast<std::ptrdiff_t>(drop), src.end());
    out.train.t0 = dataset.train.time(drop);
  } else {
    const double rounded = std::round(value);
    if (!(rounded >= 1.0) || std::abs(value - rounded) > 1e-12) {
      throw InvalidArgument("stride must be a positive integer");
    }
    const auto k = static_cast<std::size_t>(rounded);
    const std::size_t first = (n - 1) % k;
    out.train.frames.clear();
    for (std::size_t i = first; i < n; i += k) out.train.frames.push_back(src[i]);
    out.train.t0 = dataset.train.time(first);
    out.train.sample_interval = dataset.train.sample_interval * static_cast<double>(k);
  }
  return out;
}

}  // namespace spinn
