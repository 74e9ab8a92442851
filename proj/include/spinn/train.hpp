#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "spinn/observe.hpp"
#include "spinn/simulate.hpp"
#include "spinn/spinn.hpp"

namespace spinn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam without weight decay. Moments live in `state`,
/// which is sized on first use.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, const AdamConfig& cfg = {});

/// How the state at a window start is built from the frame there.
enum class WindowInit { Bicubic, Lift };

VectorField initial_state(const LowResFrame& frame, const Grid2D& grid, WindowInit init);

struct TrainConfig {
  double lambda = 0.1;
  double learning_rate = 1e-4;
  int batch_windows = 20;
  int window_len = 200;  // network steps per window
  int steps = 2000;      // Adam updates
  double gamma = 10.0;
  std::uint64_t seed = 0;
  WindowInit init = WindowInit::Bicubic;
  double output_gain = 1.0;  // initial scale of the linear output layer
  int probe_windows = 4;     // fixed batch used to compare loss before and after
  int threads = 0;           // 0: SPINN_THREADS, else hardware concurrency

  void validate() const;
};

/// Everything about the network that is not learned.
struct SpinnSetup {
  int nx = 32;
  SolverConfig solver;  // nu, dt, feed; gamma is taken from TrainConfig
  UNetSpec unet;
  bool known_forcing = false;  // add dt f with f from solver.forcing

  SpinnModel model(double gamma) const;
};

/// Observations split into a training span [t0, t1] and a prediction span
/// (t1, T]. High-resolution reference data never enters here.
struct Dataset {
  ObservationSeries train;
  ObservationSeries predict;

  void validate() const;
};

/// Frames with time <= t1 go to training, the rest to prediction.
Dataset split_dataset(const ObservationSeries& all, double t1);

/// Window start indices into dataset.train, uniform with replacement.
std::vector<std::size_t> sample_minibatch(const Dataset& dataset, const TrainConfig& cfg,
                                          int steps_per_frame, std::mt19937_64& rng);

struct GammaResult {
  double gamma = 0.0;
  double selection_misfit = 0.0;  // mean low-resolution misfit on the prediction span
  std::optional<double> averaged_error;  // filled only when a reference is supplied

  friend bool operator==(const GammaResult&, const GammaResult&) = default;
};

struct TrainReport {
  std::vector<double> loss_curve;  // mean window loss per Adam update
  double probe_loss_initial = 0.0;
  double probe_loss_final = 0.0;
  std::vector<GammaResult> gammas;
  std::optional<double> selected_gamma;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  /// Equality ignoring wall-clock time.
  bool same_results(const TrainReport& other) const;
};

struct TrainResult {
  SpinnParams params;
  TrainReport report;
};

/// Mean loss and gradient over windows starting at the given frames.
LossGradient batch_loss_and_gradient(const SpinnModel& model, const Dataset& dataset,
                                     std::span<const std::size_t> starts, const TrainConfig& cfg,
                                     std::span<const double> params);

TrainResult train(const Dataset& dataset, const SpinnSetup& setup, const TrainConfig& cfg);

/// Runs the trained SPINN over an observation series from the initial
/// state built from its first frame. Returns the state at every frame time.
std::vector<VectorField> predict(const SpinnParams& params, const SpinnSetup& setup, double gamma,
                                 const ObservationSeries& observations,
                                 WindowInit init = WindowInit::Bicubic);

/// Bicubic upsampling of every frame.
std::vector<VectorField> bicubic_baseline(const ObservationSeries& observations, const Grid2D& grid);

/// Mean over frames of the squared block-average misfit.
double observation_misfit(std::span<const VectorField> states, const ObservationSeries& observations);

/// ||u_i - z_i|| / ||u_i||; throws ZeroReference when ||u_i|| = 0.
double relative_error(const VectorField& u, const VectorField& z, int component);

std::vector<double> error_curve(std::span<const VectorField> reference,
                                std::span<const VectorField> prediction, int component);

/// Mean of eps_{component,t} after discarding the leading burn-in fraction.
double averaged_prediction_error(std::span<const VectorField> reference,
                                 std::span<const VectorField> prediction,
                                 double burn_in_fraction = 0.2, int component = 1);

/// Mean of curve over the index range [begin_fraction, end_fraction) of its length.
double window_mean(std::span<const double> curve, double begin_fraction, double end_fraction);

struct SweepResult {
  std::vector<TrainResult> models;  // one per gamma, in input order
  TrainReport report;               // gammas filled, selected_gamma set
  std::size_t selected = 0;
};

/// Trains one model per gamma, selects by observation misfit on the
/// prediction span. When `reference` is given (prediction-span snapshots
/// aligned with dataset.predict), averaged errors are reported as well; they
/// never influence the selection.
SweepResult gamma_sweep(const Dataset& dataset, std::span<const double> gammas,
                        const SpinnSetup& setup, const TrainConfig& cfg,
                        std::span<const VectorField> reference = {});

enum class AblationMode { TailFraction, Stride };

/// Shrinks the training span only: keep the final fraction of frames, or
/// every k-th frame counted back from the last one (interval scaled by k).
Dataset ablate_dataset(const Dataset& dataset, AblationMode mode, double value);

/// Worker count from SPINN_THREADS, capped by hardware concurrency.
int worker_threads(int requested = 0);

}  // namespace spinn
