#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "spinn/fields.hpp"
#include "spinn/observe.hpp"
#include "spinn/poisson.hpp"

namespace spinn {

enum class ForcingKind { FourierMode, Zero, Custom };

struct ForcingSpec {
  ForcingKind kind = ForcingKind::FourierMode;
  int mode = 6;
  double amplitude = 1.0;
  std::optional<VectorField> custom;  // used when kind == Custom

  void validate() const;
};

/// How low-resolution frames feed the innovation between frame arrivals.
enum class FrameFeed {
  ZeroOrderHold,  // every sub-step uses the latest frame
  OnArrival,      // innovation only on the step where a frame arrives
};

struct SolverConfig {
  double nu = 0.01;
  double dt = 0.002;
  ForcingSpec forcing;
  double gamma = 0.0;
  int save_stride = 5;
  double poisson_tol = 1e-8;
  FrameFeed feed = FrameFeed::ZeroOrderHold;

  void validate() const;
};

struct Trajectory {
  std::vector<VectorField> snapshots;  // every save_stride steps, starting at t0
  SolverConfig config;
  double t0 = 0.0;

  double interval() const noexcept { return config.dt * config.save_stride; }
  double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * interval(); }
};

/// (amplitude sin(mode x2), 0) for FourierMode; a Kolmogorov shear forcing.
VectorField make_forcing(const ForcingSpec& spec, const Grid2D& grid);

/// Velocity of the Gaussian stream function scale * exp(-|x - (pi, pi)|^2),
/// u = (dpsi/dx2, -dpsi/dx1) evaluated analytically, zero on the boundary ring.
VectorField make_initial_condition(const Grid2D& grid, double scale);

/// gamma * lift(y - pool_average(z)).
VectorField innovation(const VectorField& z, const LowResFrame& y, double gamma,
                       const PartitionSpec& part);

/// z + (nu Lap z - (z.grad) z + F) dt with the boundary ring zeroed.
VectorField tentative_velocity(const VectorField& z, const VectorField& innovation_term,
                               const SolverConfig& cfg);

/// Partition implied by a frame on a given grid.
PartitionSpec partition_for(const Grid2D& grid, const LowResFrame& y);

/// Chorin splitting with a cached Poisson solver for one grid. Stateless
/// between calls apart from the immutable solver, so one instance may step
/// several trajectories.
class ChorinStepper {
 public:
  ChorinStepper(Grid2D grid, SolverConfig cfg);

  const SolverConfig& config() const noexcept { return cfg_; }
  const Grid2D& grid() const noexcept { return grid_; }
  const VectorField& forcing() const noexcept { return forcing_; }

  /// -grad p + g where p solves the pressure equation for z*; the exact
  /// correction the learned network stands in for.
  VectorField pressure_correction(const VectorField& z_star, const VectorField& g) const;

  /// z* - dt grad p + dt g, boundary ring zeroed.
  VectorField projection_step(const VectorField& z_star, const VectorField& g) const;

  VectorField step_reference(const VectorField& z) const;
  /// Observer step; a null frame means no innovation on this step.
  VectorField step_observer(const VectorField& z, const LowResFrame* y,
                            const VectorField& g_guess) const;

 private:
  Grid2D grid_;
  SolverConfig cfg_;
  NeumannPoissonSolver poisson_;
  VectorField forcing_;
};

VectorField projection_step(const VectorField& z_star, const VectorField& g,
                            const SolverConfig& cfg);
VectorField step_reference(const VectorField& z, const SolverConfig& cfg);
VectorField step_observer(const VectorField& z, const LowResFrame& y, const SolverConfig& cfg,
                          const VectorField& g_guess);

/// Frame feeding the step that leaves sub-step `step` (0-based) of a run in
/// which frames arrive every `steps_per_frame` steps; nullopt means no
/// innovation on this step.
std::optional<std::size_t> frame_for_step(std::size_t step, int steps_per_frame, FrameFeed feed);

/// Steps per observation interval; throws if the interval is not a whole
/// multiple of dt.
int steps_per_frame(double sample_interval, double dt);

/// max |z| dt / dx.
double cfl_number(const VectorField& z, double dt);

struct RunOptions {
  std::optional<ObservationSeries> observations;  // present: observer run
  std::optional<VectorField> g_guess;             // observer forcing; defaults to cfg.forcing
  double t0 = 0.0;
  bool warn_cfl = true;
};

/// Iterates the reference step (no observations) or the observer step,
/// saving z0 and then every save_stride steps.
Trajectory run(const VectorField& z0, const SolverConfig& cfg, std::size_t n_steps,
               const RunOptions& options = {});

struct FeasibilityReport {
  double nu = 0.0;
  double h2_configured = 0.0;
  double h2_required = 0.0;
  bool feasible = false;
  int min_blocks_per_side = 0;  // smallest n with (2pi / n)^2 <= h2_required
  std::string summary;
};

/// Partition-size guidance h^2 <= C nu^2 / sqrt(ln(1/nu)) for observer
/// convergence. C is fixed so that nu = 0.01 gives h^2 = 0.0155.
FeasibilityReport gamma_feasibility(double nu, const Grid2D& grid, const PartitionSpec& part);
FeasibilityReport gamma_feasibility(double nu, double h2_configured);

}  // namespace spinn
