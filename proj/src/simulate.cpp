#include "spinn/simulate.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

#include "spinn/error.hpp"

namespace spinn {

void ForcingSpec::validate() const {
  if (kind == ForcingKind::FourierMode && mode < 1) {
    throw InvalidArgument("Fourier forcing mode must be >= 1");
  }
  if (kind == ForcingKind::Custom && !custom) {
    throw InvalidArgument("custom forcing requires a field");
  }
}

void SolverConfig::validate() const {
  if (!(nu > 0.0)) throw InvalidArgument("viscosity must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (!(gamma >= 0.0)) throw InvalidArgument("observer gain must be non-negative");
  if (save_stride < 1) throw InvalidArgument("save stride must be >= 1");
  if (!(poisson_tol > 0.0)) throw InvalidArgument("Poisson tolerance must be positive");
  forcing.validate();
}

VectorField make_forcing(const ForcingSpec& spec, const Grid2D& grid) {
  spec.validate();
  switch (spec.kind) {
    case ForcingKind::Zero:
      return VectorField(grid);
    case ForcingKind::Custom:
      require_same_grid(spec.custom->grid(), grid, "make_forcing");
      return *spec.custom;
    case ForcingKind::FourierMode:
      break;
  }
  const double amp = spec.amplitude;
  const int mode = spec.mode;
  return VectorField(
      ScalarField::from_function(grid, [&](double, double x2) { return amp * std::sin(mode * x2); }),
      ScalarField(grid));
}

VectorField make_initial_condition(const Grid2D& grid, double scale) {
  const double c = std::numbers::pi;
  auto psi = [&](double x1, double x2) {
    const double r2 = (x1 - c) * (x1 - c) + (x2 - c) * (x2 - c);
    return scale * std::exp(-r2);
  };
  VectorField u = VectorField::from_function(
      grid, [&](double x1, double x2) { return -2.0 * (x2 - c) * psi(x1, x2); },
      [&](double x1, double x2) { return 2.0 * (x1 - c) * psi(x1, x2); });
  zero_boundary(u);
  return u;
}

PartitionSpec partition_for(const Grid2D& grid, const LowResFrame& y) {
  if (y.n_low < 1 || grid.n() % y.n_low != 0) {
    throw IncompatibleGrid("frame of size " + std::to_string(y.n_low) + " does not tile grid " +
                           std::to_string(grid.n()));
  }
  return {grid.n() / y.n_low, y.n_low};
}

VectorField innovation(const VectorField& z, const LowResFrame& y, double gamma,
                       const PartitionSpec& part) {
  part.require_compatible(z.grid());
  if (y.n_low != part.n_low) throw IncompatibleGrid("frame does not match partition");
  VectorField f = lift(y - pool_average(z, part), z.grid(), part);
  f *= gamma;
  return f;
}

VectorField tentative_velocity(const VectorField& z, const VectorField& innovation_term,
                               const SolverConfig& cfg) {
  require_same_grid(z.grid(), innovation_term.grid(), "tentative_velocity");
  VectorField rate = laplacian(z);
  rate *= cfg.nu;
  rate -= advect_upwind(z);
  rate += innovation_term;
  VectorField out = z;
  out.axpy(cfg.dt, rate);
  zero_boundary(out);
  return out;
}

// --- ChorinStepper -----------------------------------------------------------

ChorinStepper::ChorinStepper(Grid2D grid, SolverConfig cfg)
    : grid_(grid), cfg_(std::move(cfg)), poisson_(grid), forcing_(grid) {
  cfg_.validate();
  forcing_ = make_forcing(cfg_.forcing, grid_);
}

VectorField ChorinStepper::pressure_correction(const VectorField& z_star,
                                               const VectorField& g) const {
  const PoissonSolution sol = poisson_.solve(pressure_rhs(z_star, g, cfg_.dt), cfg_.poisson_tol);
  VectorField out = gradient(sol.p);
  out *= -1.0;
  out += g;
  return out;
}

VectorField ChorinStepper::projection_step(const VectorField& z_star, const VectorField& g) const {
  VectorField out = z_star;
  out.axpy(cfg_.dt, pressure_correction(z_star, g));
  zero_boundary(out);
  return out;
}

VectorField ChorinStepper::step_reference(const VectorField& z) const {
  return projection_step(tentative_velocity(z, VectorField(grid_), cfg_), forcing_);
}

VectorField ChorinStepper::step_observer(const VectorField& z, const LowResFrame* y,
                                         const VectorField& g_guess) const {
  VectorField f = y ? innovation(z, *y, cfg_.gamma, partition_for(grid_, *y)) : VectorField(grid_);
  return projection_step(tentative_velocity(z, f, cfg_), g_guess);
}

VectorField projection_step(const VectorField& z_star, const VectorField& g,
                            const SolverConfig& cfg) {
  return ChorinStepper(z_star.grid(), cfg).projection_step(z_star, g);
}

VectorField step_reference(const VectorField& z, const SolverConfig& cfg) {
  return ChorinStepper(z.grid(), cfg).step_reference(z);
}

VectorField step_observer(const VectorField& z, const LowResFrame& y, const SolverConfig& cfg,
                          const VectorField& g_guess) {
  return ChorinStepper(z.grid(), cfg).step_observer(z, &y, g_guess);
}

std::optional<std::size_t> frame_for_step(std::size_t step, int steps_per_frame, FrameFeed feed) {
  const auto spf = static_cast<std::size_t>(steps_per_frame);
  if (feed == FrameFeed::OnArrival && step % spf != 0) return std::nullopt;
  return step / spf;
}

int steps_per_frame(double sample_interval, double dt) {
  const double ratio = sample_interval / dt;
  const long r = std::lround(ratio);
  if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-9 * ratio) {
    std::ostringstream msg;
    msg << "observation interval " << sample_interval << " is not a whole multiple of dt " << dt;
    throw InvalidArgument(msg.str());
  }
  return static_cast<int>(r);
}

double cfl_number(const VectorField& z, double dt) {
  return std::max(max_abs(z.c1()), max_abs(z.c2())) * dt / z.grid().dx();
}

Trajectory run(const VectorField& z0, const SolverConfig& cfg, std::size_t n_steps,
               const RunOptions& options) {
  const Grid2D grid = z0.grid();
  ChorinStepper stepper(grid, cfg);
  Trajectory traj{{}, cfg, options.t0};
  traj.snapshots.reserve(n_steps / cfg.save_stride + 1);
  traj.snapshots.push_back(z0);

  int spf = 0;
  VectorField g_guess = options.g_guess ? *options.g_guess : stepper.forcing();
  if (options.observations) {
    options.observations->validate();
    spf = steps_per_frame(options.observations->sample_interval, cfg.dt);
  }

  bool warned = !options.warn_cfl;
  VectorField z = z0;
  for (std::size_t s = 0; s < n_steps; ++s) {
    if (!warned && cfl_number(z, cfg.dt) > 0.5) {
      std::clog << "warning: CFL number " << cfl_number(z, cfg.dt) << " exceeds 0.5 at step " << s
                << "\n";
      warned = true;
    }
    if (options.observations) {
      const auto& frames = options.observations->frames;
      const auto idx = frame_for_step(s, spf, cfg.feed);
      const LowResFrame* y = nullptr;
      if (idx) {
        if (*idx >= frames.size()) {
          throw InvalidArgument("observer run of " + std::to_string(n_steps) +
                                " steps outlasts the observation series");
        }
        y = &frames[*idx];
      }
      z = stepper.step_observer(z, y, g_guess);
    } else {
      z = stepper.step_reference(z);
    }
    if ((s + 1) % static_cast<std::size_t>(cfg.save_stride) == 0) traj.snapshots.push_back(z);
  }
  return traj;
}

// --- feasibility -------------------------------------------------------------

namespace {
// Proportionality constant of the partition-size bound, pinned to the value
// reported for nu = 0.01.
const double kFeasibilityConstant = 0.0155 * std::sqrt(std::log(100.0)) / 1e-4;
}  // namespace

FeasibilityReport gamma_feasibility(double nu, double h2_configured) {
  if (!(nu > 0.0 && nu < 1.0)) {
    throw InvalidArgument("partition-size guidance needs 0 < nu < 1");
  }
  if (!(h2_configured >= 0.0)) throw InvalidArgument("partition size must be non-negative");
  FeasibilityReport r;
  r.nu = nu;
  r.h2_configured = h2_configured;
  r.h2_required = kFeasibilityConstant * nu * nu / std::sqrt(std::log(1.0 / nu));
  r.feasible = h2_configured <= r.h2_required;
  r.min_blocks_per_side =
      static_cast<int>(std::ceil(2.0 * std::numbers::pi / std::sqrt(r.h2_required) - 1e-12));
  std::ostringstream s;
  s << "nu=" << nu << " h^2=" << h2_configured << " required h^2<=" << r.h2_required << " ("
    << r.min_blocks_per_side << "x" << r.min_blocks_per_side << " blocks or finer): "
    << (r.feasible ? "feasible" : "infeasible");
  r.summary = s.str();
  return r;
}

FeasibilityReport gamma_feasibility(double nu, const Grid2D& grid, const PartitionSpec& part) {
  part.require_compatible(grid);
  return gamma_feasibility(nu, part.cell_measure(grid));
}

}  // namespace spinn
