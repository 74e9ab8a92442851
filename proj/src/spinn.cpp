#include "spinn/spinn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spinn/error.hpp"

namespace spinn {

SpinnParams SpinnParams::initialize(const UNetSpec& spec, std::uint64_t seed, double output_gain) {
  UNet net(spec);
  SpinnParams p;
  p.spec = spec;
  p.weights = net.initial_parameters(seed, output_gain);
  p.seed = seed;
  p.adam.m.assign(p.weights.size(), 0.0);
  p.adam.v.assign(p.weights.size(), 0.0);
  return p;
}

SpinnParams SpinnParams::zeros(const UNetSpec& spec) {
  UNet net(spec);
  SpinnParams p;
  p.spec = spec;
  p.weights.assign(net.parameter_count(), 0.0);
  p.adam.m.assign(p.weights.size(), 0.0);
  p.adam.v.assign(p.weights.size(), 0.0);
  return p;
}

bool SpinnParams::all_finite() const noexcept {
  return std::all_of(weights.begin(), weights.end(), [](double w) { return std::isfinite(w); });
}

VectorField spinn_step(const VectorField& z, const LowResFrame* y, const Corrector& H,
                       const SolverConfig& cfg, const VectorField* known_forcing) {
  const Grid2D& grid = z.grid();
  VectorField f =
      y ? innovation(z, *y, cfg.gamma, partition_for(grid, *y)) : VectorField(grid);
  VectorField out = tentative_velocity(z, f, cfg);
  out.axpy(cfg.dt, H(out));
  if (known_forcing) out.axpy(cfg.dt, *known_forcing);
  zero_boundary(out);
  return out;
}

VectorField apply_H(const VectorField& z_star, const SpinnParams& params) {
  UNet net(params.spec);
  return to_field(net.forward(to_tensor(z_star), params.weights), z_star.grid());
}

VectorField spinn_step(const VectorField& z, const LowResFrame& y, const SpinnParams& params,
                       const SolverConfig& cfg) {
  UNet net(params.spec);
  auto H = [&](const VectorField& zs) {
    return to_field(net.forward(to_tensor(zs), params.weights), zs.grid());
  };
  return spinn_step(z, &y, H, cfg);
}

VectorField spinn_step_known_forcing(const VectorField& z, const LowResFrame& y,
                                     const SpinnParams& params, const VectorField& f,
                                     const SolverConfig& cfg) {
  require_same_grid(z.grid(), f.grid(), "spinn_step_known_forcing");
  UNet net(params.spec);
  auto H = [&](const VectorField& zs) {
    return to_field(net.forward(to_tensor(zs), params.weights), zs.grid());
  };
  return spinn_step(z, &y, H, cfg, &f);
}

void Window::validate() const {
  if (steps_per_frame < 1) throw InvalidArgument("steps per frame must be >= 1");
  if (n_steps == 0) throw InvalidArgument("window has no steps");
  if (frames.empty()) throw InvalidArgument("window has no frames");
  const std::size_t needed = (n_steps - 1) / static_cast<std::size_t>(steps_per_frame) + 1;
  if (frames.size() < needed) {
    throw InvalidArgument("window of " + std::to_string(n_steps) + " steps needs " +
                          std::to_string(needed) + " frames, got " + std::to_string(frames.size()));
  }
}

// --- SpinnModel --------------------------------------------------------------

SpinnModel::SpinnModel(Grid2D grid, SolverConfig cfg, UNetSpec spec,
                       std::optional<VectorField> known_forcing)
    : grid_(grid), cfg_(std::move(cfg)), net_(std::move(spec)), known_forcing_(std::move(known_forcing)) {
  cfg_.validate();
  if (known_forcing_) require_same_grid(grid_, known_forcing_->grid(), "SpinnModel");
  const int m = net_.spec().size_multiple();
  if (grid_.n() % m != 0 || grid_.n() / m < 2) {
    throw ShapeMismatch("grid " + std::to_string(grid_.n()) + " is incompatible with a " +
                        std::to_string(net_.spec().channels.size()) + "-level U-Net");
  }
}

VectorField SpinnModel::apply_H(const VectorField& z_star, std::span<const double> params) const {
  return to_field(net_.forward(to_tensor(z_star), params), grid_);
}

VectorField SpinnModel::step(const VectorField& z, const LowResFrame* y,
                             std::span<const double> params) const {
  auto H = [&](const VectorField& zs) { return apply_H(zs, params); };
  return spinn_step(z, y, H, cfg_, known_forcing_ ? &*known_forcing_ : nullptr);
}

std::vector<VectorField> SpinnModel::rollout(const VectorField& z0, const Window& window,
                                             std::span<const double> params) const {
  window.validate();
  require_same_grid(grid_, z0.grid(), "rollout");
  std::vector<VectorField> states;
  states.reserve(window.n_steps);
  VectorField z = z0;
  for (std::size_t s = 0; s < window.n_steps; ++s) {
    const auto idx = frame_for_step(s, window.steps_per_frame, cfg_.feed);
    z = step(z, idx ? &window.frames[*idx] : nullptr, params);
    states.push_back(z);
  }
  return states;
}

namespace {

// Frame compared against the state reached after `step + 1` steps, if any.
const LowResFrame* target_frame(const Window& window, std::size_t step) {
  const std::size_t reached = step + 1;
  const auto spf = static_cast<std::size_t>(window.steps_per_frame);
  if (reached % spf != 0) return nullptr;
  const std::size_t k = reached / spf;
  return k < window.frames.size() ? &window.frames[k] : nullptr;
}

double state_loss(const VectorField& z, const LowResFrame* target, double lambda,
                  VectorField* grad) {
  const Grid2D& grid = z.grid();
  double value = 0.0;
  if (target) {
    const PartitionSpec part = partition_for(grid, *target);
    LowResFrame r = *target - pool_average(z, part);
    for (const auto& comp : r.values) {
      for (double v : comp) value += v * v;
    }
    if (grad) {
      const double k2 = static_cast<double>(part.pool) * part.pool;
      grad->axpy(-2.0 / k2, lift(r, grid, part));
    }
  }
  if (lambda != 0.0) {
    const ScalarField d = divergence(z);
    value += lambda * dot(d, d);
    if (grad) grad->axpy(-2.0 * lambda, gradient(d));
  }
  return value;
}

}  // namespace

double loss(std::span<const VectorField> states, const Window& window, double lambda) {
  if (states.size() != window.n_steps) {
    throw ShapeMismatch("loss expects " + std::to_string(window.n_steps) + " states, got " +
                        std::to_string(states.size()));
  }
  double total = 0.0;
  for (std::size_t s = 0; s < states.size(); ++s) {
    total += state_loss(states[s], target_frame(window, s), lambda, nullptr);
  }
  return total;
}

std::vector<VectorField> rollout(const VectorField& z0, const Window& window,
                                 const SpinnParams& params, const SolverConfig& cfg) {
  return SpinnModel(z0.grid(), cfg, params.spec).rollout(z0, window, params.weights);
}

LossGradient SpinnModel::loss_and_gradient(const VectorField& z0, const Window& window,
                                           std::span<const double> params, double lambda) const {
  window.validate();
  require_same_grid(grid_, z0.grid(), "loss_and_gradient");
  const std::size_t T = window.n_steps;
  const double dt = cfg_.dt;

  // Forward pass, keeping what the reverse pass needs.
  std::vector<VectorField> inputs;  // z^s
  std::vector<const LowResFrame*> feeds;
  std::vector<UNet::Cache> caches(T);
  inputs.reserve(T);
  feeds.reserve(T);

  LossGradient out;
  out.grad.assign(net_.parameter_count(), 0.0);
  std::vector<VectorField> loss_grads;
  loss_grads.reserve(T);

  VectorField z = z0;
  for (std::size_t s = 0; s < T; ++s) {
    const auto idx = frame_for_step(s, window.steps_per_frame, cfg_.feed);
    const LowResFrame* y = idx ? &window.frames[*idx] : nullptr;
    inputs.push_back(z);
    feeds.push_back(y);

    VectorField f = y ? innovation(z, *y, cfg_.gamma, partition_for(grid_, *y)) : VectorField(grid_);
    VectorField zs = tentative_velocity(z, f, cfg_);
    VectorField h = to_field(net_.forward(to_tensor(zs), params, &caches[s]), grid_);
    z = std::move(zs);
    z.axpy(dt, h);
    if (known_forcing_) z.axpy(dt, *known_forcing_);
    zero_boundary(z);

    VectorField g(grid_);
    out.loss += state_loss(z, target_frame(window, s), lambda, &g);
    loss_grads.push_back(std::move(g));
  }

  // Reverse pass.
  VectorField adj(grid_);
  for (std::size_t s = T; s-- > 0;) {
    adj += loss_grads[s];
    zero_boundary(adj);

    Tensor gh = to_tensor(adj);
    for (double& v : gh.data) v *= dt;
    Tensor gx = net_.backward(caches[s], gh, params, out.grad);
    VectorField a_star = adj;
    a_star += to_field(gx, grid_);
    zero_boundary(a_star);

    const VectorField& zin = inputs[s];
    VectorField rate = laplacian(a_star);
    rate *= cfg_.nu;
    rate -= advect_upwind_vjp(zin, a_star);
    if (feeds[s] && cfg_.gamma != 0.0) {
      const PartitionSpec part = partition_for(grid_, *feeds[s]);
      rate.axpy(-cfg_.gamma, lift(pool_average(a_star, part), grid_, part));
    }
    adj = std::move(a_star);
    adj.axpy(dt, rate);
  }
  return out;
}

}  // namespace spinn
