#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spinn/fields.hpp"
#include "spinn/observe.hpp"
#include "spinn/simulate.hpp"
#include "spinn/unet.hpp"

namespace spinn {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Trainable weights of the correction network plus optimiser moments.
struct SpinnParams {
  UNetSpec spec;
  std::vector<double> weights;
  std::uint64_t seed = 0;
  AdamState adam;

  static SpinnParams initialize(const UNetSpec& spec, std::uint64_t seed, double output_gain = 1.0);
  static SpinnParams zeros(const UNetSpec& spec);

  bool all_finite() const noexcept;
  friend bool operator==(const SpinnParams&, const SpinnParams&) = default;
};

/// Maps the tentative velocity z* to the correction added as z* + dt H(z*).
using Corrector = std::function<VectorField(const VectorField&)>;

/// H(z*): deterministic forward pass of the network.
VectorField apply_H(const VectorField& z_star, const SpinnParams& params);

/// One step with an arbitrary corrector: z* from the tentative layer with
/// innovation (skipped when y is null), then z* + dt H(z*) (+ dt f when a
/// known forcing is given), boundary ring zeroed.
VectorField spinn_step(const VectorField& z, const LowResFrame* y, const Corrector& H,
                       const SolverConfig& cfg, const VectorField* known_forcing = nullptr);

VectorField spinn_step(const VectorField& z, const LowResFrame& y, const SpinnParams& params,
                       const SolverConfig& cfg);
VectorField spinn_step_known_forcing(const VectorField& z, const LowResFrame& y,
                                     const SpinnParams& params, const VectorField& f,
                                     const SolverConfig& cfg);

/// Frames covering one rollout. frames[0] is the frame at the window start;
/// frame k arrives after k * steps_per_frame steps.
struct Window {
  std::span<const LowResFrame> frames;
  int steps_per_frame = 1;
  std::size_t n_steps = 0;

  void validate() const;
};

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

/// The SPINN for one grid: tentative layer, network and optional explicit
/// forcing. Immutable; parameters are passed per call so one instance can
/// serve concurrent windows.
class SpinnModel {
 public:
  SpinnModel(Grid2D grid, SolverConfig cfg, UNetSpec spec,
             std::optional<VectorField> known_forcing = std::nullopt);

  const Grid2D& grid() const noexcept { return grid_; }
  const SolverConfig& config() const noexcept { return cfg_; }
  const UNet& network() const noexcept { return net_; }
  bool has_known_forcing() const noexcept { return known_forcing_.has_value(); }

  VectorField apply_H(const VectorField& z_star, std::span<const double> params) const;
  VectorField step(const VectorField& z, const LowResFrame* y, std::span<const double> params) const;

  /// States after each of the window's steps (z^1 .. z^T).
  std::vector<VectorField> rollout(const VectorField& z0, const Window& window,
                                   std::span<const double> params) const;

  /// Loss of the rollout from z0 and its gradient with respect to the
  /// parameters, by reverse-mode differentiation through every step.
  LossGradient loss_and_gradient(const VectorField& z0, const Window& window,
                                 std::span<const double> params, double lambda) const;

 private:
  Grid2D grid_;
  SolverConfig cfg_;
  UNet net_;
  std::optional<VectorField> known_forcing_;
};

std::vector<VectorField> rollout(const VectorField& z0, const Window& window,
                                 const SpinnParams& params, const SolverConfig& cfg);

/// Sum over states of the block-average misfit against the frame arriving at
/// that state (states between frame arrivals contribute no misfit) plus
/// lambda times the squared l2 norm of the discrete divergence of every state.
double loss(std::span<const VectorField> states, const Window& window, double lambda);

}  // namespace spinn
