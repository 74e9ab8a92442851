#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "spinn/fields.hpp"

namespace spinn {

/// Non-overlapping pool x pool blocks of nodes covering the grid. Each block
/// is one observation subdomain of measure (pool dx)^2.
struct PartitionSpec {
  int pool = 4;
  int n_low = 0;

  /// Validates n mod pool == 0; throws IncompatibleGrid otherwise.
  static PartitionSpec for_grid(const Grid2D& grid, int pool);

  double cell_measure(const Grid2D& grid) const noexcept {
    const double h = pool * grid.dx();
    return h * h;
  }
  void require_compatible(const Grid2D& grid) const;
};

/// Block averages of both velocity components at one instant, row-major
/// n_low x n_low per component.
struct LowResFrame {
  int n_low = 0;
  std::array<std::vector<double>, 2> values;

  LowResFrame() = default;
  explicit LowResFrame(int n);

  std::vector<double>& component(int i) { return values.at(static_cast<std::size_t>(i - 1)); }
  const std::vector<double>& component(int i) const {
    return values.at(static_cast<std::size_t>(i - 1));
  }
  bool all_finite() const noexcept;

  LowResFrame& operator-=(const LowResFrame& other);
  friend LowResFrame operator-(LowResFrame a, const LowResFrame& b) { return a -= b; }
  friend bool operator==(const LowResFrame&, const LowResFrame&) = default;
};

/// Frames sampled every sample_interval starting at t0.
struct ObservationSeries {
  std::vector<LowResFrame> frames;
  double t0 = 0.0;
  double sample_interval = 0.0;
  double noise_bound = 0.0;
  PartitionSpec partition;

  double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * sample_interval; }
  std::size_t size() const noexcept { return frames.size(); }
  void validate() const;
};

LowResFrame pool_average(const VectorField& v, const PartitionSpec& part);

/// Piecewise-constant field: every node takes the value of its block.
VectorField lift(const LowResFrame& frame, const Grid2D& grid, const PartitionSpec& part);

/// Adds i.i.d. uniform noise in [-bound, bound] to every entry.
ObservationSeries add_bounded_noise(const ObservationSeries& series, double bound,
                                    std::uint64_t seed);

/// Separable bicubic convolution (Keys, a = -1/2) anchored at block centres;
/// taps beyond the outermost centres are clamped to the edge values.
VectorField bicubic_upsample(const LowResFrame& frame, const Grid2D& grid);

}  // namespace spinn
