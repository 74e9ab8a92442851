#include "spinn/observe.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "spinn/error.hpp"

namespace spinn {

PartitionSpec PartitionSpec::for_grid(const Grid2D& grid, int pool) {
  if (pool < 1) throw InvalidArgument("pooling factor must be >= 1, got " + std::to_string(pool));
  if (grid.n() % pool != 0) {
    throw IncompatibleGrid("grid size " + std::to_string(grid.n()) +
                           " is not divisible by pooling factor " + std::to_string(pool));
  }
  return {pool, grid.n() / pool};
}

void PartitionSpec::require_compatible(const Grid2D& grid) const {
  if (pool < 1 || n_low * pool != grid.n()) {
    throw IncompatibleGrid("partition " + std::to_string(n_low) + "x" + std::to_string(n_low) +
                           " with pool " + std::to_string(pool) + " does not tile grid " +
                           std::to_string(grid.n()));
  }
}

LowResFrame::LowResFrame(int n) : n_low(n) {
  const auto size = static_cast<std::size_t>(n) * n;
  values[0].assign(size, 0.0);
  values[1].assign(size, 0.0);
}

bool LowResFrame::all_finite() const noexcept {
  for (const auto& c : values) {
    if (!std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); })) return false;
  }
  return true;
}

LowResFrame& LowResFrame::operator-=(const LowResFrame& other) {
  if (other.n_low != n_low) throw ShapeMismatch("low-resolution frames differ in size");
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < values[c].size(); ++k) values[c][k] -= other.values[c][k];
  }
  return *this;
}

void ObservationSeries::validate() const {
  if (!(sample_interval > 0.0)) throw InvalidArgument("sample interval must be positive");
  if (noise_bound < 0.0) throw InvalidArgument("noise bound must be non-negative");
  for (const auto& f : frames) {
    if (f.n_low != partition.n_low) throw ShapeMismatch("frame size does not match partition");
    if (!f.all_finite()) throw InvalidArgument("observation frame contains non-finite values");
  }
}

LowResFrame pool_average(const VectorField& v, const PartitionSpec& part) {
  const Grid2D& grid = v.grid();
  part.require_compatible(grid);
  const int k = part.pool;
  const int m = part.n_low;
  const double inv = 1.0 / (static_cast<double>(k) * k);
  LowResFrame out(m);
  for (int c = 1; c <= 2; ++c) {
    const ScalarField& f = v.component(c);
    auto& dst = out.component(c);
    for (int bj = 0; bj < m; ++bj) {
      for (int bi = 0; bi < m; ++bi) {
        double s = 0.0;
        for (int j = bj * k; j < (bj + 1) * k; ++j) {
          for (int i = bi * k; i < (bi + 1) * k; ++i) s += f(i, j);
        }
        dst[static_cast<std::size_t>(bj) * m + bi] = s * inv;
      }
    }
  }
  return out;
}

VectorField lift(const LowResFrame& frame, const Grid2D& grid, const PartitionSpec& part) {
  part.require_compatible(grid);
  if (frame.n_low != part.n_low) throw ShapeMismatch("frame size does not match partition");
  const int k = part.pool;
  const int m = part.n_low;
  VectorField out(grid);
  for (int c = 1; c <= 2; ++c) {
    ScalarField& f = out.component(c);
    const auto& src = frame.component(c);
    for (int j = 0; j < grid.n(); ++j) {
      for (int i = 0; i < grid.n(); ++i) {
        f(i, j) = src[static_cast<std::size_t>(j / k) * m + i / k];
      }
    }
  }
  return out;
}

ObservationSeries add_bounded_noise(const ObservationSeries& series, double bound,
                                    std::uint64_t seed) {
  if (bound < 0.0) throw InvalidArgument("noise bound must be non-negative, got " + std::to_string(bound));
  ObservationSeries out = series;
  out.noise_bound = series.noise_bound + bound;
  if (bound == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& frame : out.frames) {
    for (auto& comp : frame.values) {
      for (double& v : comp) v += dist(rng);
    }
  }
  return out;
}

namespace {

double keys_kernel(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

// Fine node i in block-centre coordinates is s = (i + 1/2) / k - 1/2.
std::vector<Taps> make_taps(int n, int m) {
  const double k = static_cast<double>(n) / m;
  std::vector<Taps> taps(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) / k - 0.5;
    const int base = static_cast<int>(std::floor(s));
    const double frac = s - base;
    for (int t = 0; t < 4; ++t) {
      const int idx = base - 1 + t;
      taps[i].index[t] = std::clamp(idx, 0, m - 1);
      taps[i].weight[t] = keys_kernel(frac - (t - 1));
    }
  }
  return taps;
}

}  // namespace

VectorField bicubic_upsample(const LowResFrame& frame, const Grid2D& grid) {
  const int n = grid.n();
  const int m = frame.n_low;
  if (m < 1 || n % m != 0) {
    throw IncompatibleGrid("frame of size " + std::to_string(m) + " does not tile grid " +
                           std::to_string(n));
  }
  const auto taps = make_taps(n, m);
  VectorField out(grid);
  std::vector<double> rows(static_cast<std::size_t>(m) * n);
  for (int c = 1; c <= 2; ++c) {
    const auto& src = frame.component(c);
    // Interpolate along x1 for every coarse row, then along x2.
    for (int bj = 0; bj < m; ++bj) {
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int t = 0; t < 4; ++t) {
          s += taps[i].weight[t] * src[static_cast<std::size_t>(bj) * m + taps[i].index[t]];
        }
        rows[static_cast<std::size_t>(bj) * n + i] = s;
      }
    }
    ScalarField& f = out.component(c);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int t = 0; t < 4; ++t) {
          s += taps[j].weight[t] * rows[static_cast<std::size_t>(taps[j].index[t]) * n + i];
        }
        f(i, j) = s;
      }
    }
  }
  return out;
}

}  // namespace spinn
