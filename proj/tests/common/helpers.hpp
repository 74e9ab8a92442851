#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "spinn/fields.hpp"

namespace spinn::test {

inline ScalarField random_scalar(const Grid2D& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  ScalarField f(g);
  for (auto& v : f.values()) v = dist(rng);
  return f;
}

inline VectorField random_vector(const Grid2D& g, std::uint64_t seed) {
  return VectorField(random_scalar(g, seed), random_scalar(g, seed + 7919));
}

inline double max_interior_error(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  const int n = a.grid().n();
  for (int j = 1; j < n - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  }
  return m;
}

/// Max error over nodes at least `margin` away from every face.
inline double max_error_inside(const ScalarField& a, const ScalarField& b, int margin) {
  double m = 0.0;
  const int n = a.grid().n();
  for (int j = margin; j < n - margin; ++j) {
    for (int i = margin; i < n - margin; ++i) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  }
  return m;
}

}  // namespace spinn::test
