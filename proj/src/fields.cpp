#include "spinn/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "spinn/error.hpp"

namespace spinn {

Grid2D::Grid2D(int n) : n_(n), dx_(2.0 * std::numbers::pi / n) {
  if (n < 8) {
    throw InvalidArgument("grid needs at least 8 nodes per side, got " + std::to_string(n));
  }
}

void require_same_grid(const Grid2D& a, const Grid2D& b, const char* where) {
  if (!(a == b)) {
    throw IncompatibleGrid(std::string(where) + ": grids differ (" + std::to_string(a.n()) +
                           " vs " + std::to_string(b.n()) + ")");
  }
}

// --- ScalarField -----------------------------------------------------------

ScalarField::ScalarField(Grid2D grid) : grid_(grid), values_(grid.size(), 0.0) {}

ScalarField::ScalarField(Grid2D grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw ShapeMismatch("scalar field expects " + std::to_string(grid_.size()) + " values, got " +
                        std::to_string(values_.size()));
  }
}

ScalarField ScalarField::from_function(Grid2D grid,
                                       const std::function<double(double, double)>& f) {
  ScalarField out(grid);
  for (int j = 0; j < grid.n(); ++j) {
    for (int i = 0; i < grid.n(); ++i) {
      out(i, j) = f(grid.coord(i), grid.coord(j));
    }
  }
  return out;
}

ScalarField ScalarField::constant(Grid2D grid, double c) {
  return ScalarField(grid, std::vector<double>(grid.size(), c));
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  require_same_grid(grid_, other.grid_, "ScalarField +=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  require_same_grid(grid_, other.grid_, "ScalarField -=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::axpy(double s, const ScalarField& other) {
  require_same_grid(grid_, other.grid_, "ScalarField axpy");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += s * other.values_[k];
  return *this;
}

// --- VectorField -----------------------------------------------------------

VectorField::VectorField(Grid2D grid) : c1_(grid), c2_(grid) {}

VectorField::VectorField(ScalarField c1, ScalarField c2) : c1_(std::move(c1)), c2_(std::move(c2)) {
  require_same_grid(c1_.grid(), c2_.grid(), "VectorField");
}

VectorField VectorField::from_function(Grid2D grid,
                                       const std::function<double(double, double)>& f1,
                                       const std::function<double(double, double)>& f2) {
  return VectorField(ScalarField::from_function(grid, f1), ScalarField::from_function(grid, f2));
}

const ScalarField& VectorField::component(int i) const {
  if (i == 1) return c1_;
  if (i == 2) return c2_;
  throw InvalidArgument("component index must be 1 or 2, got " + std::to_string(i));
}

ScalarField& VectorField::component(int i) {
  return const_cast<ScalarField&>(std::as_const(*this).component(i));
}

VectorField& VectorField::operator+=(const VectorField& other) {
  c1_ += other.c1_;
  c2_ += other.c2_;
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& other) {
  c1_ -= other.c1_;
  c2_ -= other.c2_;
  return *this;
}

VectorField& VectorField::operator*=(double s) noexcept {
  c1_ *= s;
  c2_ *= s;
  return *this;
}

VectorField& VectorField::axpy(double s, const VectorField& other) {
  c1_.axpy(s, other.c1_);
  c2_.axpy(s, other.c2_);
  return *this;
}

// --- stencils --------------------------------------------------------------

namespace {

// out = a * (f_{+1} - f_{-1}) + b * (f_{+1} - 2 f + f_{-1}) along axis, zero ghosts.
void three_point(const ScalarField& f, Axis axis, double a, double b, ScalarField& out) {
  const int n = f.grid().n();
  const auto in = f.values();
  auto res = out.values();
  if (axis == Axis::X1) {
    for (int j = 0; j < n; ++j) {
      const double* row = in.data() + static_cast<std::size_t>(j) * n;
      double* o = res.data() + static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) {
        const double fm = i > 0 ? row[i - 1] : 0.0;
        const double fp = i < n - 1 ? row[i + 1] : 0.0;
        o[i] = a * (fp - fm) + b * (fp - 2.0 * row[i] + fm);
      }
    }
  } else {
    for (int j = 0; j < n; ++j) {
      const double* row = in.data() + static_cast<std::size_t>(j) * n;
      const double* below = j > 0 ? row - n : nullptr;
      const double* above = j < n - 1 ? row + n : nullptr;
      double* o = res.data() + static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) {
        const double fm = below ? below[i] : 0.0;
        const double fp = above ? above[i] : 0.0;
        o[i] = a * (fp - fm) + b * (fp - 2.0 * row[i] + fm);
      }
    }
  }
}

}  // namespace

ScalarField ddx(const ScalarField& f, Axis axis) {
  ScalarField out(f.grid());
  three_point(f, axis, 0.5 / f.grid().dx(), 0.0, out);
  return out;
}

ScalarField second_difference(const ScalarField& f, Axis axis) {
  ScalarField out(f.grid());
  const double dx = f.grid().dx();
  three_point(f, axis, 0.0, 1.0 / (dx * dx), out);
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  ScalarField out = second_difference(f, Axis::X1);
  out += second_difference(f, Axis::X2);
  return out;
}

VectorField laplacian(const VectorField& v) { return {laplacian(v.c1()), laplacian(v.c2())}; }

ScalarField divergence(const VectorField& v) {
  ScalarField out = ddx(v.c1(), Axis::X1);
  out += ddx(v.c2(), Axis::X2);
  return out;
}

VectorField gradient(const ScalarField& p) { return {ddx(p, Axis::X1), ddx(p, Axis::X2)}; }

namespace {

// z_a * d z_b / dx_a with the upwind correction.
ScalarField upwind_product(const ScalarField& za, const ScalarField& zb, Axis axis) {
  const double dx = za.grid().dx();
  ScalarField central(za.grid());
  ScalarField diffusive(za.grid());
  three_point(zb, axis, 0.5 / dx, 0.0, central);
  three_point(zb, axis, 0.0, 0.5 / dx, diffusive);
  ScalarField out(za.grid());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = za[k] * central[k] - std::abs(za[k]) * diffusive[k];
  }
  return out;
}

double sign(double x) noexcept { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

VectorField advect_upwind(const VectorField& v) {
  ScalarField a1 = upwind_product(v.c1(), v.c1(), Axis::X1);
  a1 += upwind_product(v.c2(), v.c1(), Axis::X2);
  ScalarField a2 = upwind_product(v.c1(), v.c2(), Axis::X1);
  a2 += upwind_product(v.c2(), v.c2(), Axis::X2);
  return {std::move(a1), std::move(a2)};
}

VectorField advect_upwind_vjp(const VectorField& v, const VectorField& w) {
  require_same_grid(v.grid(), w.grid(), "advect_upwind_vjp");
  const Grid2D grid = v.grid();
  const double dx = grid.dx();
  const Axis axes[2] = {Axis::X1, Axis::X2};
  VectorField g(grid);

  // Derivative through the advecting velocity z_a (pointwise coefficient).
  for (int a = 0; a < 2; ++a) {
    const ScalarField& za = v.component(a + 1);
    ScalarField& ga = g.component(a + 1);
    for (int b = 0; b < 2; ++b) {
      const ScalarField& zb = v.component(b + 1);
      const ScalarField& wb = w.component(b + 1);
      ScalarField central(grid);
      ScalarField diffusive(grid);
      three_point(zb, axes[a], 0.5 / dx, 0.0, central);
      three_point(zb, axes[a], 0.0, 0.5 / dx, diffusive);
      for (std::size_t k = 0; k < ga.size(); ++k) {
        ga[k] += wb[k] * (central[k] - sign(za[k]) * diffusive[k]);
      }
    }
  }

  // Derivative through the advected component z_b: central is antisymmetric,
  // the second difference symmetric.
  for (int b = 0; b < 2; ++b) {
    const ScalarField& wb = w.component(b + 1);
    ScalarField& gb = g.component(b + 1);
    for (int a = 0; a < 2; ++a) {
      const ScalarField& za = v.component(a + 1);
      ScalarField zw(grid);
      ScalarField absw(grid);
      for (std::size_t k = 0; k < zw.size(); ++k) {
        zw[k] = za[k] * wb[k];
        absw[k] = std::abs(za[k]) * wb[k];
      }
      ScalarField central(grid);
      ScalarField diffusive(grid);
      three_point(zw, axes[a], 0.5 / dx, 0.0, central);
      three_point(absw, axes[a], 0.0, 0.5 / dx, diffusive);
      for (std::size_t k = 0; k < gb.size(); ++k) gb[k] -= central[k] + diffusive[k];
    }
  }
  return g;
}

void zero_boundary(ScalarField& f) noexcept {
  const int n = f.grid().n();
  for (int i = 0; i < n; ++i) {
    f(i, 0) = 0.0;
    f(i, n - 1) = 0.0;
    f(0, i) = 0.0;
    f(n - 1, i) = 0.0;
  }
}

void zero_boundary(VectorField& v) noexcept {
  zero_boundary(v.c1());
  zero_boundary(v.c2());
}

double dot(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "dot");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double dot(const VectorField& a, const VectorField& b) {
  return dot(a.c1(), b.c1()) + dot(a.c2(), b.c2());
}

double l2_norm(const ScalarField& f) { return std::sqrt(dot(f, f)); }
double l2_norm(const VectorField& v) { return std::sqrt(dot(v, v)); }

double mean(const ScalarField& f) noexcept {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s / static_cast<double>(f.size());
}

double max_abs(const ScalarField& f) noexcept {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double interior_max_abs(const ScalarField& f) noexcept {
  const int n = f.grid().n();
  double m = 0.0;
  for (int j = 1; j < n - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) m = std::max(m, std::abs(f(i, j)));
  }
  return m;
}

double kinetic_energy(const VectorField& v) {
  const double dx = v.grid().dx();
  return 0.5 * dot(v, v) * dx * dx;
}

}  // namespace spinn
