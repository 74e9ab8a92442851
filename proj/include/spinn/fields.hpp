#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace spinn {

enum class Axis { X1 = 1, X2 = 2 };

/// Uniform square grid on [0, 2pi]^2.
///
/// Nodes sit at the centres of the n x n cells, x_i = (i + 1/2) dx with
/// dx = 2pi / n, so k x k blocks of nodes tile the domain exactly. Storage is
/// row-major with x1 varying fastest: index(i, j) = j * n + i. The outermost
/// ring of nodes is the boundary ring where no-slip is imposed.
class Grid2D {
 public:
  explicit Grid2D(int n);

  int n() const noexcept { return n_; }
  int nx() const noexcept { return n_; }
  int ny() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_) * n_; }

  double coord(int i) const noexcept { return (i + 0.5) * dx_; }
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * n_ + i;
  }
  bool on_boundary(int i, int j) const noexcept {
    return i == 0 || j == 0 || i == n_ - 1 || j == n_ - 1;
  }

  friend bool operator==(const Grid2D& a, const Grid2D& b) noexcept { return a.n_ == b.n_; }

 private:
  int n_;
  double dx_;
};

class ScalarField {
 public:
  explicit ScalarField(Grid2D grid);
  ScalarField(Grid2D grid, std::vector<double> values);

  static ScalarField from_function(Grid2D grid, const std::function<double(double, double)>& f);
  static ScalarField constant(Grid2D grid, double c);

  const Grid2D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }
  double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool all_finite() const noexcept;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s) noexcept;
  /// this += s * other
  ScalarField& axpy(double s, const ScalarField& other);

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

/// Two-component velocity-like field; both components share one grid.
class VectorField {
 public:
  explicit VectorField(Grid2D grid);
  VectorField(ScalarField c1, ScalarField c2);

  static VectorField from_function(Grid2D grid, const std::function<double(double, double)>& f1,
                                   const std::function<double(double, double)>& f2);

  const Grid2D& grid() const noexcept { return c1_.grid(); }

  const ScalarField& c1() const noexcept { return c1_; }
  const ScalarField& c2() const noexcept { return c2_; }
  ScalarField& c1() noexcept { return c1_; }
  ScalarField& c2() noexcept { return c2_; }

  /// Component by 1-based index, matching the (u1, u2) naming.
  const ScalarField& component(int i) const;
  ScalarField& component(int i);

  bool all_finite() const noexcept { return c1_.all_finite() && c2_.all_finite(); }

  VectorField& operator+=(const VectorField& other);
  VectorField& operator-=(const VectorField& other);
  VectorField& operator*=(double s) noexcept;
  VectorField& axpy(double s, const VectorField& other);

  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }

 private:
  ScalarField c1_;
  ScalarField c2_;
};

// Finite-difference operators. Every node uses the same stencil; values
// outside the domain are taken as zero.

/// Central first derivative (f_{i+1} - f_{i-1}) / (2 dx).
ScalarField ddx(const ScalarField& f, Axis axis);
/// Second difference along one axis divided by dx^2.
ScalarField second_difference(const ScalarField& f, Axis axis);
/// Five-point Laplacian.
ScalarField laplacian(const ScalarField& f);
ScalarField divergence(const VectorField& v);
VectorField gradient(const ScalarField& p);
VectorField laplacian(const VectorField& v);

/// Upwinded (v . grad) v. Each product z_a dz_b/dx_a is evaluated as
/// z_a * central(z_b) - |z_a| * (z_b,i+1 - 2 z_b,i + z_b,i-1) / (2 dx).
VectorField advect_upwind(const VectorField& v);

/// Vector-Jacobian product of advect_upwind at v against cotangent w,
/// i.e. J(v)^T w. Uses sign(0) = 0 for the |z_a| kink.
VectorField advect_upwind_vjp(const VectorField& v, const VectorField& w);

/// Sets the boundary ring to zero (no-slip).
void zero_boundary(ScalarField& f) noexcept;
void zero_boundary(VectorField& v) noexcept;

double dot(const ScalarField& a, const ScalarField& b);
double dot(const VectorField& a, const VectorField& b);
double l2_norm(const ScalarField& f);
double l2_norm(const VectorField& v);
double mean(const ScalarField& f) noexcept;
double max_abs(const ScalarField& f) noexcept;
/// Max |f| over nodes not on the boundary ring.
double interior_max_abs(const ScalarField& f) noexcept;
/// Kinetic energy 1/2 sum |v|^2 dx^2.
double kinetic_energy(const VectorField& v);

void require_same_grid(const Grid2D& a, const Grid2D& b, const char* where);

}  // namespace spinn
