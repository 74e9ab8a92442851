#pragma once

#include <vector>

#include "spinn/fields.hpp"

namespace spinn {

struct PoissonSolution {
  ScalarField p;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Five-point Laplacian with homogeneous Neumann closure: the ghost node
/// outside each boundary face mirrors the node just inside it.
ScalarField neumann_laplacian(const ScalarField& p);

/// Transform solver for the Neumann problem. The mirrored-ghost operator is
/// diagonalised by the DCT-II basis, so one solve is four dense n x n
/// products; a few rounds of residual correction bring the residual under
/// the tolerance. The object is immutable after construction and may be
/// shared across threads.
class NeumannPoissonSolver {
 public:
  explicit NeumannPoissonSolver(Grid2D grid);

  const Grid2D& grid() const noexcept { return grid_; }

  /// Solves Lap p = rhs - mean(rhs) and returns the zero-mean p. Throws
  /// NonConvergence when the residual stays above tol after max_iterations
  /// correction rounds (default 10 n^2) or stops improving.
  PoissonSolution solve(const ScalarField& rhs, double tol = 1e-8, int max_iterations = -1) const;

 private:
  ScalarField apply_inverse(const ScalarField& r) const;

  Grid2D grid_;
  std::vector<double> basis_;       // orthonormal DCT-II, basis_[i * n + k]
  std::vector<double> eigenvalues_;  // of the 1D Neumann second difference
};

PoissonSolution solve_neumann_poisson(const ScalarField& rhs, double tol = 1e-8);

/// div(z* + dt g) / dt, the right-hand side of the pressure equation.
ScalarField pressure_rhs(const VectorField& z_star, const VectorField& g, double dt);

}  // namespace spinn
