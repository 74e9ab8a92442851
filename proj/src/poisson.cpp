#include "spinn/poisson.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "spinn/error.hpp"

namespace spinn {

ScalarField neumann_laplacian(const ScalarField& p) {
  const Grid2D& grid = p.grid();
  const int n = grid.n();
  const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
  ScalarField out(grid);
  for (int j = 0; j < n; ++j) {
    const int jm = j > 0 ? j - 1 : 0;
    const int jp = j < n - 1 ? j + 1 : n - 1;
    for (int i = 0; i < n; ++i) {
      const int im = i > 0 ? i - 1 : 0;
      const int ip = i < n - 1 ? i + 1 : n - 1;
      const double c = p(i, j);
      out(i, j) = (p(ip, j) + p(im, j) + p(i, jp) + p(i, jm) - 4.0 * c) * inv_dx2;
    }
  }
  return out;
}

NeumannPoissonSolver::NeumannPoissonSolver(Grid2D grid)
    : grid_(grid), basis_(grid.size()), eigenvalues_(grid.n()) {
  const int n = grid.n();
  const double dx = grid.dx();
  for (int k = 0; k < n; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) {
      basis_[static_cast<std::size_t>(i) * n + k] =
          scale * std::cos(std::numbers::pi * k * (i + 0.5) / n);
    }
    const double s = std::sin(std::numbers::pi * k / (2.0 * n));
    eigenvalues_[k] = -4.0 * s * s / (dx * dx);
  }
}

namespace {

// c = a * b for n x n row-major matrices. transpose_a / transpose_b select A^T / B^T.
void matmul(const double* a, const double* b, double* c, int n, bool transpose_a,
            bool transpose_b) {
  for (int r = 0; r < n; ++r) {
    double* crow = c + static_cast<std::size_t>(r) * n;
    for (int col = 0; col < n; ++col) crow[col] = 0.0;
    for (int k = 0; k < n; ++k) {
      const double ark = transpose_a ? a[static_cast<std::size_t>(k) * n + r]
                                     : a[static_cast<std::size_t>(r) * n + k];
      if (!transpose_b) {
        const double* brow = b + static_cast<std::size_t>(k) * n;
        for (int col = 0; col < n; ++col) crow[col] += ark * brow[col];
      } else {
        for (int col = 0; col < n; ++col) crow[col] += ark * b[static_cast<std::size_t>(col) * n + k];
      }
    }
  }
}

}  // namespace

ScalarField NeumannPoissonSolver::apply_inverse(const ScalarField& r) const {
  const int n = grid_.n();
  const std::size_t size = grid_.size();
  std::vector<double> tmp(size);
  std::vector<double> spec(size);
  // Values are stored R[j][i]; spectral coefficients C = Q^T R Q.
  matmul(basis_.data(), r.values().data(), tmp.data(), n, true, false);
  matmul(tmp.data(), basis_.data(), spec.data(), n, false, false);
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      const std::size_t idx = static_cast<std::size_t>(l) * n + k;
      spec[idx] = (l == 0 && k == 0) ? 0.0 : spec[idx] / (eigenvalues_[l] + eigenvalues_[k]);
    }
  }
  std::vector<double> out(size);
  matmul(basis_.data(), spec.data(), tmp.data(), n, false, false);
  matmul(tmp.data(), basis_.data(), out.data(), n, false, true);
  return ScalarField(grid_, std::move(out));
}

PoissonSolution NeumannPoissonSolver::solve(const ScalarField& rhs, double tol,
                                            int max_iterations) const {
  require_same_grid(grid_, rhs.grid(), "solve_neumann_poisson");
  if (!(tol > 0.0)) throw InvalidArgument("Poisson tolerance must be positive");
  if (!rhs.all_finite()) throw InvalidArgument("Poisson right-hand side is not finite");
  if (max_iterations < 0) max_iterations = 10 * static_cast<int>(grid_.size());

  ScalarField target = rhs;
  const double rhs_mean = mean(rhs);
  for (double& v : target.values()) v -= rhs_mean;

  ScalarField p(grid_);
  ScalarField residual = target;
  double res_norm = l2_norm(residual);
  double best = res_norm;
  int iterations = 0;
  int stalled = 0;
  while (res_norm > tol) {
    if (iterations >= max_iterations || stalled >= 3) {
      throw NonConvergence("Neumann Poisson solve stopped at residual " + std::to_string(best) +
                               " after " + std::to_string(iterations) + " iterations (tol " +
                               std::to_string(tol) + ")",
                           best);
    }
    p += apply_inverse(residual);
    const double p_mean = mean(p);
    for (double& v : p.values()) v -= p_mean;
    residual = target - neumann_laplacian(p);
    res_norm = l2_norm(residual);
    ++iterations;
    if (res_norm < best) {
      best = res_norm;
      stalled = 0;
    } else {
      ++stalled;
    }
  }
  return {std::move(p), res_norm, iterations};
}

PoissonSolution solve_neumann_poisson(const ScalarField& rhs, double tol) {
  return NeumannPoissonSolver(rhs.grid()).solve(rhs, tol);
}

ScalarField pressure_rhs(const VectorField& z_star, const VectorField& g, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  VectorField w = z_star;
  w.axpy(dt, g);
  ScalarField out = divergence(w);
  out *= 1.0 / dt;
  return out;
}

}  // namespace spinn
