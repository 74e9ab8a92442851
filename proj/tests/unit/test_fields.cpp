#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "spinn/error.hpp"
#include "spinn/fields.hpp"

using namespace spinn;
using spinn::test::max_interior_error;

TEST_CASE("grid geometry") {
  const Grid2D g(16);
  CHECK(g.dx() == doctest::Approx(2.0 * M_PI / 16));
  CHECK(g.coord(0) == doctest::Approx(g.dx() / 2));
  CHECK(g.coord(15) == doctest::Approx(2.0 * M_PI - g.dx() / 2));
  CHECK(g.index(3, 2) == 2u * 16u + 3u);
  CHECK(g.on_boundary(0, 5));
  CHECK(g.on_boundary(5, 15));
  CHECK_FALSE(g.on_boundary(1, 14));
  CHECK_THROWS_AS(Grid2D(4), InvalidArgument);
  CHECK_THROWS_AS(Grid2D(0), InvalidArgument);
}

TEST_CASE("field arithmetic requires one grid") {
  ScalarField a(Grid2D(8)), b(Grid2D(16));
  CHECK_THROWS_AS(a += b, IncompatibleGrid);
  CHECK_THROWS_AS(ScalarField(Grid2D(8), std::vector<double>(10)), ShapeMismatch);
  VectorField v(Grid2D(8));
  CHECK_THROWS_AS(v.component(3), InvalidArgument);
}

TEST_CASE("ddx is exact on linear functions in the interior") {
  const Grid2D g(16);
  const auto f = ScalarField::from_function(g, [](double x1, double x2) { return 3.0 * x1 - 2.0 * x2 + 1.0; });
  const auto d1 = ddx(f, Axis::X1);
  const auto d2 = ddx(f, Axis::X2);
  CHECK(max_interior_error(d1, ScalarField::constant(g, 3.0)) < 1e-12);
  CHECK(max_interior_error(d2, ScalarField::constant(g, -2.0)) < 1e-12);
}

TEST_CASE("derivatives of a constant vanish away from the boundary") {
  const Grid2D g(12);
  const auto f = ScalarField::constant(g, 4.5);
  CHECK(max_interior_error(ddx(f, Axis::X1), ScalarField(g)) == 0.0);
  CHECK(max_interior_error(laplacian(f), ScalarField(g)) == 0.0);
}

TEST_CASE("boundary nodes see zero ghosts") {
  const Grid2D g(8);
  const auto f = ScalarField::constant(g, 1.0);
  const auto d = ddx(f, Axis::X1);
  CHECK(d(0, 3) == doctest::Approx(1.0 / (2.0 * g.dx())));
  CHECK(d(7, 3) == doctest::Approx(-1.0 / (2.0 * g.dx())));
  const auto l = laplacian(f);
  CHECK(l(0, 0) == doctest::Approx(-2.0 / (g.dx() * g.dx())));
}

TEST_CASE("laplacian is exact on quadratics in the interior") {
  const Grid2D g(16);
  const auto f = ScalarField::from_function(g, [](double x1, double) { return x1 * x1; });
  CHECK(max_interior_error(laplacian(f), ScalarField::constant(g, 2.0)) < 1e-10);
  const auto h = ScalarField::from_function(g, [](double x1, double x2) { return x1 * x1 + 3 * x2 * x2; });
  CHECK(max_interior_error(laplacian(h), ScalarField::constant(g, 8.0)) < 1e-10);
}

TEST_CASE("first derivative converges at second order") {
  auto err = [](int n) {
    const Grid2D g(n);
    const auto f = ScalarField::from_function(g, [](double x1, double) { return std::sin(x1); });
    const auto exact = ScalarField::from_function(g, [](double x1, double) { return std::cos(x1); });
    return max_interior_error(ddx(f, Axis::X1), exact);
  };
  const double ratio = err(32) / err(64);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("divergence examples") {
  const Grid2D g(16);
  const auto v = VectorField::from_function(g, [](double x1, double) { return x1; },
                                            [](double, double x2) { return -x2; });
  CHECK(max_interior_error(divergence(v), ScalarField(g)) < 1e-12);
  const auto w = VectorField::from_function(g, [](double x1, double) { return x1; },
                                            [](double, double x2) { return x2; });
  CHECK(max_interior_error(divergence(w), ScalarField::constant(g, 2.0)) < 1e-12);
}

TEST_CASE("gradient is the negative adjoint of divergence") {
  const Grid2D g(10);
  const auto p = spinn::test::random_scalar(g, 1);
  const auto v = spinn::test::random_vector(g, 2);
  CHECK(dot(gradient(p), v) == doctest::Approx(-dot(p, divergence(v))).epsilon(1e-12));
}

TEST_CASE("laplacian is symmetric under zero extension") {
  const Grid2D g(10);
  const auto a = spinn::test::random_scalar(g, 3);
  const auto b = spinn::test::random_scalar(g, 4);
  CHECK(dot(laplacian(a), b) == doctest::Approx(dot(a, laplacian(b))).epsilon(1e-12));
}

TEST_CASE("upwind advection") {
  const Grid2D g(16);
  SUBCASE("uniform flow advects a linear profile exactly") {
    // v = (c, 0) is constant, so (v . grad) v = 0 away from the boundary.
    const auto v = VectorField::from_function(g, [](double, double) { return 0.7; },
                                              [](double, double) { return 0.0; });
    CHECK(max_interior_error(advect_upwind(v).c1(), ScalarField(g)) < 1e-12);
  }
  SUBCASE("shear flow") {
    // v = (x2, 0): (v . grad) v = (x2 d/dx1 x2, 0) = 0 everywhere inside.
    const auto v = VectorField::from_function(g, [](double, double x2) { return x2; },
                                              [](double, double) { return 0.0; });
    CHECK(max_interior_error(advect_upwind(v).c1(), ScalarField(g)) < 1e-12);
  }
  SUBCASE("linear stretching") {
    // v = (x1, 0): (v . grad) v = (x1, 0). The upwind term vanishes on linears.
    const auto v = VectorField::from_function(g, [](double x1, double) { return x1; },
                                              [](double, double) { return 0.0; });
    const auto exact = ScalarField::from_function(g, [](double x1, double) { return x1; });
    CHECK(max_interior_error(advect_upwind(v).c1(), exact) < 1e-12);
  }
  SUBCASE("zero field") { CHECK(l2_norm(advect_upwind(VectorField(g))) == 0.0); }
}

TEST_CASE("upwind advection VJP passes the dot-product test") {
  const Grid2D g(10);
  const auto v = spinn::test::random_vector(g, 5);
  const auto w = spinn::test::random_vector(g, 6);
  const auto dv = spinn::test::random_vector(g, 7);
  const double h = 1e-6;
  VectorField vp = v, vm = v;
  vp.axpy(h, dv);
  vm.axpy(-h, dv);
  VectorField jvp = advect_upwind(vp);
  jvp -= advect_upwind(vm);
  jvp *= 1.0 / (2 * h);
  const double lhs = dot(jvp, w);
  const double rhs = dot(dv, advect_upwind_vjp(v, w));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("reductions and boundary handling") {
  const Grid2D g(8);
  auto f = ScalarField::constant(g, 2.0);
  CHECK(mean(f) == doctest::Approx(2.0));
  CHECK(l2_norm(f) == doctest::Approx(16.0));
  zero_boundary(f);
  CHECK(f(0, 0) == 0.0);
  CHECK(f(7, 4) == 0.0);
  CHECK(f(3, 3) == 2.0);
  CHECK(interior_max_abs(f) == 2.0);
  VectorField v(ScalarField::constant(g, 1.0), ScalarField::constant(g, 1.0));
  CHECK(kinetic_energy(v) == doctest::Approx(0.5 * 2.0 * 64 * g.dx() * g.dx()));
  f[0] = NAN;
  CHECK_FALSE(f.all_finite());
}
