#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "spinn/error.hpp"
#include "spinn/spinn.hpp"

using namespace spinn;

namespace {

LowResFrame constant_frame(int n_low, double a, double b) {
  LowResFrame f(n_low);
  for (auto& v : f.values[0]) v = a;
  for (auto& v : f.values[1]) v = b;
  return f;
}

}  // namespace

TEST_CASE("zero-weight network degenerates to the tentative step") {
  const Grid2D g(16);
  SolverConfig cfg;
  cfg.gamma = 0;
  const auto params = SpinnParams::zeros(UNetSpec{2, 2, 3, {4, 8}});
  const auto z = make_initial_condition(g, 1.0);
  const auto y = pool_average(z, PartitionSpec::for_grid(g, 4));
  const auto out = spinn_step(z, y, params, cfg);
  const auto ts = tentative_velocity(z, VectorField(g), cfg);
  CHECK(max_abs(out.c1() - ts.c1()) == 0.0);
  CHECK(max_abs(out.c2() - ts.c2()) == 0.0);
}

TEST_CASE("known forcing adds exactly f dt") {
  const Grid2D g(16);
  SolverConfig cfg;
  cfg.gamma = 10;
  const auto params = SpinnParams::initialize(UNetSpec{2, 2, 3, {4, 8}}, 5);
  const auto z = make_initial_condition(g, 1.0);
  const auto y = pool_average(spinn::test::random_vector(g, 1), PartitionSpec::for_grid(g, 4));
  const auto f = make_forcing(cfg.forcing, g);
  const auto a = spinn_step(z, y, params, cfg);
  const auto b = spinn_step_known_forcing(z, y, params, f, cfg);
  VectorField expected = a;
  expected.axpy(cfg.dt, f);
  zero_boundary(expected);
  CHECK(max_abs(b.c1() - expected.c1()) < 1e-15);
  const auto c = spinn_step_known_forcing(z, y, params, VectorField(g), cfg);
  CHECK(max_abs(c.c1() - a.c1()) == 0.0);
}

TEST_CASE("poisson oracle in place of the network reproduces the observer step") {
  const Grid2D g(32);
  SolverConfig cfg;
  cfg.gamma = 10;
  const ChorinStepper st(g, cfg);
  const auto z = make_initial_condition(g, 1.0);
  const auto y = pool_average(spinn::test::random_vector(g, 2), PartitionSpec::for_grid(g, 2));
  const Corrector oracle = [&](const VectorField& zs) { return st.pressure_correction(zs, st.forcing()); };
  const auto a = spinn_step(z, &y, oracle, cfg);
  const auto b = st.step_observer(z, &y, st.forcing());
  CHECK(max_abs(a.c1() - b.c1()) <= 1e-10);
  CHECK(max_abs(a.c2() - b.c2()) <= 1e-10);
}

TEST_CASE("loss by hand on constant fields") {
  const Grid2D g(8);
  const double dx = g.dx();
  std::vector<LowResFrame> frames = {constant_frame(2, 0, 0), constant_frame(2, 0.5, 2),
                                     constant_frame(2, 1, 1)};
  const Window w{frames, 1, 2};
  std::vector<VectorField> states = {
      VectorField(ScalarField::constant(g, 1.0), ScalarField::constant(g, 2.0)), VectorField(g)};
  // Misfit: 4 blocks x 0.5^2 at step 1, 4 blocks x (1 + 1) at step 2.
  CHECK(loss(states, w, 0.0) == doctest::Approx(9.0));
  // Zero ghosts put the divergence of the constant state on the boundary
  // ring: 12 side nodes at 1/(2dx), 12 at 1/dx, corners at 1.5, 0.5, 0.5, 1.5 over dx.
  CHECK(loss(states, w, 0.5) == doctest::Approx(9.0 + 0.5 * 20.0 / (dx * dx)));
  CHECK(loss(states, w, 0.5) >= 0.0);
  CHECK_THROWS_AS(loss(std::span(states).first(1), w, 0.0), ShapeMismatch);
}

TEST_CASE("misfit only at frame-aligned states") {
  const Grid2D g(8);
  std::vector<LowResFrame> frames = {constant_frame(2, 0, 0), constant_frame(2, 1, 0)};
  const Window w{frames, 2, 2};
  std::vector<VectorField> states = {VectorField(g), VectorField(g)};
  // State 1 sits between frames; state 2 meets frame 1.
  CHECK(loss(states, w, 0.0) == doctest::Approx(4.0));
}

TEST_CASE("window validation") {
  std::vector<LowResFrame> frames(2, LowResFrame(2));
  CHECK_THROWS_AS((Window{frames, 0, 2}.validate()), InvalidArgument);
  CHECK_THROWS_AS((Window{frames, 1, 0}.validate()), InvalidArgument);
  CHECK_THROWS_AS((Window{frames, 1, 3}.validate()), InvalidArgument);
  CHECK_NOTHROW((Window{frames, 1, 2}.validate()));
}

TEST_CASE("rollout and loss gradient") {
  const Grid2D g(8);
  SolverConfig cfg;
  cfg.gamma = 10;
  cfg.dt = 0.01;
  const UNetSpec spec{2, 2, 3, {3, 4}};
  const SpinnModel model(g, cfg, spec);
  const auto params = SpinnParams::initialize(spec, 7);
  VectorField z0 = spinn::test::random_vector(g, 3);
  zero_boundary(z0);
  const auto part = PartitionSpec::for_grid(g, 2);
  std::vector<LowResFrame> frames;
  for (int k = 0; k < 4; ++k) frames.push_back(pool_average(spinn::test::random_vector(g, 10 + k), part));
  const Window w{frames, 1, 3};

  const auto states = model.rollout(z0, w, params.weights);
  REQUIRE(states.size() == 3);
  CHECK(model.rollout(z0, w, params.weights)[2].c1().values()[10] == states[2].c1().values()[10]);
  CHECK(max_abs(model.step(z0, &frames[0], params.weights).c1() - states[0].c1()) == 0.0);

  const double lambda = 0.1;
  const auto lg = model.loss_and_gradient(z0, w, params.weights, lambda);
  CHECK(lg.loss == doctest::Approx(loss(states, w, lambda)).epsilon(1e-13));
  std::mt19937_64 rng(17);
  const double h = 1e-5;
  for (int t = 0; t < 6; ++t) {
    const std::size_t k = rng() % params.weights.size();
    auto pp = params.weights, pm = params.weights;
    pp[k] += h;
    pm[k] -= h;
    const double fd = (loss(model.rollout(z0, w, pp), w, lambda) - loss(model.rollout(z0, w, pm), w, lambda)) / (2 * h);
    CHECK(lg.grad[k] == doctest::Approx(fd).epsilon(1e-4).scale(1e-6));
  }
}

TEST_CASE("model rejects incompatible grids") {
  SolverConfig cfg;
  CHECK_THROWS_AS(SpinnModel(Grid2D(10), cfg, UNetSpec{2, 2, 3, {4, 8, 16}}), ShapeMismatch);
  CHECK_THROWS_AS(SpinnModel(Grid2D(8), cfg, UNetSpec{2, 2, 3, {4, 8}}, VectorField(Grid2D(16))),
                  IncompatibleGrid);
}

TEST_CASE("initialised rollouts stay finite at desk scale") {
  const Grid2D g(32);
  const auto u = make_initial_condition(g, 1.0);
  const auto part = PartitionSpec::for_grid(g, 2);
  std::vector<LowResFrame> frames(41, pool_average(u, part));
  const auto params = SpinnParams::initialize(UNetSpec{}, 1);
  for (double gamma : {0.0, 2.0, 10.0, 100.0}) {
    SolverConfig cfg;
    cfg.gamma = gamma;
    const SpinnModel model(g, cfg, params.spec);
    const auto states = model.rollout(u, Window{frames, 5, 200}, params.weights);
    CHECK(states.back().all_finite());
  }
}
