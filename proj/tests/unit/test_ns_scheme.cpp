#include <cmath>
#include <random>

#include "doctest.h"
#include "opsplit/assembly.hpp"
#include "opsplit/errors.hpp"
#include "opsplit/mesh.hpp"
#include "opsplit/ns_scheme.hpp"
#include "test_helpers.hpp"

using namespace opsplit;

namespace {

struct Spaces {
  std::shared_ptr<const FeSpace> velocity, pressure;
};

Spaces taylor_hood(int n) {
  const auto mesh = build_uniform_unit_square(n);
  return {build_space(mesh, 2, 2), build_space(mesh, 1, 1)};
}

NsIntegrator make(const NsProblem& p, int n, TimeGrid grid, NsOptions opt = {}) {
  const auto s = taylor_hood(n);
  return NsIntegrator(p, s.velocity, s.pressure, grid, opt);
}

bool node_inflow(const VectorField& b, Point x, double t) {
  bool in = false;
  if (x.x == 0.0) in |= oracle::inflow_point(b, x, {-1, 0}, t);
  if (x.x == 1.0) in |= oracle::inflow_point(b, x, {1, 0}, t);
  if (x.y == 0.0) in |= oracle::inflow_point(b, x, {0, -1}, t);
  if (x.y == 1.0) in |= oracle::inflow_point(b, x, {0, 1}, t);
  return in;
}

}  // namespace

TEST_SUITE("property") {

TEST_CASE("Navier-Stokes zero data is a fixed point") {
  const auto integ = make(make_ns_problem({ProblemKind::NsZero}), 3, TimeGrid::from_steps(1.0, 5, 2));
  const auto r = integ.run();
  CHECK(!r.outcome.diverged);
  CHECK(r.steps_completed == 5);
  CHECK(testing::max_abs(r.outcome.state.velocity) == 0.0);
  CHECK(testing::max_abs(r.outcome.state.pressure) == 0.0);
}

TEST_CASE("Navier-Stokes m = 1 step is bitwise identical to the single-step scheme") {
  for (bool lumped : {false, true}) {
    NsOptions opt;
    opt.lumped_mass = lumped;
    const auto integ = make(make_ns_problem({ProblemKind::NsExample3}), 4, TimeGrid::from_steps(1.0, 20, 1), opt);
    NsState s = integ.initial_state();
    for (int n = 0; n < 3; ++n) {
      const auto a = integ.step(s, n);
      const auto b = integ.single_step(s, n);
      CHECK(a.state.velocity == b.state.velocity);
      CHECK(a.state.pressure == b.state.pressure);
      s = a.state;
    }
  }
}

TEST_CASE("reusing the saddle factorization matches refactorizing every step") {
  const auto p = make_ns_problem({ProblemKind::NsExample3, 100.0});
  const auto s = taylor_hood(4);
  const auto grid = TimeGrid::from_steps(0.1, 5, 2);
  NsOptions refactor;
  refactor.refactor_each_step = true;
  const auto a = NsIntegrator(p, s.velocity, s.pressure, grid).run().outcome.state;
  const auto b = NsIntegrator(p, s.velocity, s.pressure, grid, refactor).run().outcome.state;
  CHECK(testing::max_diff(a.velocity, b.velocity) < 1e-12);
  CHECK(testing::max_diff(a.pressure, b.pressure) < 1e-12);
}

TEST_CASE("discrete divergence vanishes and pressure has zero mean after each step") {
  for (auto kind : {ProblemKind::NsExample3, ProblemKind::NsExample4, ProblemKind::Cavity}) {
    const auto integ = make(make_ns_problem({kind}), 4, TimeGrid::from_steps(0.5, 5, 2));
    integ.run([&](int, const NsState& s) {
      CHECK(divergence_residual(integ.stokes(), s.velocity) < 1e-12);
      CHECK(std::abs(pressure_mean(integ.stokes(), s.pressure)) < 1e-12);
      return true;
    });
  }
}

}  // TEST_SUITE

TEST_CASE("rigid translation is preserved with zero pressure") {
  auto p = make_ns_problem({ProblemKind::NsZero, 10.0});
  p.u0 = p.u_b = p.exact_velocity = constant_vector_field({1.0, 0.5});
  const auto integ = make(p, 4, TimeGrid::from_steps(0.2, 4, 3));
  const auto r = integ.run();
  const auto& u = r.outcome.state.velocity;
  const int nodes = integ.velocity_space().num_nodes();
  for (int i = 0; i < nodes; ++i) {
    CHECK(u[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(u[nodes + i] == doctest::Approx(0.5).epsilon(1e-12));
  }
  CHECK(testing::max_abs(r.outcome.state.pressure) < 1e-10);
}

TEST_CASE("Navier-Stokes convection substep matches the dense oracle") {
  for (int n : {1, 2}) {
    auto p = make_ns_problem({ProblemKind::NsExample4, 50.0});
    const auto integ = make(p, n, TimeGrid::from_steps(1.0, 10, 1));
    const auto& space = integ.velocity_space();
    std::mt19937 rng(50 + n);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Vector u(space.num_dofs());
    for (auto& x : u) x = d(rng);
    const double t_lo = 0.4, dt = 0.05;
    const Vector got = integ.convection_substep(u, t_lo, dt);

    const auto rhs = oracle::ns_convection_rhs(space, u, p.u_b, t_lo, dt);
    std::vector<char> fixed(space.num_dofs(), 0);
    std::vector<double> value(space.num_dofs(), 0.0);
    for (int i = 0; i < space.num_dofs(); ++i) {
      const Point x = space.dof_coord(i);
      if (node_inflow(p.u_b, x, t_lo + dt)) {
        fixed[i] = 1;
        const Vec2 v = p.u_b(x, t_lo + dt);
        value[i] = space.component_of(i) == 0 ? v.x : v.y;
      }
    }
    const auto ref = testing::constrained_dense_solve(oracle::mass(space), rhs, fixed, value);
    CHECK(testing::max_diff(got, ref) < 1e-12);
  }
}

TEST_CASE("Stokes correction satisfies the discrete saddle equations") {
  const auto p = make_ns_problem({ProblemKind::NsExample3, 20.0});
  const auto integ = make(p, 3, TimeGrid::from_steps(1.0, 10));
  const auto& vel = integ.velocity_space();
  const auto u_star = interpolate(vel, p.exact_velocity, 0.05);
  const NsState s = integ.stokes_correction(u_star, 0.1);
  const auto& sys = integ.stokes();
  // A u + B^T p - (M u_star / dt + g) vanishes on free velocity rows.
  Vector r = sys.a_uu() * s.velocity;
  const Vector btp = sys.b().transpose() * s.pressure;
  const Vector mu = mass_matrix(vel) * u_star;
  const Vector g = load_vector(vel, p.g, 0.1);
  std::vector<char> fixed(vel.num_dofs(), 0);
  for (int f : sys.fixed_velocity_dofs()) fixed[f] = 1;
  double worst = 0.0;
  for (int i = 0; i < vel.num_dofs(); ++i) {
    if (fixed[i]) continue;
    worst = std::max(worst, std::abs(r[i] + btp[i] - mu[i] / sys.dt() - g[i]));
  }
  CHECK(worst < 1e-9);
  for (int f : sys.fixed_velocity_dofs()) {
    const Vec2 v = p.u_b(vel.dof_coord(f), 0.1);
    CHECK(s.velocity[f] == (vel.component_of(f) == 0 ? v.x : v.y));
  }
  CHECK(s.time == 0.1);
}

TEST_CASE("example 4 error is insensitive to the mesh") {
  // Velocity quadratic and pressure linear in space: P2/P1 error is purely temporal.
  const auto p = make_ns_problem({ProblemKind::NsExample4});
  std::vector<double> errors;
  for (int n : {2, 4, 8}) {
    const auto integ = make(p, n, TimeGrid::from_steps(1.0, 20, 2));
    const auto r = integ.run();
    errors.push_back(l2_error(integ.velocity_space(), r.outcome.state.velocity, p.exact_velocity, 1.0));
  }
  CHECK(errors[0] > 0.0);
  CHECK(std::abs(errors[1] / errors[0] - 1.0) < 0.1);
  CHECK(std::abs(errors[2] / errors[1] - 1.0) < 0.05);
}

TEST_CASE("lumped-mass convection step stays finite and accurate for smooth data") {
  NsOptions opt;
  opt.lumped_mass = true;
  const auto p = make_ns_problem({ProblemKind::NsExample3, 100.0});
  const auto integ = make(p, 8, TimeGrid::from_steps(0.05, 10, 1), opt);
  const auto r = integ.run();
  CHECK(!r.outcome.diverged);
  CHECK(l2_error(integ.velocity_space(), r.outcome.state.velocity, p.exact_velocity, 0.05) < 1e-2);
}

TEST_CASE("saddle handles go stale with their system") {
  const auto s = taylor_hood(2);
  auto sys = stokes_system(s.velocity, s.pressure, 0.1, 10.0);
  const auto handle = factorize_saddle(*sys);
  CHECK(handle.valid());
  const Vector rhs(sys->full_matrix().rows(), 0.0);
  CHECK_NOTHROW(solve_saddle(handle, rhs));
  CHECK_THROWS_AS(solve_saddle(handle, Vector(3, 0.0)), InvalidArgument);
  sys->invalidate();
  CHECK(!handle.valid());
  CHECK_THROWS_AS(solve_saddle(handle, rhs), StaleHandleError);
}

TEST_CASE("observer can stop a run early") {
  const auto integ = make(make_ns_problem({ProblemKind::Cavity}), 2, TimeGrid::from_steps(1.0, 10));
  const auto r = integ.run([](int step, const NsState&) { return step < 3; });
  CHECK(r.stopped_early);
  CHECK(r.steps_completed == 3);
}
