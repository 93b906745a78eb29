#include <cmath>

#include "doctest.h"
#include "opsplit/errors.hpp"
#include "opsplit/harness.hpp"
#include "opsplit/mesh.hpp"
#include "opsplit/reference_data.hpp"
#include "test_helpers.hpp"

using namespace opsplit;

namespace {

double poly_a(double x) { return x * x * (x - 1.0) * (x - 1.0); }

}  // namespace

TEST_CASE("zero-error ladder leaves orders blank") {
  StudyParams params;
  params.base.problem = {ProblemKind::CdZero};
  params.base.dt = 0.1;
  params.ladder = {2, 4, 8};
  const auto report = run_convergence_study(params);
  REQUIRE(report.rows.size() == 3u);
  for (const auto& row : report.rows) {
    CHECK(row.error == 0.0);
    CHECK(!row.order);
  }
  CHECK(report.rows[1].resolution == 0.25);
}

TEST_CASE("ladder results do not depend on the thread count") {
  StudyParams params;
  params.base.problem = {ProblemKind::CdExample2};
  params.base.n = 8;
  params.axis = Axis::Time;
  params.ladder = {0.02, 0.01, 0.005};
  const auto serial = run_convergence_study(params);
  params.threads = 3;
  const auto parallel = run_convergence_study(params);
  for (std::size_t k = 0; k < serial.rows.size(); ++k) {
    CHECK(serial.rows[k].error == parallel.rows[k].error);
    CHECK(serial.rows[k].resolution == parallel.rows[k].resolution);
  }
  CHECK(serial.rows[1].order.has_value());
  CHECK(to_string(Axis::Time) == "dt");
}

TEST_CASE("diverged rung blanks the neighbouring orders") {
  StudyParams params;
  params.base.problem = {ProblemKind::CdExample1};
  params.base.n = 16;
  params.axis = Axis::Time;
  params.ladder = {0.1, 0.0125};
  const auto report = run_convergence_study(params);
  CHECK(report.rows[0].diverged);
  CHECK(!report.rows[1].order);
  params.ladder = {0.1};
  CHECK_THROWS_AS(run_convergence_study(params), InvalidArgument);
}

TEST_CASE("critical dt search is unbounded without convection") {
  CriticalDtParams params;
  params.base.problem = {ProblemKind::CdPureDiffusion};
  params.base.n = 4;
  params.dt_seed = 0.05;
  params.dt_ceiling = 2.0;
  const auto r = find_critical_dt(params);
  CHECK(r.unbounded);
  CHECK(!r.budget_exhausted);
  CHECK(r.dt_crit >= 1.6);
  for (const auto& p : r.probes) CHECK(p.converged);
}

TEST_CASE("critical dt search brackets a convective limit") {
  CriticalDtParams params;
  params.base.problem = {ProblemKind::CdExample1};
  params.base.n = 8;
  params.base.final_time = 0.5;
  params.dt_seed = 0.02;
  const auto r = find_critical_dt(params);
  CHECK(!r.unbounded);
  CHECK(r.dt_crit > 0.0);
  CHECK(r.bracket_hi > r.bracket_lo);
  CHECK(r.bracket_hi - r.bracket_lo <= 0.05 * r.bracket_lo + 1e-15);
  // Every probe at or below dt_crit converged, every probe above it failed.
  for (const auto& p : r.probes) CHECK(p.converged == (p.dt <= r.dt_crit));
}

TEST_CASE("streamfunction and vorticity of an exactly known flow") {
  // Example 3 at t = 0 has psi = 5 a(x) a(y), a(s) = s^2 (s - 1)^2.
  const auto p = make_ns_problem({ProblemKind::NsExample3});
  const auto mesh = build_uniform_unit_square(16);
  const auto vel = build_space(mesh, 2, 2);
  const auto scalar = build_space(mesh, 1, 1);
  const Vector u = interpolate(*vel, p.exact_velocity, 0.0);
  const Vector psi = streamfunction(*vel, *scalar, u);
  double worst = 0.0;
  for (int i = 0; i < scalar->num_nodes(); ++i) {
    const Point x = scalar->node_coord(i);
    worst = std::max(worst, std::abs(psi[i] - 5.0 * poly_a(x.x) * poly_a(x.y)));
  }
  CHECK(worst < 2e-2 * 5.0 / 256.0);
  const ScalarField vorticity = [](Point x, double) {
    // -lap psi
    const double a2 = [](double s) { return 12 * s * s - 12 * s + 2; }(x.x);
    const double b2 = [](double s) { return 12 * s * s - 12 * s + 2; }(x.y);
    return -5.0 * (a2 * poly_a(x.y) + poly_a(x.x) * b2);
  };
  const Vector w = vorticity_projection(*vel, *scalar, u);
  CHECK(l2_error(*scalar, w, vorticity, 0.0) < 5e-3);
}

TEST_CASE("relative increment") {
  CHECK(relative_increment(Vector{3.0, 4.0}, Vector{3.0, 4.0}) == 0.0);
  CHECK(relative_increment(Vector{3.0, 4.0}, Vector{0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(relative_increment(Vector{0.0}, Vector{2.0}) == 2.0);
  CHECK_THROWS_AS(relative_increment(Vector{1.0}, Vector{}), InvalidArgument);
}

TEST_CASE("short cavity run produces a report") {
  CavityParams params;
  params.n = 8;
  params.dt = 0.01;
  params.max_steps = 30;
  int calls = 0;
  params.progress = [&](int, double) { ++calls; };
  const auto r = run_cavity(params);
  CHECK(!r.diverged);
  CHECK(!r.steady);
  CHECK(r.steps == 30);
  CHECK(calls == 30);
  REQUIRE(r.vortices.size() == 6u);
  CHECK(r.vortices[0].name == "primary");
  CHECK(r.vortices[0].found);
  CHECK(r.vortices[0].psi < 0.0);
  CHECK(r.u_vertical.value.size() == 129u);
  CHECK(r.u_vertical.value.back() == doctest::Approx(1.0));
  CHECK(r.u_vertical.value.front() == doctest::Approx(0.0));
  params.max_steps = 0;
  CHECK_THROWS_AS(run_cavity(params), InvalidArgument);
}

TEST_CASE("reference vortex table") {
  const auto d = ghia_data(1000);
  REQUIRE(d);
  REQUIRE(!d->vortices.empty());
  CHECK(d->vortices[0].psi == doctest::Approx(-0.117929));
  const auto low = ghia_data(100);
  REQUIRE(low);
  CHECK(!low->u.empty());
  CHECK(low->u.size() == low->y.size());
  CHECK(!ghia_data(250));
}

TEST_CASE("run spec validation") {
  RunSpec spec;
  spec.n = 0;
  CHECK_THROWS_AS(run_single(spec), InvalidArgument);
  spec.n = 4;
  spec.m = 0;
  CHECK_THROWS_AS(run_single(spec), InvalidArgument);
  spec.m = 1;
  spec.dt = 0.3;
  CHECK_THROWS_AS(run_single(spec), InvalidArgument);
  spec.covering = true;
  const auto r = run_single(spec);
  CHECK(r.steps == 4);
  CHECK(r.time == doctest::Approx(1.2));
}
