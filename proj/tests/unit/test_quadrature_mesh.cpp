#include <cmath>
#include <numbers>

#include "doctest.h"
#include "opsplit/mesh.hpp"
#include "opsplit/quadrature.hpp"

using namespace opsplit;

namespace {

// Exact integral of x^a y^b over the reference triangle: a! b! / (a + b + 2)!.
double monomial_integral(int a, int b) {
  return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

double apply(const QuadratureRule& rule, int a, int b) {
  double s = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double x = rule.points[q][1], y = rule.points[q][2];
    s += rule.weights[q] * std::pow(x, a) * std::pow(y, b);
  }
  return s;
}

int max_exact_degree(const QuadratureRule& rule) {
  for (int d = 0; d < 30; ++d) {
    for (int a = 0; a <= d; ++a) {
      if (std::abs(apply(rule, a, d - a) - monomial_integral(a, d - a)) > 1e-13) return d - 1;
    }
  }
  return 30;
}

}  // namespace

TEST_SUITE("property") {

TEST_CASE("quadrature rules integrate monomials exactly up to their degree") {
  const QuadratureRule* rules[] = {&triangle_rule_degree4(), &triangle_rule_degree6()};
  const int expected[] = {4, 6};
  for (int r = 0; r < 2; ++r) {
    const auto& rule = *rules[r];
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    CHECK(wsum == doctest::Approx(0.5).epsilon(1e-15));
    for (const auto& p : rule.points) {
      CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(p[0] >= 0.0);
      CHECK(p[1] >= 0.0);
      CHECK(p[2] >= 0.0);
    }
    CHECK(rule.exact_degree == expected[r]);
    // Exact through the declared degree and not one beyond.
    CHECK(max_exact_degree(rule) == expected[r]);
  }
  for (int n : {2, 4, 8}) {
    const auto rule = collapsed_gauss_rule(n);
    CHECK(max_exact_degree(rule) >= 2 * n - 2);
    CHECK(rule.exact_degree == 2 * n - 2);
  }
}

TEST_CASE("gauss line rule integrates polynomials of degree 2n-1 on [0,1]") {
  for (int n : {1, 2, 3, 5}) {
    const auto rule = gauss_line_rule(n);
    REQUIRE(rule.points.size() == static_cast<std::size_t>(n));
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double s = 0.0;
      for (int q = 0; q < n; ++q) s += rule.weights[q] * std::pow(rule.points[q], d);
      CHECK(s == doctest::Approx(1.0 / (d + 1)).epsilon(1e-14));
    }
  }
}

TEST_CASE("uniform mesh areas, orientation and counts") {
  for (int n : {1, 2, 3, 8}) {
    const auto mesh = build_uniform_unit_square(n);
    CHECK(mesh->num_vertices() == (n + 1) * (n + 1));
    CHECK(mesh->num_triangles() == 2 * n * n);
    CHECK(mesh->num_edges() == 3 * n * n + 2 * n);
    CHECK(mesh->boundary_edges.size() == static_cast<std::size_t>(4 * n));
    double total = 0.0;
    for (int t = 0; t < mesh->num_triangles(); ++t) {
      const double a = mesh->signed_area(t);
      CHECK(a == doctest::Approx(0.5 / (n * n)).epsilon(1e-14));
      total += a;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mesh->max_diameter() == doctest::Approx(std::numbers::sqrt2 / n));
  }
}

TEST_CASE("boundary normals point outward and edges lie on their side") {
  const int n = 4;
  const auto mesh = build_uniform_unit_square(n);
  double length = 0.0;
  for (const auto& e : mesh->boundary_edges) {
    const Point a = mesh->vertices[e.vertices[0]], b = mesh->vertices[e.vertices[1]];
    length += std::hypot(b.x - a.x, b.y - a.y);
    CHECK(norm(e.normal) == doctest::Approx(1.0));
    CHECK(e.normal == outward_normal(e.side));
    // Midpoint plus a small step along the normal leaves the square.
    const Point out{0.5 * (a.x + b.x) + 1e-3 * e.normal.x, 0.5 * (a.y + b.y) + 1e-3 * e.normal.y};
    const bool outside = out.x < 0.0 || out.x > 1.0 || out.y < 0.0 || out.y > 1.0;
    CHECK(outside);
    // Counterclockwise along the boundary: tangent (b - a) is the normal rotated by +90 degrees.
    CHECK((b.x - a.x) * e.normal.y - (b.y - a.y) * e.normal.x == doctest::Approx(-1.0 / n));
    // The owning triangle contains the edge as its local edge opposite `local_edge`.
    const auto& tri = mesh->triangles[e.triangle];
    const int k = e.local_edge;
    const std::array<int, 2> ends{tri[(k + 1) % 3], tri[(k + 2) % 3]};
    CHECK(((ends[0] == e.vertices[0] && ends[1] == e.vertices[1]) ||
           (ends[0] == e.vertices[1] && ends[1] == e.vertices[0])));
    CHECK(mesh->triangle_edges[e.triangle][k] == e.edge);
  }
  CHECK(length == doctest::Approx(4.0));
}

}  // TEST_SUITE

TEST_CASE("mesh numbering convention and point location") {
  const int n = 3;
  const auto mesh = build_uniform_unit_square(n);
  const int i = 1, j = 2;
  const int v00 = j * (n + 1) + i;
  CHECK(mesh->vertices[v00].x == doctest::Approx(1.0 / 3));
  CHECK(mesh->vertices[v00].y == doctest::Approx(2.0 / 3));
  const auto& lower = mesh->triangles[2 * (j * n + i)];
  const auto& upper = mesh->triangles[2 * (j * n + i) + 1];
  CHECK(lower == std::array<int, 3>{v00, v00 + 1, v00 + n + 2});
  CHECK(upper == std::array<int, 3>{v00, v00 + n + 2, v00 + n + 1});
  CHECK(mesh->locate({0.5, 0.75}) == 2 * (j * n + i));
  CHECK(mesh->locate({0.4, 0.95}) == 2 * (j * n + i) + 1);
  CHECK(mesh->locate({1.0, 1.0}) >= 0);
  CHECK(mesh->locate({1.5, 0.5}) == mesh->locate({1.0, 0.5}));
}

TEST_CASE("mesh rejects non-positive subdivisions") {
  CHECK_THROWS(build_uniform_unit_square(0));
}
