#include "oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "opsplit/mesh.hpp"
#include "opsplit/quadrature.hpp"

namespace oracle {
namespace {

std::array<double, 6> monomials(Point p) {
  return {1.0, p.x, p.y, p.x * p.x, p.x * p.y, p.y * p.y};
}

int monomial_count(int degree) { return degree == 1 ? 3 : 6; }

struct GaussEdge {
  std::array<double, 3> s{0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  std::array<double, 3> w{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
};

Vec2 side_normal(Point a, Point b) {
  if (a.y == 0.0 && b.y == 0.0) return {0.0, -1.0};
  if (a.y == 1.0 && b.y == 1.0) return {0.0, 1.0};
  if (a.x == 0.0 && b.x == 0.0) return {-1.0, 0.0};
  if (a.x == 1.0 && b.x == 1.0) return {1.0, 0.0};
  throw std::logic_error("oracle: edge is not on the unit square boundary");
}

/// Boundary edges found by brute force: an edge of a triangle with both
/// endpoints on the same side of the square.
struct OracleEdge {
  int triangle;
  Point a, b;
  Vec2 normal;
};

std::vector<OracleEdge> boundary_edges(const opsplit::TriangleMesh& mesh) {
  std::vector<OracleEdge> out;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const Point a = mesh.vertices[mesh.triangles[t][k]];
      const Point b = mesh.vertices[mesh.triangles[t][(k + 1) % 3]];
      const bool same_side = (a.x == 0.0 && b.x == 0.0) || (a.x == 1.0 && b.x == 1.0) ||
                             (a.y == 0.0 && b.y == 0.0) || (a.y == 1.0 && b.y == 1.0);
      if (same_side) out.push_back({t, a, b, side_normal(a, b)});
    }
  }
  return out;
}

}  // namespace

std::vector<double> solve(Dense m, std::vector<double> b) {
  const int n = m.rows;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
    }
    if (m(piv, k) == 0.0) throw std::runtime_error("oracle: singular matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = m(i, k) / m(k, k);
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) m(i, j) -= f * m(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
  return x;
}

double LocalBasis::value(int a, Point p) const {
  const auto mono = monomials(p);
  double v = 0.0;
  for (int k = 0; k < 6; ++k) v += coef[a][k] * mono[k];
  return v;
}

Vec2 LocalBasis::grad(int a, Point p) const {
  const auto& c = coef[a];
  return {c[1] + 2.0 * c[3] * p.x + c[4] * p.y, c[2] + c[4] * p.x + 2.0 * c[5] * p.y};
}

std::array<double, 3> LocalBasis::hessian(int a) const {
  const auto& c = coef[a];
  return {2.0 * c[3], c[4], 2.0 * c[5]};
}

LocalBasis local_basis(const opsplit::FeSpace& space, int triangle) {
  const auto nodes = space.cell_nodes(triangle);
  const int n = monomial_count(space.degree());
  if (static_cast<int>(nodes.size()) != n) throw std::logic_error("oracle: node count");
  Dense v(n, n);
  for (int i = 0; i < n; ++i) {
    const auto mono = monomials(space.node_coord(nodes[i]));
    for (int k = 0; k < n; ++k) v(i, k) = mono[k];
  }
  LocalBasis basis;
  basis.coef.assign(n, {});
  for (int a = 0; a < n; ++a) {
    std::vector<double> e(n, 0.0);
    e[a] = 1.0;
    // Columns of V^{-1}: V c = e_a gives phi_a(node_i) = delta_ia.
    const auto c = solve(v, e);
    for (int k = 0; k < n; ++k) basis.coef[a][k] = c[k];
  }
  return basis;
}

PhysicalRule physical_rule(const opsplit::FeSpace& space, int triangle, int degree) {
  const auto& rule = degree <= 4 ? opsplit::triangle_rule_degree4() : opsplit::triangle_rule_degree6();
  const auto& mesh = space.mesh();
  const auto& tri = mesh.triangles[triangle];
  const Point p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]], p2 = mesh.vertices[tri[2]];
  const double jac = std::abs((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
  PhysicalRule out;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto& l = rule.points[q];
    out.points.push_back({l[0] * p0.x + l[1] * p1.x + l[2] * p2.x, l[0] * p0.y + l[1] * p1.y + l[2] * p2.y});
    out.weights.push_back(rule.weights[q] * jac);
  }
  return out;
}

Dense mass(const opsplit::FeSpace& space) {
  Dense m(space.num_dofs(), space.num_dofs());
  const int deg = space.degree() == 1 ? 4 : 6;
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto basis = local_basis(space, t);
    const auto rule = physical_rule(space, t, deg);
    const auto nodes = space.cell_nodes(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        for (std::size_t b = 0; b < nodes.size(); ++b) {
          const double v = rule.weights[q] * basis.value(a, rule.points[q]) * basis.value(b, rule.points[q]);
          for (int c = 0; c < space.components(); ++c) m(space.dof(c, nodes[a]), space.dof(c, nodes[b])) += v;
        }
      }
    }
  }
  return m;
}

Dense diffusion_reaction(const opsplit::FeSpace& space, double eps, double c) {
  Dense m(space.num_dofs(), space.num_dofs());
  const int deg = space.degree() == 1 ? 4 : 6;
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto basis = local_basis(space, t);
    const auto rule = physical_rule(space, t, deg);
    const auto nodes = space.cell_nodes(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point x = rule.points[q];
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        for (std::size_t b = 0; b < nodes.size(); ++b) {
          const double v = rule.weights[q] * (eps * opsplit::dot(basis.grad(a, x), basis.grad(b, x)) +
                                              c * basis.value(a, x) * basis.value(b, x));
          for (int k = 0; k < space.components(); ++k) m(space.dof(k, nodes[a]), space.dof(k, nodes[b])) += v;
        }
      }
    }
  }
  return m;
}

std::vector<double> load(const opsplit::FeSpace& space, const opsplit::ScalarField& g, double t) {
  std::vector<double> out(space.num_dofs(), 0.0);
  const int deg = space.degree() == 1 ? 4 : 6;
  for (int tri = 0; tri < space.mesh().num_triangles(); ++tri) {
    const auto basis = local_basis(space, tri);
    const auto rule = physical_rule(space, tri, deg);
    const auto nodes = space.cell_nodes(tri);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        out[nodes[a]] += rule.weights[q] * g(rule.points[q], t) * basis.value(a, rule.points[q]);
      }
    }
  }
  return out;
}

bool inflow_point(const opsplit::VectorField& b, Point x, Vec2 normal, double t) {
  return opsplit::dot(b(x, t), normal) < 0.0;
}

std::vector<double> cd_convection_rhs(const opsplit::FeSpace& space, const std::vector<double>& u,
                                      const opsplit::VectorField& b,
                                      const opsplit::ScalarField& div_b,
                                      const opsplit::ScalarField& f, double t_lo, double dt) {
  const double t_mid = t_lo + 0.5 * dt, t_hi = t_lo + dt;
  const auto F = [&](Point x, double t) { return f ? f(x, t) : 0.0; };
  const auto D = [&](Point x, double t) { return div_b ? div_b(x, t) : 0.0; };
  std::vector<double> out(space.num_dofs(), 0.0);
  const int deg = space.degree() == 1 ? 4 : 6;

  const auto local_fields = [&](const LocalBasis& basis, std::span<const int> nodes, Point x) {
    double val = 0.0;
    Vec2 g;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      val += u[nodes[a]] * basis.value(a, x);
      g = g + u[nodes[a]] * basis.grad(a, x);
    }
    const double xi = val + 0.5 * dt * (F(x, t_lo) - (val * D(x, t_lo) + opsplit::dot(b(x, t_lo), g)));
    return std::pair{val, xi};
  };

  for (int tri = 0; tri < space.mesh().num_triangles(); ++tri) {
    const auto basis = local_basis(space, tri);
    const auto rule = physical_rule(space, tri, deg);
    const auto nodes = space.cell_nodes(tri);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point x = rule.points[q];
      const auto [val, xi] = local_fields(basis, nodes, x);
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        out[nodes[a]] += rule.weights[q] * ((val + dt * F(x, t_mid)) * basis.value(a, x) +
                                            dt * xi * opsplit::dot(b(x, t_mid), basis.grad(a, x)));
      }
    }
  }
  const GaussEdge ge;
  for (const auto& e : boundary_edges(space.mesh())) {
    const auto basis = local_basis(space, e.triangle);
    const auto nodes = space.cell_nodes(e.triangle);
    const double len = std::hypot(e.b.x - e.a.x, e.b.y - e.a.y);
    for (int q = 0; q < 3; ++q) {
      const Point x{e.a.x + ge.s[q] * (e.b.x - e.a.x), e.a.y + ge.s[q] * (e.b.y - e.a.y)};
      if (inflow_point(b, x, e.normal, t_hi)) continue;
      const auto [val, xi] = local_fields(basis, nodes, x);
      const double flux = opsplit::dot(b(x, t_mid), e.normal);
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        out[nodes[a]] -= dt * ge.w[q] * len * xi * basis.value(a, x) * flux;
      }
    }
  }
  return out;
}

std::vector<double> ns_convection_rhs(const opsplit::FeSpace& space, const std::vector<double>& u,
                                      const opsplit::VectorField& u_b, double t_lo, double dt) {
  const double t_hi = t_lo + dt;
  std::vector<double> out(space.num_dofs(), 0.0);

  struct Eta {
    Vec2 u, eta;
    double div_eta;
  };
  const auto eta_at = [&](const LocalBasis& basis, std::span<const int> nodes, Point x) {
    Vec2 val, gx, gy;
    std::array<double, 3> hx{}, hy{};
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      const double ux = u[space.dof(0, nodes[a])], uy = u[space.dof(1, nodes[a])];
      const double phi = basis.value(a, x);
      const Vec2 g = basis.grad(a, x);
      const auto h = basis.hessian(a);
      val = val + Vec2{ux * phi, uy * phi};
      gx = gx + ux * g;
      gy = gy + uy * g;
      for (int k = 0; k < 3; ++k) {
        hx[k] += ux * h[k];
        hy[k] += uy * h[k];
      }
    }
    // (u . grad) u and its divergence, written out term by term.
    const Vec2 adv{val.x * gx.x + val.y * gx.y, val.x * gy.x + val.y * gy.y};
    const double d_adv_x_dx = gx.x * gx.x + val.x * hx[0] + gy.x * gx.y + val.y * hx[1];
    const double d_adv_y_dy = gx.y * gy.x + val.x * hy[1] + gy.y * gy.y + val.y * hy[2];
    Eta r;
    r.u = val;
    r.eta = val - (0.5 * dt) * adv;
    r.div_eta = gx.x + gy.y - 0.5 * dt * (d_adv_x_dx + d_adv_y_dy);
    return r;
  };

  for (int tri = 0; tri < space.mesh().num_triangles(); ++tri) {
    const auto basis = local_basis(space, tri);
    const auto rule = physical_rule(space, tri, 6);
    const auto nodes = space.cell_nodes(tri);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point x = rule.points[q];
      const Eta e = eta_at(basis, nodes, x);
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        const double phi = basis.value(a, x);
        const double tr = e.div_eta * phi + opsplit::dot(e.eta, basis.grad(a, x));
        out[space.dof(0, nodes[a])] += rule.weights[q] * (e.u.x * phi + dt * e.eta.x * tr);
        out[space.dof(1, nodes[a])] += rule.weights[q] * (e.u.y * phi + dt * e.eta.y * tr);
      }
    }
  }
  const GaussEdge ge;
  for (const auto& be : boundary_edges(space.mesh())) {
    const auto basis = local_basis(space, be.triangle);
    const auto nodes = space.cell_nodes(be.triangle);
    const double len = std::hypot(be.b.x - be.a.x, be.b.y - be.a.y);
    for (int q = 0; q < 3; ++q) {
      const Point x{be.a.x + ge.s[q] * (be.b.x - be.a.x), be.a.y + ge.s[q] * (be.b.y - be.a.y)};
      if (inflow_point(u_b, x, be.normal, t_hi)) continue;
      const Eta e = eta_at(basis, nodes, x);
      const double flux = opsplit::dot(e.eta, be.normal);
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        const double w = dt * ge.w[q] * len * flux * basis.value(a, x);
        out[space.dof(0, nodes[a])] -= w * e.eta.x;
        out[space.dof(1, nodes[a])] -= w * e.eta.y;
      }
    }
  }
  return out;
}

Dense divergence(const opsplit::FeSpace& velocity, const opsplit::FeSpace& pressure) {
  Dense m(pressure.num_dofs(), velocity.num_dofs());
  for (int t = 0; t < velocity.mesh().num_triangles(); ++t) {
    const auto vb = local_basis(velocity, t);
    const auto pb = local_basis(pressure, t);
    const auto rule = physical_rule(velocity, t, 6);
    const auto vn = velocity.cell_nodes(t);
    const auto pn = pressure.cell_nodes(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point x = rule.points[q];
      for (std::size_t i = 0; i < pn.size(); ++i) {
        for (std::size_t a = 0; a < vn.size(); ++a) {
          const Vec2 g = vb.grad(a, x);
          const double w = rule.weights[q] * pb.value(i, x);
          m(pn[i], velocity.dof(0, vn[a])) -= w * g.x;
          m(pn[i], velocity.dof(1, vn[a])) -= w * g.y;
        }
      }
    }
  }
  return m;
}

}  // namespace oracle
