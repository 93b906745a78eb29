#include "opsplit/assembly.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "opsplit/errors.hpp"

namespace opsplit {
namespace {

constexpr int kMaxLocal = 6;

/// Shape values at the points of a rule; identical for every element.
std::vector<std::array<double, kMaxLocal>> tabulate(int degree, const QuadratureRule& rule) {
  std::vector<std::array<double, kMaxLocal>> table(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) shape::values(degree, rule.points[q], table[q]);
  return table;
}

void require_size(std::span<const double> v, const FeSpace& space, const char* who) {
  if (static_cast<int>(v.size()) != space.num_dofs()) {
    std::ostringstream os;
    os << who << ": vector has " << v.size() << " entries, space has " << space.num_dofs();
    throw InvalidArgument(os.str());
  }
}

double edge_length(const TriangleMesh& mesh, const BoundaryEdge& be) {
  const Point a = mesh.vertices[be.vertices[0]], b = mesh.vertices[be.vertices[1]];
  return std::hypot(b.x - a.x, b.y - a.y);
}

Point edge_point(const TriangleMesh& mesh, const BoundaryEdge& be, double s) {
  const Point a = mesh.vertices[be.vertices[0]], b = mesh.vertices[be.vertices[1]];
  return {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
}

/// Element-local assembly of a scalar bilinear form into every component block.
template <class Kernel>
CsrMatrix assemble_block_diagonal(const FeSpace& space, Kernel&& kernel) {
  const auto& mesh = space.mesh();
  const int n = space.nodes_per_cell();
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_triangles()) * n * n * space.components());
  std::array<double, kMaxLocal * kMaxLocal> local{};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    local.fill(0.0);
    kernel(t, local);
    const auto nodes = space.cell_nodes(t);
    for (int c = 0; c < space.components(); ++c) {
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          triplets.push_back(
              {space.dof(c, nodes[a]), space.dof(c, nodes[b]), local[a * kMaxLocal + b]});
        }
      }
    }
  }
  return CsrMatrix::from_triplets(space.num_dofs(), space.num_dofs(), std::move(triplets));
}

}  // namespace

const QuadratureRule& assembly_rule(const FeSpace& space) {
  return space.degree() == 1 ? triangle_rule_degree4() : triangle_rule_degree6();
}

CsrMatrix mass_matrix(const FeSpace& space, bool lumped) {
  const auto& rule = assembly_rule(space);
  const auto phi = tabulate(space.degree(), rule);
  const int n = space.nodes_per_cell();
  CsrMatrix m = assemble_block_diagonal(space, [&](int t, auto& local) {
    const double jac = 2.0 * space.mesh().signed_area(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * jac;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) local[a * kMaxLocal + b] += w * phi[q][a] * phi[q][b];
      }
    }
  });
  if (!lumped) return m;
  if (space.degree() == 1) return CsrMatrix::diagonal(m.row_sums());
  // P2 row sums vanish at vertices; scale the diagonal to the component total instead.
  std::vector<double> diag = m.diagonal();
  const std::vector<double> rows = m.row_sums();
  for (int c = 0; c < space.components(); ++c) {
    double total = 0.0, trace = 0.0;
    for (int node = 0; node < space.num_nodes(); ++node) {
      total += rows[space.dof(c, node)];
      trace += diag[space.dof(c, node)];
    }
    for (int node = 0; node < space.num_nodes(); ++node) diag[space.dof(c, node)] *= total / trace;
  }
  return CsrMatrix::diagonal(diag);
}

CsrMatrix diffusion_reaction_matrix(const FeSpace& space, const ScalarField& eps,
                                    const ScalarField& c, double t) {
  const auto& rule = assembly_rule(space);
  const auto phi = tabulate(space.degree(), rule);
  const int n = space.nodes_per_cell();
  return assemble_block_diagonal(space, [&](int tri, auto& local) {
    const ElementGeometry geo = element_geometry(space.mesh(), tri);
    std::array<Vec2, kMaxLocal> grad{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = geo.map(rule.points[q]);
      const double e = eps ? eps(x, t) : 0.0;
      const double r = c ? c(x, t) : 0.0;
      if (e < 0.0) {
        std::ostringstream os;
        os << "diffusion_reaction_matrix: negative diffusion " << e << " at (" << x.x << ", "
           << x.y << ")";
        throw CoefficientSignError(os.str());
      }
      shape::gradients(space.degree(), rule.points[q], geo, grad);
      const double w = rule.weights[q] * 2.0 * geo.area;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          local[a * kMaxLocal + b] += w * (e * dot(grad[a], grad[b]) + r * phi[q][a] * phi[q][b]);
        }
      }
    }
  });
}

CsrMatrix stiffness_matrix(const FeSpace& space) {
  return diffusion_reaction_matrix(space, constant_field(1.0), {}, 0.0);
}

Vector load_vector(const FeSpace& space, const ScalarField& g, double t) {
  if (space.components() != 1) throw InvalidArgument("load_vector: scalar data on vector space");
  const auto& rule = assembly_rule(space);
  const auto phi = tabulate(space.degree(), rule);
  Vector out(space.num_dofs(), 0.0);
  for (int tri = 0; tri < space.mesh().num_triangles(); ++tri) {
    const ElementGeometry geo = element_geometry(space.mesh(), tri);
    const auto nodes = space.cell_nodes(tri);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geo.area * g(geo.map(rule.points[q]), t);
      for (std::size_t a = 0; a < nodes.size(); ++a) out[nodes[a]] += w * phi[q][a];
    }
  }
  return out;
}

Vector load_vector(const FeSpace& space, const VectorField& g, double t) {
  if (space.components() != 2) throw InvalidArgument("load_vector: vector data on scalar space");
  const auto& rule = assembly_rule(space);
  const auto phi = tabulate(space.degree(), rule);
  Vector out(space.num_dofs(), 0.0);
  for (int tri = 0; tri < space.mesh().num_triangles(); ++tri) {
    const ElementGeometry geo = element_geometry(space.mesh(), tri);
    const auto nodes = space.cell_nodes(tri);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geo.area;
      const Vec2 v = g(geo.map(rule.points[q]), t);
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        out[space.dof(0, nodes[a])] += w * v.x * phi[q][a];
        out[space.dof(1, nodes[a])] += w * v.y * phi[q][a];
      }
    }
  }
  return out;
}

Vector cd_convection_rhs(const FeSpace& space, std::span<const double> u_prev,
                         const ConvectionCoefficients& coeffs, double t_lo, double dt,
                         const InflowSet* inflow) {
  if (inflow == nullptr) throw InvalidArgument("cd_convection_rhs: missing inflow set");
  if (space.components() != 1) throw InvalidArgument("cd_convection_rhs: scalar space required");
  if (!(dt > 0.0)) throw InvalidArgument("cd_convection_rhs: dt must be positive");
  require_size(u_prev, space, "cd_convection_rhs");
  const auto& mesh = space.mesh();
  const auto& rule = assembly_rule(space);
  const auto phi = tabulate(space.degree(), rule);
  const int n = space.nodes_per_cell();
  const double t_mid = t_lo + 0.5 * dt;
  const auto source = [&](Point x, double t) { return coeffs.f ? coeffs.f(x, t) : 0.0; };
  const auto div_b = [&](Point x, double t) { return coeffs.div_b ? coeffs.div_b(x, t) : 0.0; };

  // Half-step predictor xi at x from the local polynomial u, grad u.
  const auto predictor = [&](Point x, double u, Vec2 grad_u) {
    return u + 0.5 * dt * (source(x, t_lo) - (u * div_b(x, t_lo) + dot(coeffs.b(x, t_lo), grad_u)));
  };

  Vector out(space.num_dofs(), 0.0);
  std::array<Vec2, kMaxLocal> grad{};
  for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
    const ElementGeometry geo = element_geometry(mesh, tri);
    const auto nodes = space.cell_nodes(tri);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = geo.map(rule.points[q]);
      const double w = rule.weights[q] * 2.0 * geo.area;
      shape::gradients(space.degree(), rule.points[q], geo, grad);
      double u = 0.0;
      Vec2 gu;
      for (int a = 0; a < n; ++a) {
        u += u_prev[nodes[a]] * phi[q][a];
        gu = gu + u_prev[nodes[a]] * grad[a];
      }
      const double xi = predictor(x, u, gu);
      const Vec2 b_mid = coeffs.b(x, t_mid);
      const double mass_part = u + dt * source(x, t_mid);
      for (int a = 0; a < n; ++a) {
        out[nodes[a]] += w * (mass_part * phi[q][a] + dt * xi * dot(b_mid, grad[a]));
      }
    }
  }

  const LineRule line = gauss_line_rule(kEdgeGaussPoints);
  std::array<double, kMaxLocal> phi_b{};
  for (std::size_t k = 0; k < mesh.boundary_edges.size(); ++k) {
    const auto& be = mesh.boundary_edges[k];
    const ElementGeometry geo = element_geometry(mesh, be.triangle);
    const auto nodes = space.cell_nodes(be.triangle);
    const double len = edge_length(mesh, be);
    for (int q = 0; q < kEdgeGaussPoints; ++q) {
      if (inflow->gauss_inflow[k][q]) continue;
      const Point x = edge_point(mesh, be, line.points[q]);
      const auto lambda = geo.barycentric(x);
      shape::values(space.degree(), lambda, phi_b);
      shape::gradients(space.degree(), lambda, geo, grad);
      double u = 0.0;
      Vec2 gu;
      for (int a = 0; a < n; ++a) {
        u += u_prev[nodes[a]] * phi_b[a];
        gu = gu + u_prev[nodes[a]] * grad[a];
      }
      const double xi = predictor(x, u, gu);
      const double flux = dot(coeffs.b(x, t_mid), be.normal);
      const double w = line.weights[q] * len;
      for (int a = 0; a < n; ++a) out[nodes[a]] -= dt * w * xi * phi_b[a] * flux;
    }
  }
  return out;
}

CsrMatrix cd_diffusion_system(const FeSpace& space, double dt, const ScalarField& eps,
                              const ScalarField& c, double t) {
  if (!(dt > 0.0)) throw InvalidArgument("cd_diffusion_system: dt must be positive");
  return mass_matrix(space).add(diffusion_reaction_matrix(space, eps, c, t), dt);
}

namespace {

struct LocalVelocity {
  Vec2 u;
  Vec2 grad_x;  // grad u_x
  Vec2 grad_y;  // grad u_y
};

/// eta = u - dt/2 (u . grad) u and its exact divergence.
struct Predictor {
  Vec2 eta;
  double div_eta = 0.0;
};

Predictor velocity_predictor(const LocalVelocity& v, const Hessian& hx, const Hessian& hy,
                             double dt) {
  const Vec2 conv{v.u.x * v.grad_x.x + v.u.y * v.grad_x.y, v.u.x * v.grad_y.x + v.u.y * v.grad_y.y};
  Predictor p;
  p.eta = v.u - (0.5 * dt) * conv;
  const double div_u = v.grad_x.x + v.grad_y.y;
  const double grad_grad =
      v.grad_x.x * v.grad_x.x + 2.0 * v.grad_y.x * v.grad_x.y + v.grad_y.y * v.grad_y.y;
  const double second = v.u.x * (hx.xx + hy.xy) + v.u.y * (hx.xy + hy.yy);
  p.div_eta = div_u - 0.5 * dt * (grad_grad + second);
  return p;
}

}  // namespace

Vector ns_convection_rhs(const FeSpace& space, std::span<const double> u_prev, double dt,
                         const InflowSet* inflow) {
  if (inflow == nullptr) throw InvalidArgument("ns_convection_rhs: missing inflow set");
  if (space.components() != 2) throw InvalidArgument("ns_convection_rhs: vector space required");
  if (!(dt > 0.0)) throw InvalidArgument("ns_convection_rhs: dt must be positive");
  require_size(u_prev, space, "ns_convection_rhs");
  const auto& mesh = space.mesh();
  const auto& rule = assembly_rule(space);
  const auto phi = tabulate(space.degree(), rule);
  const int n = space.nodes_per_cell();

  Vector out(space.num_dofs(), 0.0);
  std::array<Vec2, kMaxLocal> grad{};
  std::array<Hessian, kMaxLocal> hess{};
  std::array<double, kMaxLocal> ux{}, uy{};

  const auto local_velocity = [&](std::span<const double> values) {
    LocalVelocity v;
    for (int a = 0; a < n; ++a) {
      v.u.x += ux[a] * values[a];
      v.u.y += uy[a] * values[a];
      v.grad_x = v.grad_x + ux[a] * grad[a];
      v.grad_y = v.grad_y + uy[a] * grad[a];
    }
    return v;
  };

  for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
    const ElementGeometry geo = element_geometry(mesh, tri);
    const auto nodes = space.cell_nodes(tri);
    shape::hessians(space.degree(), geo, hess);
    Hessian hx, hy;
    for (int a = 0; a < n; ++a) {
      ux[a] = u_prev[space.dof(0, nodes[a])];
      uy[a] = u_prev[space.dof(1, nodes[a])];
      hx.xx += ux[a] * hess[a].xx;
      hx.xy += ux[a] * hess[a].xy;
      hx.yy += ux[a] * hess[a].yy;
      hy.xx += uy[a] * hess[a].xx;
      hy.xy += uy[a] * hess[a].xy;
      hy.yy += uy[a] * hess[a].yy;
    }
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geo.area;
      shape::gradients(space.degree(), rule.points[q], geo, grad);
      const LocalVelocity v = local_velocity(phi[q]);
      const Predictor p = velocity_predictor(v, hx, hy, dt);
      for (int a = 0; a < n; ++a) {
        const double transport = p.div_eta * phi[q][a] + dot(p.eta, grad[a]);
        out[space.dof(0, nodes[a])] += w * (v.u.x * phi[q][a] + dt * p.eta.x * transport);
        out[space.dof(1, nodes[a])] += w * (v.u.y * phi[q][a] + dt * p.eta.y * transport);
      }
    }
  }

  const LineRule line = gauss_line_rule(kEdgeGaussPoints);
  std::array<double, kMaxLocal> phi_b{};
  for (std::size_t k = 0; k < mesh.boundary_edges.size(); ++k) {
    const auto& be = mesh.boundary_edges[k];
    const ElementGeometry geo = element_geometry(mesh, be.triangle);
    const auto nodes = space.cell_nodes(be.triangle);
    const double len = edge_length(mesh, be);
    shape::hessians(space.degree(), geo, hess);
    Hessian hx, hy;
    for (int a = 0; a < n; ++a) {
      ux[a] = u_prev[space.dof(0, nodes[a])];
      uy[a] = u_prev[space.dof(1, nodes[a])];
      hx.xx += ux[a] * hess[a].xx;
      hx.xy += ux[a] * hess[a].xy;
      hx.yy += ux[a] * hess[a].yy;
      hy.xx += uy[a] * hess[a].xx;
      hy.xy += uy[a] * hess[a].xy;
      hy.yy += uy[a] * hess[a].yy;
    }
    for (int q = 0; q < kEdgeGaussPoints; ++q) {
      if (inflow->gauss_inflow[k][q]) continue;
      const auto lambda = geo.barycentric(edge_point(mesh, be, line.points[q]));
      shape::values(space.degree(), lambda, phi_b);
      shape::gradients(space.degree(), lambda, geo, grad);
      const LocalVelocity v = local_velocity(phi_b);
      const Predictor p = velocity_predictor(v, hx, hy, dt);
      const double flux = dot(p.eta, be.normal);
      const double w = dt * line.weights[q] * len * flux;
      for (int a = 0; a < n; ++a) {
        out[space.dof(0, nodes[a])] -= w * p.eta.x * phi_b[a];
        out[space.dof(1, nodes[a])] -= w * p.eta.y * phi_b[a];
      }
    }
  }
  return out;
}

CsrMatrix divergence_matrix(const FeSpace& velocity, const FeSpace& pressure) {
  if (velocity.mesh_ptr() != pressure.mesh_ptr()) {
    throw InvalidArgument("divergence_matrix: velocity and pressure spaces on different meshes");
  }
  if (velocity.components() != 2 || pressure.components() != 1) {
    throw InvalidArgument("divergence_matrix: need vector velocity and scalar pressure");
  }
  const auto& mesh = velocity.mesh();
  const auto& rule = triangle_rule_degree6();
  const auto psi = tabulate(pressure.degree(), rule);
  const int nv = velocity.nodes_per_cell(), np = pressure.nodes_per_cell();
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_triangles()) * np * nv * 2);
  std::array<Vec2, kMaxLocal> grad{};
  for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
    const ElementGeometry geo = element_geometry(mesh, tri);
    const auto vnodes = velocity.cell_nodes(tri);
    const auto pnodes = pressure.cell_nodes(tri);
    std::array<double, kMaxLocal * kMaxLocal * 2> local{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * 2.0 * geo.area;
      shape::gradients(velocity.degree(), rule.points[q], geo, grad);
      for (int i = 0; i < np; ++i) {
        for (int a = 0; a < nv; ++a) {
          local[(i * kMaxLocal + a) * 2 + 0] -= w * psi[q][i] * grad[a].x;
          local[(i * kMaxLocal + a) * 2 + 1] -= w * psi[q][i] * grad[a].y;
        }
      }
    }
    for (int i = 0; i < np; ++i) {
      for (int a = 0; a < nv; ++a) {
        for (int c = 0; c < 2; ++c) {
          triplets.push_back(
              {pnodes[i], velocity.dof(c, vnodes[a]), local[(i * kMaxLocal + a) * 2 + c]});
        }
      }
    }
  }
  return CsrMatrix::from_triplets(pressure.num_dofs(), velocity.num_dofs(), std::move(triplets));
}

StokesSystem::StokesSystem(std::shared_ptr<const FeSpace> velocity,
                           std::shared_ptr<const FeSpace> pressure, double dt, double reynolds)
    : velocity_(std::move(velocity)),
      pressure_(std::move(pressure)),
      dt_(dt),
      reynolds_(reynolds),
      token_(std::make_shared<const int>(0)) {
  if (!velocity_ || !pressure_) throw InvalidArgument("stokes_system: null space");
  if (velocity_->mesh_ptr() != pressure_->mesh_ptr()) {
    throw InvalidArgument("stokes_system: velocity and pressure spaces on different meshes");
  }
  if (velocity_->degree() != 2 || velocity_->components() != 2 || pressure_->degree() != 1 ||
      pressure_->components() != 1) {
    throw InvalidArgument("stokes_system: Taylor-Hood pairing (P2 vector / P1 scalar) required");
  }
  if (!(dt > 0.0)) throw InvalidArgument("stokes_system: dt must be positive");
  if (!(reynolds > 0.0)) throw InvalidArgument("stokes_system: Reynolds number must be positive");

  a_uu_ = mass_matrix(*velocity_).scaled(1.0 / dt).add(stiffness_matrix(*velocity_), 1.0 / reynolds);
  b_ = divergence_matrix(*velocity_, *pressure_);
  mean_row_ = load_vector(*pressure_, constant_field(1.0), 0.0);

  const int nu = velocity_->num_dofs(), np = pressure_->num_dofs();
  const int n = nu + np + 1;
  std::vector<Triplet> triplets;
  triplets.reserve(a_uu_.nnz() + 2 * b_.nnz() + 2 * np);
  for (int r = 0; r < nu; ++r) {
    for (int k = a_uu_.row_ptr()[r]; k < a_uu_.row_ptr()[r + 1]; ++k) {
      triplets.push_back({r, a_uu_.col_idx()[k], a_uu_.values()[k]});
    }
  }
  for (int q = 0; q < np; ++q) {
    for (int k = b_.row_ptr()[q]; k < b_.row_ptr()[q + 1]; ++k) {
      triplets.push_back({nu + q, b_.col_idx()[k], b_.values()[k]});
      triplets.push_back({b_.col_idx()[k], nu + q, b_.values()[k]});
    }
    triplets.push_back({nu + q, nu + np, mean_row_[q]});
    triplets.push_back({nu + np, nu + q, mean_row_[q]});
  }
  const CsrMatrix full = CsrMatrix::from_triplets(n, n, std::move(triplets));
  constrained_ = std::make_unique<ConstrainedSystem>(full, velocity_->all_boundary_dofs());
}

Vector StokesSystem::make_rhs(std::span<const double> velocity_load,
                              std::span<const double> boundary_values) const {
  const int nu = velocity_dofs();
  if (static_cast<int>(velocity_load.size()) != nu) {
    throw InvalidArgument("StokesSystem::make_rhs: velocity load size mismatch");
  }
  Vector full(nu + pressure_dofs() + 1, 0.0);
  std::copy(velocity_load.begin(), velocity_load.end(), full.begin());
  return constrained_->lift(full, boundary_values);
}

std::shared_ptr<StokesSystem> stokes_system(std::shared_ptr<const FeSpace> velocity,
                                            std::shared_ptr<const FeSpace> pressure, double dt,
                                            double reynolds) {
  return std::make_shared<StokesSystem>(std::move(velocity), std::move(pressure), dt, reynolds);
}

}  // namespace opsplit
