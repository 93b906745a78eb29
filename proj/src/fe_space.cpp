#include "opsplit/fe_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "opsplit/errors.hpp"
#include "opsplit/quadrature.hpp"

namespace opsplit {

std::array<double, 3> ElementGeometry::barycentric(Point p) const {
  std::array<double, 3> lambda{};
  const Vec2 d{p.x - vertices[0].x, p.y - vertices[0].y};
  lambda[1] = dot(grad_lambda[1], d);
  lambda[2] = dot(grad_lambda[2], d);
  lambda[0] = 1.0 - lambda[1] - lambda[2];
  return lambda;
}

ElementGeometry element_geometry(const TriangleMesh& mesh, int triangle) {
  ElementGeometry geo;
  const auto& tri = mesh.triangles[triangle];
  for (int k = 0; k < 3; ++k) geo.vertices[k] = mesh.vertices[tri[k]];
  const auto& v = geo.vertices;
  const double det = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
  geo.area = 0.5 * det;
  geo.grad_lambda[0] = {(v[1].y - v[2].y) / det, (v[2].x - v[1].x) / det};
  geo.grad_lambda[1] = {(v[2].y - v[0].y) / det, (v[0].x - v[2].x) / det};
  geo.grad_lambda[2] = {(v[0].y - v[1].y) / det, (v[1].x - v[0].x) / det};
  return geo;
}

namespace shape {

int count(int degree) { return degree == 1 ? 3 : 6; }

void values(int degree, const std::array<double, 3>& l, std::span<double> out) {
  if (degree == 1) {
    out[0] = l[0];
    out[1] = l[1];
    out[2] = l[2];
    return;
  }
  for (int k = 0; k < 3; ++k) {
    out[k] = l[k] * (2.0 * l[k] - 1.0);
    out[3 + k] = 4.0 * l[(k + 1) % 3] * l[(k + 2) % 3];
  }
}

void gradients(int degree, const std::array<double, 3>& l, const ElementGeometry& geo,
               std::span<Vec2> out) {
  const auto& g = geo.grad_lambda;
  if (degree == 1) {
    out[0] = g[0];
    out[1] = g[1];
    out[2] = g[2];
    return;
  }
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    out[k] = (4.0 * l[k] - 1.0) * g[k];
    out[3 + k] = 4.0 * (l[a] * g[b] + l[b] * g[a]);
  }
}

void hessians(int degree, const ElementGeometry& geo, std::span<Hessian> out) {
  const int n = count(degree);
  if (degree == 1) {
    for (int k = 0; k < n; ++k) out[k] = {};
    return;
  }
  const auto& g = geo.grad_lambda;
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    out[k] = {4.0 * g[k].x * g[k].x, 4.0 * g[k].x * g[k].y, 4.0 * g[k].y * g[k].y};
    out[3 + k] = {8.0 * g[a].x * g[b].x, 4.0 * (g[a].x * g[b].y + g[a].y * g[b].x),
                  8.0 * g[a].y * g[b].y};
  }
}

}  // namespace shape

FeSpace::FeSpace(std::shared_ptr<const TriangleMesh> mesh, int degree, int components)
    : mesh_(std::move(mesh)), degree_(degree), components_(components) {
  if (!mesh_) throw InvalidArgument("FeSpace: null mesh");
  if (degree_ != 1 && degree_ != 2) {
    throw InvalidArgument("FeSpace: degree must be 1 or 2, got " + std::to_string(degree_));
  }
  if (components_ != 1 && components_ != 2) {
    throw InvalidArgument("FeSpace: components must be 1 or 2, got " +
                          std::to_string(components_));
  }
  const auto& m = *mesh_;
  node_coords_ = m.vertices;
  if (degree_ == 2) {
    for (const auto& e : m.edges) {
      const Point a = m.vertices[e[0]], b = m.vertices[e[1]];
      node_coords_.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    }
  }
  const int per_cell = nodes_per_cell();
  cell_nodes_.reserve(static_cast<std::size_t>(m.num_triangles()) * per_cell);
  for (int t = 0; t < m.num_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) cell_nodes_.push_back(m.triangles[t][k]);
    if (degree_ == 2) {
      for (int k = 0; k < 3; ++k) cell_nodes_.push_back(m.num_vertices() + m.triangle_edges[t][k]);
    }
  }
  for (std::size_t k = 0; k < m.boundary_edges.size(); ++k) {
    const auto& be = m.boundary_edges[k];
    auto& list = side_nodes_[static_cast<int>(be.side)];
    for (int node : boundary_edge_nodes(static_cast<int>(k))) list.push_back(node);
  }
  for (auto& list : side_nodes_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    boundary_nodes_.insert(boundary_nodes_.end(), list.begin(), list.end());
  }
  std::sort(boundary_nodes_.begin(), boundary_nodes_.end());
  boundary_nodes_.erase(std::unique(boundary_nodes_.begin(), boundary_nodes_.end()),
                        boundary_nodes_.end());
}

std::vector<int> FeSpace::cell_dofs(int triangle) const {
  std::vector<int> dofs;
  const auto nodes = cell_nodes(triangle);
  for (int c = 0; c < components_; ++c) {
    for (int node : nodes) dofs.push_back(dof(c, node));
  }
  return dofs;
}

std::vector<int> FeSpace::boundary_dofs(Side side) const {
  std::vector<int> dofs;
  for (int c = 0; c < components_; ++c) {
    for (int node : side_nodes(side)) dofs.push_back(dof(c, node));
  }
  return dofs;
}

std::vector<int> FeSpace::all_boundary_dofs() const {
  std::vector<int> dofs;
  for (int c = 0; c < components_; ++c) {
    for (int node : boundary_nodes_) dofs.push_back(dof(c, node));
  }
  return dofs;
}

std::vector<int> FeSpace::boundary_edge_nodes(int k) const {
  const auto& be = mesh_->boundary_edges[k];
  std::vector<int> nodes{be.vertices[0], be.vertices[1]};
  if (degree_ == 2) nodes.push_back(mesh_->num_vertices() + be.edge);
  return nodes;
}

double FeSpace::evaluate(std::span<const double> coeffs, Point p, int component) const {
  const int t = mesh_->locate(p);
  const ElementGeometry geo = element_geometry(*mesh_, t);
  std::array<double, 6> phi{};
  shape::values(degree_, geo.barycentric(p), phi);
  const auto nodes = cell_nodes(t);
  double value = 0.0;
  for (std::size_t a = 0; a < nodes.size(); ++a) value += coeffs[dof(component, nodes[a])] * phi[a];
  return value;
}

Vec2 FeSpace::evaluate_gradient(std::span<const double> coeffs, Point p, int component) const {
  const int t = mesh_->locate(p);
  const ElementGeometry geo = element_geometry(*mesh_, t);
  std::array<Vec2, 6> grad{};
  shape::gradients(degree_, geo.barycentric(p), geo, grad);
  const auto nodes = cell_nodes(t);
  Vec2 value;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    value = value + coeffs[dof(component, nodes[a])] * grad[a];
  }
  return value;
}

std::shared_ptr<const FeSpace> build_space(std::shared_ptr<const TriangleMesh> mesh, int degree,
                                           int components) {
  return std::make_shared<const FeSpace>(std::move(mesh), degree, components);
}

namespace {

[[noreturn]] void throw_non_finite(Point p, double t, double value) {
  std::ostringstream os;
  os << "interpolate: non-finite value " << value << " at (" << p.x << ", " << p.y
     << "), t = " << t;
  throw NumericInputError(os.str());
}

}  // namespace

Vector interpolate(const FeSpace& space, const ScalarField& g, double t) {
  if (space.components() != 1) throw InvalidArgument("interpolate: scalar field on vector space");
  Vector out(space.num_dofs());
  for (int i = 0; i < space.num_nodes(); ++i) {
    const Point p = space.node_coord(i);
    const double v = g(p, t);
    if (!std::isfinite(v)) throw_non_finite(p, t, v);
    out[i] = v;
  }
  return out;
}

Vector interpolate(const FeSpace& space, const VectorField& g, double t) {
  if (space.components() != 2) throw InvalidArgument("interpolate: vector field on scalar space");
  Vector out(space.num_dofs());
  for (int i = 0; i < space.num_nodes(); ++i) {
    const Point p = space.node_coord(i);
    const Vec2 v = g(p, t);
    if (!std::isfinite(v.x)) throw_non_finite(p, t, v.x);
    if (!std::isfinite(v.y)) throw_non_finite(p, t, v.y);
    out[space.dof(0, i)] = v.x;
    out[space.dof(1, i)] = v.y;
  }
  return out;
}

InflowSet classify_inflow(const FeSpace& space, const VectorField& b, double t) {
  const auto& mesh = space.mesh();
  InflowSet set;
  set.time = t;
  std::vector<char> inflow(space.num_nodes(), 0);
  const LineRule line = gauss_line_rule(kEdgeGaussPoints);
  set.gauss_inflow.resize(mesh.boundary_edges.size());

  const auto enters = [&](Point p, Vec2 n) { return dot(b(p, t), n) < 0.0; };

  for (std::size_t k = 0; k < mesh.boundary_edges.size(); ++k) {
    const auto& be = mesh.boundary_edges[k];
    const Point a = mesh.vertices[be.vertices[0]], c = mesh.vertices[be.vertices[1]];
    const Point mid{0.5 * (a.x + c.x), 0.5 * (a.y + c.y)};
    const bool in_a = enters(a, be.normal), in_c = enters(c, be.normal),
               in_mid = enters(mid, be.normal);
    if (in_a) inflow[be.vertices[0]] = 1;
    if (in_c) inflow[be.vertices[1]] = 1;
    if (space.degree() == 2 && in_mid) inflow[mesh.num_vertices() + be.edge] = 1;
    if (in_a && in_c && in_mid) set.edge_indices.push_back(static_cast<int>(k));
    for (int q = 0; q < kEdgeGaussPoints; ++q) {
      const double s = line.points[q];
      const Point p{a.x + s * (c.x - a.x), a.y + s * (c.y - a.y)};
      set.gauss_inflow[k][q] = enters(p, be.normal);
    }
  }
  for (int node : space.boundary_nodes()) {
    if (inflow[node]) set.nodes.push_back(node);
  }
  for (int c = 0; c < space.components(); ++c) {
    for (int node : set.nodes) set.dof_indices.push_back(space.dof(c, node));
  }
  return set;
}

}  // namespace opsplit
