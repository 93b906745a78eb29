#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "opsplit/mesh.hpp"
#include "opsplit/types.hpp"

namespace opsplit {

/// Affine map data for one triangle.
struct ElementGeometry {
  std::array<Point, 3> vertices;
  double area = 0.0;
  /// Constant gradients of the barycentric coordinates.
  std::array<Vec2, 3> grad_lambda;

  Point map(const std::array<double, 3>& lambda) const {
    return {lambda[0] * vertices[0].x + lambda[1] * vertices[1].x + lambda[2] * vertices[2].x,
            lambda[0] * vertices[0].y + lambda[1] * vertices[1].y + lambda[2] * vertices[2].y};
  }
  std::array<double, 3> barycentric(Point p) const;
};

ElementGeometry element_geometry(const TriangleMesh& mesh, int triangle);

/// Symmetric 2x2 second-derivative tensor (xx, xy, yy).
struct Hessian {
  double xx = 0.0, xy = 0.0, yy = 0.0;
};

/// Lagrange P1/P2 shape functions on one triangle.
///
/// Local numbering: P1 uses the three vertices; P2 appends the midpoints of
/// the edges opposite vertices 0, 1, 2.
namespace shape {

int count(int degree);
void values(int degree, const std::array<double, 3>& lambda, std::span<double> out);
void gradients(int degree, const std::array<double, 3>& lambda, const ElementGeometry& geo,
               std::span<Vec2> out);
/// Constant per element; zero for P1.
void hessians(int degree, const ElementGeometry& geo, std::span<Hessian> out);

}  // namespace shape

/// Scalar or vector Lagrange space on a TriangleMesh.
///
/// Scalar nodes are the mesh vertices followed (for P2) by the edge
/// midpoints in mesh edge order. Vector DOFs are blocked by component:
/// dof(c, node) = c * num_nodes() + node.
class FeSpace {
 public:
  FeSpace(std::shared_ptr<const TriangleMesh> mesh, int degree, int components);

  const TriangleMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriangleMesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int components() const { return components_; }

  int num_nodes() const { return static_cast<int>(node_coords_.size()); }
  int num_dofs() const { return components_ * num_nodes(); }
  int nodes_per_cell() const { return shape::count(degree_); }

  int dof(int component, int node) const { return component * num_nodes() + node; }
  int node_of(int dof) const { return dof % num_nodes(); }
  int component_of(int dof) const { return dof / num_nodes(); }

  Point node_coord(int node) const { return node_coords_[node]; }
  Point dof_coord(int dof) const { return node_coords_[node_of(dof)]; }
  const std::vector<Point>& node_coords() const { return node_coords_; }

  std::span<const int> cell_nodes(int triangle) const {
    return {cell_nodes_.data() + static_cast<std::size_t>(triangle) * nodes_per_cell(),
            static_cast<std::size_t>(nodes_per_cell())};
  }
  /// All DOFs (every component) of a triangle, component-major.
  std::vector<int> cell_dofs(int triangle) const;

  /// Scalar nodes on one side, sorted.
  const std::vector<int>& side_nodes(Side side) const {
    return side_nodes_[static_cast<int>(side)];
  }
  /// DOFs (all components) on one side, sorted.
  std::vector<int> boundary_dofs(Side side) const;
  /// Sorted scalar nodes on the whole boundary.
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  /// Sorted DOFs (all components) on the whole boundary.
  std::vector<int> all_boundary_dofs() const;

  /// Scalar nodes of boundary edge `k` (2 for P1, 3 for P2 with midpoint last).
  std::vector<int> boundary_edge_nodes(int k) const;

  /// Finite element function value at p for one component.
  double evaluate(std::span<const double> coeffs, Point p, int component = 0) const;
  /// Finite element gradient at p for one component (element-local, located
  /// through TriangleMesh::locate).
  Vec2 evaluate_gradient(std::span<const double> coeffs, Point p, int component = 0) const;

 private:
  std::shared_ptr<const TriangleMesh> mesh_;
  int degree_;
  int components_;
  std::vector<Point> node_coords_;
  std::vector<int> cell_nodes_;
  std::array<std::vector<int>, 4> side_nodes_;
  std::vector<int> boundary_nodes_;
};

std::shared_ptr<const FeSpace> build_space(std::shared_ptr<const TriangleMesh> mesh, int degree,
                                           int components);

/// Nodal interpolant of a scalar field (scalar space) at time t.
Vector interpolate(const FeSpace& space, const ScalarField& g, double t);
/// Nodal interpolant of a vector field (two-component space) at time t.
Vector interpolate(const FeSpace& space, const VectorField& g, double t);

/// Boundary portion where an advecting field points into the domain.
struct InflowSet {
  double time = 0.0;
  /// Sorted scalar nodes with b . n < 0.
  std::vector<int> nodes;
  /// Sorted DOF indices (every component of each inflow node).
  std::vector<int> dof_indices;
  /// Boundary edges whose endpoints and midpoint are all inflow.
  std::vector<int> edge_indices;
  /// Per boundary edge, inflow flags at the 3-point Gauss nodes used for
  /// boundary integrals over the complement of the inflow set.
  std::vector<std::array<bool, 3>> gauss_inflow;

  bool empty() const { return nodes.empty(); }
};

/// Number of Gauss points per boundary edge used for all line integrals.
inline constexpr int kEdgeGaussPoints = 3;

/// Classifies the inflow boundary at time t. A node is inflow iff
/// b(x, t) . n < 0 with the normal of its side; corner nodes qualify if either
/// adjacent side passes.
InflowSet classify_inflow(const FeSpace& space, const VectorField& b, double t);

}  // namespace opsplit
