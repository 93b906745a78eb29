#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "opsplit/types.hpp"

namespace opsplit {

enum class Side : std::uint8_t { Left = 0, Right = 1, Bottom = 2, Top = 3 };

inline constexpr std::array<Side, 4> kAllSides = {Side::Left, Side::Right, Side::Bottom,
                                                  Side::Top};

std::string_view to_string(Side side);

/// Outward unit normal of a side of the unit square.
Vec2 outward_normal(Side side);

struct BoundaryEdge {
  /// Endpoints ordered counterclockwise along the boundary.
  std::array<int, 2> vertices{};
  Vec2 normal;
  Side side = Side::Left;
  int triangle = -1;
  /// Local edge index inside `triangle` (edge k is opposite vertex k).
  int local_edge = -1;
  /// Index into TriangleMesh::edges.
  int edge = -1;
};

/// Conforming triangulation of the unit square.
///
/// Vertices are numbered row by row, (i, j) -> j * (n + 1) + i. Each square
/// cell (i, j) is split along its lower-left to upper-right diagonal into the
/// triangles 2 * (j * n + i) (below the diagonal) and 2 * (j * n + i) + 1.
/// All triangles are counterclockwise.
struct TriangleMesh {
  int subdivisions = 0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  /// Unique edges as (lower, higher) vertex index pairs.
  std::vector<std::array<int, 2>> edges;
  /// Edge ids per triangle; local edge k is opposite local vertex k.
  std::vector<std::array<int, 3>> triangle_edges;
  std::vector<BoundaryEdge> boundary_edges;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  double signed_area(int t) const;
  /// Largest triangle diameter.
  double max_diameter() const;
  /// Triangle containing p (points on shared edges resolve deterministically;
  /// points outside the square are clamped onto it first).
  int locate(Point p) const;
};

/// Structured n x n mesh of [0,1]^2; throws InvalidArgument for n < 1.
std::shared_ptr<const TriangleMesh> build_uniform_unit_square(int n);

}  // namespace opsplit
