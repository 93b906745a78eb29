#include "opsplit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "opsplit/errors.hpp"

namespace opsplit {

std::string_view to_string(Side side) {
  switch (side) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
  }
  return "?";
}

Vec2 outward_normal(Side side) {
  switch (side) {
    case Side::Left: return {-1.0, 0.0};
    case Side::Right: return {1.0, 0.0};
    case Side::Bottom: return {0.0, -1.0};
    case Side::Top: return {0.0, 1.0};
  }
  return {};
}

double TriangleMesh::signed_area(int t) const {
  const auto& tri = triangles[t];
  const Point a = vertices[tri[0]], b = vertices[tri[1]], c = vertices[tri[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double TriangleMesh::max_diameter() const {
  double h = 0.0;
  for (const auto& e : edges) {
    const Point a = vertices[e[0]], b = vertices[e[1]];
    h = std::max(h, std::hypot(b.x - a.x, b.y - a.y));
  }
  return h;
}

int TriangleMesh::locate(Point p) const {
  const int n = subdivisions;
  const double sx = std::clamp(p.x, 0.0, 1.0) * n;
  const double sy = std::clamp(p.y, 0.0, 1.0) * n;
  const int i = std::min(static_cast<int>(std::floor(sx)), n - 1);
  const int j = std::min(static_cast<int>(std::floor(sy)), n - 1);
  const int cell = j * n + i;
  return (sx - i) >= (sy - j) ? 2 * cell : 2 * cell + 1;
}

std::shared_ptr<const TriangleMesh> build_uniform_unit_square(int n) {
  if (n < 1) {
    throw InvalidArgument("build_uniform_unit_square: subdivision count must be >= 1, got " +
                          std::to_string(n));
  }
  auto mesh = std::make_shared<TriangleMesh>();
  mesh->subdivisions = n;
  const auto vid = [n](int i, int j) { return j * (n + 1) + i; };

  mesh->vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      mesh->vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }

  mesh->triangles.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1),
                v11 = vid(i + 1, j + 1);
      mesh->triangles.push_back({v00, v10, v11});
      mesh->triangles.push_back({v00, v11, v01});
    }
  }

  std::map<std::pair<int, int>, int> edge_ids;
  mesh->triangle_edges.resize(mesh->triangles.size());
  for (std::size_t t = 0; t < mesh->triangles.size(); ++t) {
    const auto& tri = mesh->triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_ids.try_emplace({key.first, key.second}, mesh->num_edges());
      if (inserted) mesh->edges.push_back({key.first, key.second});
      mesh->triangle_edges[t][k] = it->second;
    }
  }

  // Owner triangle of every edge; boundary edges have exactly one.
  std::vector<int> owner(mesh->edges.size(), -1), owner_local(mesh->edges.size(), -1);
  std::vector<int> uses(mesh->edges.size(), 0);
  for (std::size_t t = 0; t < mesh->triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int e = mesh->triangle_edges[t][k];
      ++uses[e];
      owner[e] = static_cast<int>(t);
      owner_local[e] = k;
    }
  }

  const auto add_boundary = [&](int a, int b, Side side) {
    const auto key = std::minmax(a, b);
    const int e = edge_ids.at({key.first, key.second});
    if (uses[e] != 1) throw Error("build_uniform_unit_square: boundary edge shared");
    mesh->boundary_edges.push_back(
        {{a, b}, outward_normal(side), side, owner[e], owner_local[e], e});
  };
  for (int i = 0; i < n; ++i) add_boundary(vid(i, 0), vid(i + 1, 0), Side::Bottom);
  for (int j = 0; j < n; ++j) add_boundary(vid(n, j), vid(n, j + 1), Side::Right);
  for (int i = n; i > 0; --i) add_boundary(vid(i, n), vid(i - 1, n), Side::Top);
  for (int j = n; j > 0; --j) add_boundary(vid(0, j), vid(0, j - 1), Side::Left);

  return mesh;
}

}  // namespace opsplit
