#pragma once

#include <array>
#include <vector>

namespace opsplit {

/// Rule on the reference triangle {(0,0), (1,0), (0,1)}.
struct QuadratureRule {
  /// Barycentric coordinates (l0, l1, l2) of each point.
  std::vector<std::array<double, 3>> points;
  /// Weights summing to the reference area 1/2.
  std::vector<double> weights;
  int exact_degree = 0;

  std::size_t size() const { return weights.size(); }
};

/// Symmetric 6-point rule, exact to degree 4.
const QuadratureRule& triangle_rule_degree4();
/// Symmetric 12-point rule, exact to degree 6.
const QuadratureRule& triangle_rule_degree6();
/// Conical product of Gauss-Legendre rules with `n` points per direction,
/// exact to degree 2n - 2.
QuadratureRule collapsed_gauss_rule(int n);

/// Gauss-Legendre rule on [0, 1] with weights summing to 1.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

LineRule gauss_line_rule(int n);

}  // namespace opsplit
