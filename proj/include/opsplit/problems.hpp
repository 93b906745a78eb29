#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "opsplit/fe_space.hpp"
#include "opsplit/types.hpp"

namespace opsplit {

enum class ProblemKind {
  CdExample1,
  CdExample2,
  NsExample3,
  NsExample4,
  Cavity,
  CdZero,
  NsZero,
  CdPureDiffusion,
};

struct ProblemId {
  ProblemKind kind = ProblemKind::CdExample1;
  /// NS problems only; 0 selects the problem default.
  double reynolds = 0.0;

  bool is_navier_stokes() const;
  friend bool operator==(const ProblemId&, const ProblemId&) = default;
};

/// "cd-example1", "cd-example2", "ns-example3", "ns-example4", "cavity",
/// "cd-zero", "ns-zero", "cd-pure-diffusion".
std::string to_string(ProblemKind kind);
/// Throws InvalidArgument on an unknown name.
ProblemKind parse_problem_kind(std::string_view name);

/// u_t + div(b u) - div(eps grad u) + c u = f + g, u = u_b on the boundary.
struct CdProblem {
  std::string name;
  VectorField b;
  /// Empty when b is divergence-free.
  ScalarField div_b;
  ScalarField eps;
  ScalarField c;
  /// Source handled in the convection step; empty means zero.
  ScalarField f;
  /// Source handled in the diffusion step.
  ScalarField g;
  ScalarField u_b;
  ScalarField u0;
  /// Empty when no closed-form solution is known.
  ScalarField exact;
  double final_time = 1.0;
  /// eps and c do not depend on t, so the Step-2 matrix can be reused.
  bool steady_coefficients = true;
};

/// u_t + (u . grad) u - Re^{-1} lap u + grad p = g, div u = 0.
struct NsProblem {
  std::string name;
  double reynolds = 1.0;
  VectorField g;
  VectorField u_b;
  VectorField u0;
  VectorField exact_velocity;
  ScalarField exact_pressure;
  double final_time = 1.0;
};

using Problem = std::variant<CdProblem, NsProblem>;

Problem make_problem(const ProblemId& id);
/// Throws InvalidArgument if `id` names an NS problem.
CdProblem make_cd_problem(const ProblemId& id);
/// Throws InvalidArgument if `id` names a scalar problem.
NsProblem make_ns_problem(const ProblemId& id);

/// Moves the whole forcing into g (f = 0) or into f (g = 0).
CdProblem with_convection_source(CdProblem problem, bool in_convection_step);
/// Replaces eps by a constant and rebuilds the forcing from the exact
/// solution. Only for the manufactured scalar examples.
CdProblem with_diffusion(const ProblemId& id, double eps);

/// L2 norm of u_h - exact(., t); vector spaces use the summed squares of
/// both components. Element quadrature of degree 14.
double l2_error(const FeSpace& space, std::span<const double> coeffs, const ScalarField& exact,
                double t);
double l2_error(const FeSpace& space, std::span<const double> coeffs, const VectorField& exact,
                double t);

/// order_k = log2(e_{k-1} / e_k). Throws InvalidArgument on fewer than two
/// errors or a non-positive error.
std::vector<double> convergence_order(std::span<const double> errors);
/// Same, after checking that resolutions halve from one row to the next.
std::vector<double> convergence_order(std::span<const double> resolutions,
                                      std::span<const double> errors);

}  // namespace opsplit
