#pragma once

#include <memory>
#include <span>
#include <vector>

#include "opsplit/csr_matrix.hpp"
#include "opsplit/fe_space.hpp"
#include "opsplit/linsolve.hpp"
#include "opsplit/quadrature.hpp"
#include "opsplit/types.hpp"

namespace opsplit {

/// Degree-4 rule for P1 forms, degree-6 rule for P2.
const QuadratureRule& assembly_rule(const FeSpace& space);

/// Gram matrix (phi_j, phi_i). With `lumped`: row sums for P1, diagonal
/// scaled to the same total (HRZ) for P2.
/// Vector spaces give the block-diagonal matrix.
CsrMatrix mass_matrix(const FeSpace& space, bool lumped = false);

/// (eps grad phi_j, grad phi_i) + (c phi_j, phi_i) with coefficients sampled
/// at time t. Throws CoefficientSignError if eps < 0 at a quadrature point.
CsrMatrix diffusion_reaction_matrix(const FeSpace& space, const ScalarField& eps,
                                    const ScalarField& c, double t);

/// Vector Laplacian (grad u, grad v), block diagonal.
CsrMatrix stiffness_matrix(const FeSpace& space);

/// (g(., t), phi_i) by quadrature.
Vector load_vector(const FeSpace& space, const ScalarField& g, double t);
Vector load_vector(const FeSpace& space, const VectorField& g, double t);

/// Data of the scalar pure-convection subproblem.
struct ConvectionCoefficients {
  VectorField b;
  /// Analytic divergence of b; empty means divergence-free.
  ScalarField div_b;
  /// Convection-step source; empty means f = 0.
  ScalarField f;
};

/// Right-hand side of the explicit scalar convection step from t_lo to
/// t_lo + dt:
///
///   (u, v) + dt (f(t_mid), v) + dt (xi, b(t_mid) . grad v)
///     - dt <xi, v b(t_mid) . n> on the boundary outside the inflow set,
///
/// with the half-step predictor xi = u + dt/2 (f(t_lo) - div(b(t_lo) u))
/// evaluated pointwise from the element polynomial of u, and
/// div(b u) = u div b + b . grad u. The boundary integral skips Gauss points
/// flagged in `inflow`. Throws InvalidArgument if `inflow` is null.
Vector cd_convection_rhs(const FeSpace& space, std::span<const double> u_prev,
                         const ConvectionCoefficients& coeffs, double t_lo, double dt,
                         const InflowSet* inflow);

/// M + dt * (diffusion + reaction at t).
CsrMatrix cd_diffusion_system(const FeSpace& space, double dt, const ScalarField& eps,
                              const ScalarField& c, double t);

/// Right-hand side of the explicit nonlinear convection step (f = 0):
///
///   (u, v) + dt (eta, (div eta) v + (eta . grad) v)
///     - dt <eta, (eta . n) v> on the boundary outside the inflow set,
///
/// with eta = u - dt/2 (u . grad) u and div eta taken from the exact
/// element-local polynomial. Throws InvalidArgument on a scalar space or a
/// null inflow set.
Vector ns_convection_rhs(const FeSpace& space, std::span<const double> u_prev, double dt,
                         const InflowSet* inflow);

/// Pressure-divergence coupling, B_{q, j} = -(q, div phi_j); rows are
/// pressure DOFs.
CsrMatrix divergence_matrix(const FeSpace& velocity, const FeSpace& pressure);

/// Generalized Stokes saddle-point system
///
///   [ A   B^T  0 ] [u]        A = dt^{-1} M + Re^{-1} K
///   [ B   0    c ] [p]   ,    c_q = (1, q)
///   [ 0   c^T  0 ] [lambda]
///
/// with every boundary velocity DOF eliminated symmetrically. The matrix
/// depends only on mesh, dt and Re.
class StokesSystem {
 public:
  StokesSystem(std::shared_ptr<const FeSpace> velocity, std::shared_ptr<const FeSpace> pressure,
               double dt, double reynolds);

  const FeSpace& velocity_space() const { return *velocity_; }
  const FeSpace& pressure_space() const { return *pressure_; }
  double dt() const { return dt_; }
  double reynolds() const { return reynolds_; }

  const CsrMatrix& a_uu() const { return a_uu_; }
  const CsrMatrix& b() const { return b_; }
  const Vector& mean_row() const { return mean_row_; }
  const CsrMatrix& full_matrix() const { return constrained_->matrix(); }
  const std::vector<int>& fixed_velocity_dofs() const { return constrained_->fixed(); }

  int velocity_dofs() const { return velocity_->num_dofs(); }
  int pressure_dofs() const { return pressure_->num_dofs(); }

  /// Full RHS from a velocity load vector and the values of
  /// fixed_velocity_dofs() (in that order).
  Vector make_rhs(std::span<const double> velocity_load,
                  std::span<const double> boundary_values) const;

  std::weak_ptr<const int> token() const { return token_; }
  /// Marks every handle factorized from this system as stale.
  void invalidate() { token_.reset(); }

 private:
  std::shared_ptr<const FeSpace> velocity_;
  std::shared_ptr<const FeSpace> pressure_;
  double dt_;
  double reynolds_;
  CsrMatrix a_uu_;
  CsrMatrix b_;
  Vector mean_row_;
  std::unique_ptr<ConstrainedSystem> constrained_;
  std::shared_ptr<const int> token_;
};

std::shared_ptr<StokesSystem> stokes_system(std::shared_ptr<const FeSpace> velocity,
                                            std::shared_ptr<const FeSpace> pressure, double dt,
                                            double reynolds);

}  // namespace opsplit
