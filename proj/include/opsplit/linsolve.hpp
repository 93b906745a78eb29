#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "opsplit/csr_matrix.hpp"
#include "opsplit/types.hpp"

namespace opsplit {

enum class Preconditioner { None, Jacobi, IncompleteCholesky };

struct SolverConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  /// 0 selects 10 * n.
  int max_iter = 0;
  Preconditioner preconditioner = Preconditioner::IncompleteCholesky;

  void validate() const;
};

struct SolveReport {
  int iterations = 0;
  /// ||A x - b||_2 recomputed from the returned x.
  double residual = 0.0;
  /// Recursively updated residual norm when the solver stopped.
  double internal_residual = 0.0;
};

/// Called after every CG iteration with the current iterate and the
/// recursively updated residual norm.
using CgObserver = std::function<void(int iteration, std::span<const double> x, double residual)>;

/// Zero fill-in incomplete Cholesky, A ~ L L^T. Retries with a growing
/// diagonal shift if a pivot is not positive.
class IncompleteCholesky {
 public:
  explicit IncompleteCholesky(const CsrMatrix& a);
  void apply(std::span<const double> r, std::span<double> z) const;
  double shift() const { return shift_; }

 private:
  bool factor(const CsrMatrix& a, double shift);

  int n_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<double> values_;
  std::vector<int> diag_pos_;
  double shift_ = 0.0;
};

/// Preconditioned conjugate gradients for one SPD matrix; the preconditioner
/// is built once and reused across solves.
class PcgSolver {
 public:
  PcgSolver(CsrMatrix a, SolverConfig config);

  /// Throws NonConvergenceError when the iteration budget is exhausted and
  /// MatrixPropertyError when p^T A p <= 0.
  Vector solve(std::span<const double> rhs, std::span<const double> guess = {},
               SolveReport* report = nullptr, const CgObserver& observer = {}) const;

  const CsrMatrix& matrix() const { return a_; }
  const SolverConfig& config() const { return config_; }

 private:
  void precondition(std::span<const double> r, std::span<double> z) const;

  CsrMatrix a_;
  SolverConfig config_;
  std::vector<double> inv_diag_;
  std::unique_ptr<IncompleteCholesky> ic_;
};

Vector solve_spd(const CsrMatrix& a, std::span<const double> rhs, const SolverConfig& config,
                 SolveReport* report = nullptr);

/// Symmetric elimination of Dirichlet rows and columns. Fixed rows and
/// columns become identity; the coupling to free rows moves to the RHS.
class ConstrainedSystem {
 public:
  ConstrainedSystem(const CsrMatrix& a, std::vector<int> fixed);

  const CsrMatrix& matrix() const { return constrained_; }
  const std::vector<int>& fixed() const { return fixed_; }
  bool is_fixed(int dof) const { return is_fixed_[dof] != 0; }

  /// rhs - A_{:,fixed} * values on free rows, values on fixed rows.
  Vector lift(std::span<const double> rhs, std::span<const double> fixed_values) const;

 private:
  CsrMatrix constrained_;
  CsrMatrix coupling_;
  std::vector<int> fixed_;
  std::vector<char> is_fixed_;
};

/// Sparse Cholesky factorization of an SPD matrix.
class SpdFactorization {
 public:
  explicit SpdFactorization(const CsrMatrix& a);
  ~SpdFactorization();
  SpdFactorization(SpdFactorization&&) noexcept;
  SpdFactorization& operator=(SpdFactorization&&) noexcept;

  Vector solve(std::span<const double> rhs) const;
  int size() const { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
};

/// Sparse LU factorization of a general square matrix.
class LuFactorization {
 public:
  explicit LuFactorization(const CsrMatrix& a);
  ~LuFactorization();
  LuFactorization(LuFactorization&&) noexcept;
  LuFactorization& operator=(LuFactorization&&) noexcept;

  Vector solve(std::span<const double> rhs) const;
  int size() const { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
};

struct StokesSystem;

/// Reusable factorization of an assembled saddle-point system. Becomes stale
/// when the owning StokesSystem is invalidated or destroyed.
class SaddleHandle {
 public:
  SaddleHandle() = default;
  bool valid() const { return !token_.expired() && lu_ != nullptr; }

 private:
  friend SaddleHandle factorize_saddle(const StokesSystem& system);
  friend struct SaddleSolution solve_saddle(const SaddleHandle& handle,
                                            std::span<const double> rhs);
  std::shared_ptr<const LuFactorization> lu_;
  std::weak_ptr<const int> token_;
  int velocity_dofs_ = 0;
  int pressure_dofs_ = 0;
};

struct SaddleSolution {
  Vector velocity;
  Vector pressure;
  /// Lagrange multiplier of the zero-mean pressure constraint.
  double multiplier = 0.0;
};

/// Factorizes the full constrained saddle-point matrix once.
/// Throws FactorizationError when the matrix is singular.
SaddleHandle factorize_saddle(const StokesSystem& system);

/// Solves with a full-length RHS (velocity, pressure, multiplier rows).
/// Throws StaleHandleError on an invalidated handle.
SaddleSolution solve_saddle(const SaddleHandle& handle, std::span<const double> rhs);

/// Dense Gaussian elimination with partial pivoting (row-major, n x n).
/// Reference solver for small systems.
Vector dense_solve(std::vector<double> a, Vector b);

}  // namespace opsplit
