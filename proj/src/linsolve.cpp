#include "opsplit/linsolve.hpp"

#include <Eigen/Sparse>
#include <Eigen/UmfPackSupport>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "opsplit/assembly.hpp"
#include "opsplit/errors.hpp"

namespace opsplit {

void SolverConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw InvalidArgument("SolverConfig: tolerances must be positive");
  }
  if (max_iter < 0) throw InvalidArgument("SolverConfig: max_iter must be >= 1 (or 0 for auto)");
}

// ---------------------------------------------------------------------------
// Incomplete Cholesky

IncompleteCholesky::IncompleteCholesky(const CsrMatrix& a) : n_(a.rows()) {
  double shift = 0.0;
  for (int attempt = 0; attempt < 20; ++attempt) {
    if (factor(a, shift)) {
      shift_ = shift;
      return;
    }
    shift = shift == 0.0 ? 1e-3 : 2.0 * shift;
  }
  throw FactorizationError("IncompleteCholesky: no positive factorization with diagonal shift");
}

bool IncompleteCholesky::factor(const CsrMatrix& a, double shift) {
  row_ptr_.assign(1, 0);
  col_idx_.clear();
  values_.clear();
  diag_pos_.assign(n_, -1);
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& av = a.values();
  for (int i = 0; i < n_; ++i) {
    for (int k = rp[i]; k < rp[i + 1] && ci[k] <= i; ++k) {
      col_idx_.push_back(ci[k]);
      values_.push_back(ci[k] == i ? av[k] * (1.0 + shift) : av[k]);
    }
    if (col_idx_.empty() || col_idx_.back() != i) return false;
    diag_pos_[i] = static_cast<int>(col_idx_.size()) - 1;
    row_ptr_.push_back(static_cast<int>(col_idx_.size()));
  }
  for (int i = 0; i < n_; ++i) {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const int j = col_idx_[k];
      // sum_{p < j} l_ip l_jp over the shared pattern
      double s = 0.0;
      int pi = row_ptr_[i], pj = row_ptr_[j];
      while (pi < k && pj < diag_pos_[j]) {
        if (col_idx_[pi] == col_idx_[pj]) {
          s += values_[pi] * values_[pj];
          ++pi;
          ++pj;
        } else if (col_idx_[pi] < col_idx_[pj]) {
          ++pi;
        } else {
          ++pj;
        }
      }
      if (j < i) {
        values_[k] = (values_[k] - s) / values_[diag_pos_[j]];
      } else {
        const double d = values_[k] - s;
        if (!(d > 0.0)) return false;
        values_[k] = std::sqrt(d);
      }
    }
  }
  return true;
}

void IncompleteCholesky::apply(std::span<const double> r, std::span<double> z) const {
  std::vector<double> y(r.begin(), r.end());
  for (int i = 0; i < n_; ++i) {
    double s = y[i];
    for (int k = row_ptr_[i]; k < diag_pos_[i]; ++k) s -= values_[k] * y[col_idx_[k]];
    y[i] = s / values_[diag_pos_[i]];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    const double zi = y[i] / values_[diag_pos_[i]];
    z[i] = zi;
    for (int k = row_ptr_[i]; k < diag_pos_[i]; ++k) y[col_idx_[k]] -= values_[k] * zi;
  }
}

// ---------------------------------------------------------------------------
// Conjugate gradients

PcgSolver::PcgSolver(CsrMatrix a, SolverConfig config) : a_(std::move(a)), config_(config) {
  config_.validate();
  if (a_.rows() != a_.cols()) throw InvalidArgument("PcgSolver: matrix must be square");
  switch (config_.preconditioner) {
    case Preconditioner::None:
      break;
    case Preconditioner::Jacobi: {
      inv_diag_ = a_.diagonal();
      for (double& d : inv_diag_) {
        if (!(d > 0.0)) throw MatrixPropertyError("PcgSolver: non-positive diagonal entry");
        d = 1.0 / d;
      }
      break;
    }
    case Preconditioner::IncompleteCholesky:
      ic_ = std::make_unique<IncompleteCholesky>(a_);
      break;
  }
}

void PcgSolver::precondition(std::span<const double> r, std::span<double> z) const {
  if (ic_) {
    ic_->apply(r, z);
  } else if (!inv_diag_.empty()) {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
  } else {
    std::copy(r.begin(), r.end(), z.begin());
  }
}

Vector PcgSolver::solve(std::span<const double> rhs, std::span<const double> guess,
                        SolveReport* report, const CgObserver& observer) const {
  const int n = a_.rows();
  if (static_cast<int>(rhs.size()) != n) throw InvalidArgument("PcgSolver: rhs size mismatch");
  const int max_iter = config_.max_iter > 0 ? config_.max_iter : std::max(10 * n, 10);
  const double tol = std::max(config_.rel_tol * norm2(rhs), config_.abs_tol);

  Vector x(n, 0.0);
  if (!guess.empty()) std::copy(guess.begin(), guess.end(), x.begin());
  Vector r(n), z(n), p(n), ap(n);
  const auto true_residual = [&] {
    a_.multiply(x, ap);
    for (int i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
    return norm2(r);
  };

  double rnorm = true_residual();
  int it = 0;
  while (true) {
    if (rnorm <= tol) {
      const double actual = true_residual();
      if (actual <= tol) {
        if (report) *report = {it, actual, rnorm};
        return x;
      }
      rnorm = actual;
    }
    // (Re)start the recurrence from the current residual.
    precondition(r, z);
    p = z;
    double rz = dot(r, z);
    bool restart = false;
    while (!restart) {
      if (it >= max_iter) {
        std::ostringstream os;
        os << "PCG: no convergence after " << it << " iterations, residual " << rnorm
           << " > " << tol;
        throw NonConvergenceError(os.str(), rnorm, it);
      }
      a_.multiply(p, ap);
      const double pap = dot(p, ap);
      if (!(pap > 0.0)) {
        throw MatrixPropertyError("PCG: matrix is not positive definite (p^T A p <= 0)");
      }
      const double alpha = rz / pap;
      for (int i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      ++it;
      rnorm = norm2(r);
      if (observer) observer(it, x, rnorm);
      if (rnorm <= tol) {
        restart = true;
        continue;
      }
      precondition(r, z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }
}

Vector solve_spd(const CsrMatrix& a, std::span<const double> rhs, const SolverConfig& config,
                 SolveReport* report) {
  return PcgSolver(a, config).solve(rhs, {}, report);
}

// ---------------------------------------------------------------------------
// Dirichlet elimination

ConstrainedSystem::ConstrainedSystem(const CsrMatrix& a, std::vector<int> fixed)
    : fixed_(std::move(fixed)), is_fixed_(a.rows(), 0) {
  std::sort(fixed_.begin(), fixed_.end());
  fixed_.erase(std::unique(fixed_.begin(), fixed_.end()), fixed_.end());
  for (int d : fixed_) {
    if (d < 0 || d >= a.rows()) throw InvalidArgument("ConstrainedSystem: fixed dof out of range");
    is_fixed_[d] = 1;
  }
  std::vector<Triplet> kept, coupled;
  kept.reserve(a.nnz());
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& av = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    if (is_fixed_[r]) {
      kept.push_back({r, r, 1.0});
      continue;
    }
    for (int k = rp[r]; k < rp[r + 1]; ++k) {
      if (is_fixed_[ci[k]]) {
        coupled.push_back({r, ci[k], av[k]});
      } else {
        kept.push_back({r, ci[k], av[k]});
      }
    }
  }
  constrained_ = CsrMatrix::from_triplets(a.rows(), a.cols(), std::move(kept));
  coupling_ = CsrMatrix::from_triplets(a.rows(), a.cols(), std::move(coupled));
}

Vector ConstrainedSystem::lift(std::span<const double> rhs,
                               std::span<const double> fixed_values) const {
  if (fixed_values.size() != fixed_.size()) {
    throw InvalidArgument("ConstrainedSystem::lift: value count mismatch");
  }
  Vector xd(rhs.size(), 0.0);
  for (std::size_t k = 0; k < fixed_.size(); ++k) xd[fixed_[k]] = fixed_values[k];
  Vector out = coupling_ * xd;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = is_fixed_[i] ? xd[i] : rhs[i] - out[i];
  return out;
}

// ---------------------------------------------------------------------------
// Sparse direct factorizations

namespace {

using EigenSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

EigenSparse to_eigen(const CsrMatrix& a) {
  Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, int>> view(
      a.rows(), a.cols(), static_cast<Eigen::Index>(a.nnz()), a.row_ptr().data(),
      a.col_idx().data(), a.values().data());
  EigenSparse m(view);
  m.makeCompressed();
  return m;
}

}  // namespace

struct SpdFactorization::Impl {
  Eigen::SimplicialLLT<EigenSparse> llt;
};

SpdFactorization::SpdFactorization(const CsrMatrix& a)
    : impl_(std::make_unique<Impl>()), n_(a.rows()) {
  impl_->llt.compute(to_eigen(a));
  if (impl_->llt.info() != Eigen::Success) {
    throw FactorizationError("SpdFactorization: Cholesky failed (matrix not SPD?)");
  }
}

SpdFactorization::~SpdFactorization() = default;
SpdFactorization::SpdFactorization(SpdFactorization&&) noexcept = default;
SpdFactorization& SpdFactorization::operator=(SpdFactorization&&) noexcept = default;

Vector SpdFactorization::solve(std::span<const double> rhs) const {
  if (static_cast<int>(rhs.size()) != n_) throw InvalidArgument("SpdFactorization: size mismatch");
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n_);
  Vector x(n_);
  Eigen::Map<Eigen::VectorXd>(x.data(), n_) = impl_->llt.solve(b);
  return x;
}

struct LuFactorization::Impl {
  /// UmfPackLU keeps a reference to the factorized matrix.
  EigenSparse matrix;
  Eigen::UmfPackLU<EigenSparse> lu;
};

LuFactorization::LuFactorization(const CsrMatrix& a)
    : impl_(std::make_unique<Impl>()), n_(a.rows()) {
  if (a.rows() != a.cols()) throw InvalidArgument("LuFactorization: matrix must be square");
  impl_->matrix = to_eigen(a);
  impl_->lu.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
  impl_->lu.umfpackControl()(UMFPACK_IRSTEP) = 1;
  impl_->lu.compute(impl_->matrix);
  if (impl_->lu.info() != Eigen::Success) {
    throw FactorizationError("LuFactorization: sparse LU failed (structurally singular?)");
  }
}

LuFactorization::~LuFactorization() = default;
LuFactorization::LuFactorization(LuFactorization&&) noexcept = default;
LuFactorization& LuFactorization::operator=(LuFactorization&&) noexcept = default;

Vector LuFactorization::solve(std::span<const double> rhs) const {
  if (static_cast<int>(rhs.size()) != n_) throw InvalidArgument("LuFactorization: size mismatch");
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n_);
  Vector x(n_);
  Eigen::Map<Eigen::VectorXd>(x.data(), n_) = impl_->lu.solve(b);
  return x;
}

// ---------------------------------------------------------------------------
// Saddle point

SaddleHandle factorize_saddle(const StokesSystem& system) {
  SaddleHandle handle;
  const CsrMatrix& full = system.full_matrix();
  auto lu = std::make_shared<LuFactorization>(full);
  // UMFPACK reports success for some numerically singular matrices; check a
  // solve for finiteness before handing the factorization out.
  Vector probe(full.rows(), 1.0);
  for (double v : lu->solve(probe)) {
    if (!std::isfinite(v)) throw FactorizationError("factorize_saddle: singular saddle matrix");
  }
  handle.lu_ = std::move(lu);
  handle.token_ = system.token();
  handle.velocity_dofs_ = system.velocity_dofs();
  handle.pressure_dofs_ = system.pressure_dofs();
  return handle;
}

SaddleSolution solve_saddle(const SaddleHandle& handle, std::span<const double> rhs) {
  if (!handle.valid()) throw StaleHandleError("solve_saddle: factorization handle is stale");
  const int nu = handle.velocity_dofs_, np = handle.pressure_dofs_;
  if (static_cast<int>(rhs.size()) != nu + np + 1) {
    throw InvalidArgument("solve_saddle: rhs dimension mismatch");
  }
  const Vector x = handle.lu_->solve(rhs);
  SaddleSolution sol;
  sol.velocity.assign(x.begin(), x.begin() + nu);
  sol.pressure.assign(x.begin() + nu, x.begin() + nu + np);
  sol.multiplier = x[nu + np];
  return sol;
}

// ---------------------------------------------------------------------------

Vector dense_solve(std::vector<double> a, Vector b) {
  const int n = static_cast<int>(b.size());
  if (a.size() != static_cast<std::size_t>(n) * n) throw InvalidArgument("dense_solve: shape");
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
    }
    if (a[piv * n + k] == 0.0) throw FactorizationError("dense_solve: singular matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
      std::swap(b[k], b[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = a[i * n + k] / a[k * n + k];
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
    x[i] = s / a[i * n + i];
  }
  return x;
}

}  // namespace opsplit
