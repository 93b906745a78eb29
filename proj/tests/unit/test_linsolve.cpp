#include <random>

#include "doctest.h"
#include "opsplit/assembly.hpp"
#include "opsplit/errors.hpp"
#include "opsplit/linsolve.hpp"
#include "opsplit/mesh.hpp"
#include "test_helpers.hpp"

using namespace opsplit;

namespace {

CsrMatrix laplacian_1d(int n, double shift) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    t.push_back({i, i, 2.0 + shift});
    if (i > 0) t.push_back({i, i - 1, -1.0});
    if (i + 1 < n) t.push_back({i, i + 1, -1.0});
  }
  return CsrMatrix::from_triplets(n, n, t);
}

Vector random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

CsrMatrix fe_system(int n) {
  const auto space = build_space(build_uniform_unit_square(n), 1, 1);
  return cd_diffusion_system(*space, 0.01, constant_field(0.1), constant_field(1.0), 0.0);
}

}  // namespace

TEST_CASE("csr from triplets sums duplicates and rejects bad input") {
  const auto a = CsrMatrix::from_triplets(2, 3, {{0, 1, 1.0}, {0, 1, 2.0}, {1, 2, -1.0}});
  CHECK(a.at(0, 1) == 3.0);
  CHECK(a.at(1, 0) == 0.0);
  CHECK(a.nnz() == 2u);
  const Vector y = a * Vector{1.0, 2.0, 3.0};
  CHECK(y == Vector{6.0, -3.0});
  CHECK(a.transpose().at(2, 1) == -1.0);
  CHECK_THROWS_AS(CsrMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(CsrMatrix::from_triplets(2, 2, {{0, 0, std::nan("")}}), NumericInputError);
  CHECK_THROWS_AS(a.add(CsrMatrix::identity(2)), InvalidArgument);
}

TEST_CASE("csr algebra helpers") {
  const auto a = laplacian_1d(4, 0.0);
  CHECK(a.asymmetry() == 0.0);
  CHECK(a.row_sums() == Vector{1.0, 0.0, 0.0, 1.0});
  const auto b = a.add(CsrMatrix::identity(4), 2.0);
  CHECK(b.at(0, 0) == 4.0);
  CHECK(a.scaled(-1.0).at(1, 2) == 1.0);
  CHECK(CsrMatrix::diagonal(Vector{1, 2, 3}).at(2, 2) == 3.0);
  CHECK(norm_inf(Vector{1.0, -4.0, 2.0}) == 4.0);
  CHECK(norm2(Vector{3.0, 4.0}) == 5.0);
}

TEST_CASE("pcg matches the dense solve for every preconditioner") {
  const auto a = fe_system(6);
  const Vector b = random_vector(a.rows(), 1);
  const Vector ref = dense_solve(a.to_dense(), b);
  for (auto pc : {Preconditioner::None, Preconditioner::Jacobi, Preconditioner::IncompleteCholesky}) {
    SolveReport report;
    const Vector x = solve_spd(a, b, {1e-13, 1e-18, 0, pc}, &report);
    CHECK(testing::max_diff(x, ref) < 1e-10);
    CHECK(report.residual < 1e-11);
  }
}

TEST_CASE("incomplete cholesky is exact for a tridiagonal matrix") {
  const auto a = laplacian_1d(10, 0.5);
  const IncompleteCholesky ic(a);
  CHECK(ic.shift() == 0.0);
  const Vector b = random_vector(10, 2);
  Vector z(10);
  ic.apply(b, z);
  CHECK(testing::max_diff(z, dense_solve(a.to_dense(), b)) < 1e-13);
}

TEST_CASE("pcg error decreases monotonically in the energy norm") {
  const auto a = fe_system(8);
  const Vector b = random_vector(a.rows(), 3);
  const Vector exact = dense_solve(a.to_dense(), b);
  const auto energy = [&](std::span<const double> x) {
    Vector e(x.begin(), x.end());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] -= exact[i];
    return dot(e, a * e);
  };
  for (auto pc : {Preconditioner::None, Preconditioner::IncompleteCholesky}) {
    std::vector<double> history;
    PcgSolver solver(a, {1e-12, 1e-18, 0, pc});
    solver.solve(b, {}, nullptr, [&](int, std::span<const double> x, double) { history.push_back(energy(x)); });
    REQUIRE(history.size() > 2);
    for (std::size_t k = 1; k < history.size(); ++k) CHECK(history[k] <= history[k - 1] * (1 + 1e-12));
  }
}

TEST_CASE("pcg failure modes") {
  const auto a = fe_system(8);
  const Vector b = random_vector(a.rows(), 4);
  CHECK_THROWS_AS(solve_spd(a, b, {1e-14, 1e-30, 1, Preconditioner::None}), NonConvergenceError);
  const auto indefinite = CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -1.0}});
  CHECK_THROWS_AS(solve_spd(indefinite, Vector{1.0, 1.0}, {1e-10, 1e-14, 0, Preconditioner::None}),
                  MatrixPropertyError);
  CHECK_THROWS_AS(SolverConfig({-1.0, 1e-14, 0, Preconditioner::None}).validate(), InvalidArgument);
  CHECK_THROWS_AS(SolverConfig({1e-10, 1e-14, -3, Preconditioner::None}).validate(), InvalidArgument);
}

TEST_CASE("warm start with the solution converges immediately") {
  const auto a = fe_system(5);
  const Vector b = random_vector(a.rows(), 5);
  const Vector x = solve_spd(a, b, {1e-13, 1e-18, 0, Preconditioner::IncompleteCholesky});
  SolveReport report;
  PcgSolver(a, {1e-10, 1e-14, 0, Preconditioner::IncompleteCholesky}).solve(b, x, &report);
  CHECK(report.iterations == 0);
}

TEST_CASE("constrained system reproduces a direct dense Dirichlet solve") {
  const auto a = fe_system(4);
  const int n = a.rows();
  const Vector rhs = random_vector(n, 6);
  const std::vector<int> fixed{0, 3, 7, n - 1};
  const Vector values{1.0, -2.0, 0.5, 3.0};
  const ConstrainedSystem cs(a, fixed);
  CHECK(cs.matrix().asymmetry() == 0.0);
  const Vector x = dense_solve(cs.matrix().to_dense(), cs.lift(rhs, values));
  for (std::size_t k = 0; k < fixed.size(); ++k) CHECK(x[fixed[k]] == doctest::Approx(values[k]));
  // Free rows satisfy the original equations.
  const Vector ax = a * x;
  for (int i = 0; i < n; ++i) {
    if (!cs.is_fixed(i)) CHECK(ax[i] == doctest::Approx(rhs[i]).epsilon(1e-10));
  }
  CHECK_THROWS_AS(cs.lift(rhs, Vector{1.0}), InvalidArgument);
  CHECK_THROWS_AS(ConstrainedSystem(a, {n}), InvalidArgument);
}

TEST_CASE("sparse factorizations agree with dense elimination") {
  const auto a = fe_system(5);
  const Vector b = random_vector(a.rows(), 8);
  const Vector ref = dense_solve(a.to_dense(), b);
  CHECK(testing::max_diff(SpdFactorization(a).solve(b), ref) < 1e-12);
  CHECK(testing::max_diff(LuFactorization(a).solve(b), ref) < 1e-12);
  const auto unsym = a.add(CsrMatrix::from_triplets(a.rows(), a.cols(), {{0, 1, 0.3}}));
  const Vector ref2 = dense_solve(unsym.to_dense(), b);
  CHECK(testing::max_diff(LuFactorization(unsym).solve(b), ref2) < 1e-12);
  CHECK_THROWS_AS(SpdFactorization(CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -1.0}})),
                  FactorizationError);
  CHECK_THROWS_AS(dense_solve({0.0, 0.0, 0.0, 0.0}, Vector{1.0, 1.0}), FactorizationError);
}
