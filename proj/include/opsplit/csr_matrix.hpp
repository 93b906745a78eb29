#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "opsplit/types.hpp"

namespace opsplit {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed sparse row matrix with sorted, unique column indices per row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  /// Sums duplicates in insertion order, so results are deterministic.
  /// Throws NumericInputError on non-finite values.
  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static CsrMatrix identity(int n);
  static CsrMatrix diagonal(std::span<const double> diag);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Entry (r, c), zero when not stored.
  double at(int r, int c) const;
  /// Index into values() of (r, c), or -1.
  int find(int r, int c) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector operator*(std::span<const double> x) const;

  std::vector<double> diagonal() const;
  std::vector<double> row_sums() const;
  CsrMatrix transpose() const;

  /// this + alpha * other (patterns merged).
  CsrMatrix add(const CsrMatrix& other, double alpha = 1.0) const;
  CsrMatrix scaled(double alpha) const;

  /// max |a_ij - a_ji|.
  double asymmetry() const;
  double max_abs() const;

  /// Row-major dense copy, for tests and small oracles.
  std::vector<double> to_dense() const;

  /// MatrixMarket coordinate text.
  void write_matrix_market(std::ostream& os) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

}  // namespace opsplit
