// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef AFEM_LINALG_HPP
#define AFEM_LINALG_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace afem
{

using Index = std::int32_t;
using Vector = std::vector<double>;

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

struct Triplet
{
  Index row;
  Index col;
  double value;
};

//
// Compressed sparse row operator. Column indices are sorted within each row and unique.
//
class SparseOperator
{
public:
  SparseOperator() = default;
  SparseOperator(Index rows, Index cols, std::vector<Index> row_ptr, std::vector<Index> col_idx,
                 std::vector<double> values);

  /// Sums duplicate entries. Entries are ordered deterministically by (row, col).
  static SparseOperator from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);
  static SparseOperator identity(Index n);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const Index> row_ptr() const { return row_ptr_; }
  std::span<const Index> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Value at (i, j), zero if not stored.
  double coeff(Index i, Index j) const;
  /// Position of (i, j) in the value array, -1 if not stored.
  std::ptrdiff_t find(Index i, Index j) const;

  /// y = A x
  void apply(std::span<const double> x, std::span<double> y) const;
  /// y += alpha A x
  void apply_add(double alpha, std::span<const double> x, std::span<double> y) const;
  /// y = A^T x
  void apply_transpose(std::span<const double> x, std::span<double> y) const;
  /// y += alpha A^T x
  void apply_transpose_add(double alpha, std::span<const double> x, std::span<double> y) const;

  SparseOperator transpose() const;
  std::vector<double> diagonal() const;
  std::vector<double> to_dense() const;  // row-major

private:
  Index rows_ = 0, cols_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

/// y = A x, throws std::invalid_argument on dimension mismatch.
Vector spmv(const SparseOperator &A, std::span<const double> x);
Vector spmv_transpose(const SparseOperator &A, std::span<const double> x);

//
// Abstract symmetric positive definite operator, used for preconditioners.
//
class SpdOperator
{
public:
  virtual ~SpdOperator() = default;
  virtual Index size() const = 0;
  virtual void apply(std::span<const double> r, std::span<double> s) const = 0;
};

//
// Cholesky factorization of a small dense SPD matrix.
//
class DenseCholesky
{
public:
  DenseCholesky() = default;
  /// `a` is row-major n x n; only the lower triangle is read. Throws std::domain_error if
  /// the matrix is not numerically positive definite.
  DenseCholesky(Index n, std::span<const double> a);

  Index size() const { return n_; }
  /// Solves in place.
  void solve(std::span<double> b) const;

private:
  Index n_ = 0;
  std::vector<double> l_;  // row-major lower triangle
};

//
// Incrementally updated least-squares problem min_z || beta e1 - H z ||_2 for an upper
// Hessenberg H whose columns are appended one at a time. Givens rotations are applied to each
// new column so the cost per append is O(K).
//
class HessenbergLS
{
public:
  HessenbergLS() = default;
  explicit HessenbergLS(double beta) { reset(beta); }

  void reset(double beta);
  Index columns() const { return static_cast<Index>(r_.size()); }

  struct Result
  {
    Vector y;
    double residual;
  };

  /// Appends column K (entries H_{1..K+1,K}); returns the minimizer and the minimal residual.
  Result append(std::span<const double> column);
  /// Residual after the last append (beta before the first).
  double residual() const;
  Vector solution() const;

private:
  std::vector<Vector> r_;  // rotated columns, upper triangular part
  std::vector<double> cs_, sn_, g_;
};

}  // namespace afem

#endif  // AFEM_LINALG_HPP
