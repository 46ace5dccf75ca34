// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "afem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace afem
{

double dot(std::span<const double> x, std::span<const double> y)
{
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); i++)
  {
    sum += x[i] * y[i];
  }
  return sum;
}

double norm2(std::span<const double> x)
{
  return std::sqrt(dot(x, x));
}

void axpy(double alpha, std::span<const double> x, std::span<double> y)
{
  for (std::size_t i = 0; i < x.size(); i++)
  {
    y[i] += alpha * x[i];
  }
}

SparseOperator::SparseOperator(Index rows, Index cols, std::vector<Index> row_ptr,
                               std::vector<Index> col_idx, std::vector<double> values)
  : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
    values_(std::move(values))
{
  if (row_ptr_.size() != static_cast<std::size_t>(rows_) + 1 ||
      col_idx_.size() != values_.size() ||
      static_cast<std::size_t>(row_ptr_.back()) != values_.size())
  {
    throw std::invalid_argument("inconsistent CSR arrays");
  }
  for (Index i = 0; i < rows_; i++)
  {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; p++)
    {
      if (col_idx_[p] < 0 || col_idx_[p] >= cols_ ||
          (p > row_ptr_[i] && col_idx_[p] <= col_idx_[p - 1]))
      {
        throw std::invalid_argument("CSR column indices must be sorted, unique and in range");
      }
    }
  }
}

SparseOperator SparseOperator::from_triplets(Index rows, Index cols,
                                             std::vector<Triplet> triplets)
{
  std::sort(triplets.begin(), triplets.end(), [](const Triplet &a, const Triplet &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseOperator A;
  A.rows_ = rows;
  A.cols_ = cols;
  A.row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (std::size_t t = 0; t < triplets.size();)
  {
    const auto &tr = triplets[t];
    if (tr.row < 0 || tr.row >= rows || tr.col < 0 || tr.col >= cols)
    {
      throw std::invalid_argument("triplet out of range");
    }
    double sum = 0.0;
    std::size_t u = t;
    for (; u < triplets.size() && triplets[u].row == tr.row && triplets[u].col == tr.col; u++)
    {
      sum += triplets[u].value;
    }
    A.col_idx_.push_back(tr.col);
    A.values_.push_back(sum);
    A.row_ptr_[tr.row + 1]++;
    t = u;
  }
  for (Index i = 0; i < rows; i++)
  {
    A.row_ptr_[i + 1] += A.row_ptr_[i];
  }
  return A;
}

SparseOperator SparseOperator::identity(Index n)
{
  std::vector<Index> ptr(n + 1), idx(n);
  for (Index i = 0; i < n; i++)
  {
    ptr[i + 1] = i + 1;
    idx[i] = i;
  }
  return SparseOperator(n, n, std::move(ptr), std::move(idx), std::vector<double>(n, 1.0));
}

std::ptrdiff_t SparseOperator::find(Index i, Index j) const
{
  const auto first = col_idx_.begin() + row_ptr_[i], last = col_idx_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(first, last, j);
  return it != last && *it == j ? it - col_idx_.begin() : -1;
}

double SparseOperator::coeff(Index i, Index j) const
{
  const auto p = find(i, j);
  return p < 0 ? 0.0 : values_[p];
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const
{
  for (Index i = 0; i < rows_; i++)
  {
    double sum = 0.0;
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; p++)
    {
      sum += values_[p] * x[col_idx_[p]];
    }
    y[i] = sum;
  }
}

void SparseOperator::apply_add(double alpha, std::span<const double> x,
                               std::span<double> y) const
{
  for (Index i = 0; i < rows_; i++)
  {
    double sum = 0.0;
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; p++)
    {
      sum += values_[p] * x[col_idx_[p]];
    }
    y[i] += alpha * sum;
  }
}

void SparseOperator::apply_transpose(std::span<const double> x, std::span<double> y) const
{
  std::fill(y.begin(), y.end(), 0.0);
  apply_transpose_add(1.0, x, y);
}

void SparseOperator::apply_transpose_add(double alpha, std::span<const double> x,
                                         std::span<double> y) const
{
  for (Index i = 0; i < rows_; i++)
  {
    const double xi = alpha * x[i];
    if (xi == 0.0)
    {
      continue;
    }
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; p++)
    {
      y[col_idx_[p]] += values_[p] * xi;
    }
  }
}

SparseOperator SparseOperator::transpose() const
{
  std::vector<Index> ptr(static_cast<std::size_t>(cols_) + 1, 0);
  for (Index c : col_idx_)
  {
    ptr[c + 1]++;
  }
  for (Index j = 0; j < cols_; j++)
  {
    ptr[j + 1] += ptr[j];
  }
  std::vector<Index> idx(values_.size());
  std::vector<double> val(values_.size());
  std::vector<Index> fill(ptr.begin(), ptr.end() - 1);
  for (Index i = 0; i < rows_; i++)
  {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; p++)
    {
      const Index q = fill[col_idx_[p]]++;
      idx[q] = i;
      val[q] = values_[p];
    }
  }
  return SparseOperator(cols_, rows_, std::move(ptr), std::move(idx), std::move(val));
}

std::vector<double> SparseOperator::diagonal() const
{
  std::vector<double> d(std::min(rows_, cols_), 0.0);
  for (Index i = 0; i < static_cast<Index>(d.size()); i++)
  {
    d[i] = coeff(i, i);
  }
  return d;
}

std::vector<double> SparseOperator::to_dense() const
{
  std::vector<double> dense(static_cast<std::size_t>(rows_) * cols_, 0.0);
  for (Index i = 0; i < rows_; i++)
  {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; p++)
    {
      dense[static_cast<std::size_t>(i) * cols_ + col_idx_[p]] = values_[p];
    }
  }
  return dense;
}

Vector spmv(const SparseOperator &A, std::span<const double> x)
{
  if (static_cast<Index>(x.size()) != A.cols())
  {
    throw std::invalid_argument("spmv: operator has " + std::to_string(A.cols()) +
                                " columns, vector has " + std::to_string(x.size()));
  }
  Vector y(A.rows());
  A.apply(x, y);
  return y;
}

Vector spmv_transpose(const SparseOperator &A, std::span<const double> x)
{
  if (static_cast<Index>(x.size()) != A.rows())
  {
    throw std::invalid_argument("spmv_transpose: operator has " + std::to_string(A.rows()) +
                                " rows, vector has " + std::to_string(x.size()));
  }
  Vector y(A.cols());
  A.apply_transpose(x, y);
  return y;
}

DenseCholesky::DenseCholesky(Index n, std::span<const double> a) : n_(n), l_(a.begin(), a.end())
{
  if (static_cast<std::size_t>(n) * n != a.size())
  {
    throw std::invalid_argument("DenseCholesky: matrix size mismatch");
  }
  double max_diag = 0.0;
  for (Index i = 0; i < n; i++)
  {
    max_diag = std::max(max_diag, std::abs(a[i * n + i]));
  }
  for (Index j = 0; j < n; j++)
  {
    double d = l_[j * n + j];
    for (Index k = 0; k < j; k++)
    {
      d -= l_[j * n + k] * l_[j * n + k];
    }
    if (!(d > 1e-14 * max_diag))
    {
      throw std::domain_error("DenseCholesky: matrix is not positive definite");
    }
    d = std::sqrt(d);
    l_[j * n + j] = d;
    for (Index i = j + 1; i < n; i++)
    {
      double s = l_[i * n + j];
      for (Index k = 0; k < j; k++)
      {
        s -= l_[i * n + k] * l_[j * n + k];
      }
      l_[i * n + j] = s / d;
    }
  }
}

void DenseCholesky::solve(std::span<double> b) const
{
  const Index n = n_;
  for (Index i = 0; i < n; i++)
  {
    double s = b[i];
    for (Index k = 0; k < i; k++)
    {
      s -= l_[i * n + k] * b[k];
    }
    b[i] = s / l_[i * n + i];
  }
  for (Index i = n - 1; i >= 0; i--)
  {
    double s = b[i];
    for (Index k = i + 1; k < n; k++)
    {
      s -= l_[k * n + i] * b[k];
    }
    b[i] = s / l_[i * n + i];
  }
}

void HessenbergLS::reset(double beta)
{
  r_.clear();
  cs_.clear();
  sn_.clear();
  g_.assign(1, beta);
}

HessenbergLS::Result HessenbergLS::append(std::span<const double> column)
{
  const std::size_t K = r_.size() + 1;
  if (column.size() != K + 1)
  {
    throw std::invalid_argument("HessenbergLS: column " + std::to_string(K) + " needs " +
                                std::to_string(K + 1) + " entries");
  }
  Vector col(column.begin(), column.end());
  for (std::size_t i = 0; i + 1 < K; i++)
  {
    const double t = cs_[i] * col[i] + sn_[i] * col[i + 1];
    col[i + 1] = -sn_[i] * col[i] + cs_[i] * col[i + 1];
    col[i] = t;
  }
  const double a = col[K - 1], b = col[K];
  double c = 1.0, s = 0.0;
  if (b != 0.0)
  {
    const double rho = std::hypot(a, b);
    c = a / rho;
    s = b / rho;
  }
  col[K - 1] = c * a + s * b;
  col.pop_back();
  cs_.push_back(c);
  sn_.push_back(s);
  g_.push_back(-s * g_[K - 1]);
  g_[K - 1] = c * g_[K - 1];
  r_.push_back(std::move(col));
  return {solution(), residual()};
}

double HessenbergLS::residual() const
{
  return std::abs(g_.back());
}

Vector HessenbergLS::solution() const
{
  const std::size_t K = r_.size();
  Vector y(K, 0.0);
  for (std::size_t ii = K; ii-- > 0;)
  {
    double s = g_[ii];
    for (std::size_t j = ii + 1; j < K; j++)
    {
      s -= r_[j][ii] * y[j];
    }
    // A zero pivot means the column was linearly dependent; that direction is dropped.
    y[ii] = r_[ii][ii] != 0.0 ? s / r_[ii][ii] : 0.0;
  }
  return y;
}

}  // namespace afem
