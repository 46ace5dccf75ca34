// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef AFEM_GMRES_HPP
#define AFEM_GMRES_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "afem/linalg.hpp"

namespace afem
{

/// Absolute stopping tolerance as a function of the current iterate.
using ToleranceFunction = std::function<double(std::span<const double> x)>;

/// One accepted iterate.
struct GmresStep
{
  std::int64_t k = 0;  // global iteration counter (0 = initial guess)
  int K = 0;           // position in the restart window, ((k - 1) mod k_max) + 1
  std::int64_t R = 0;  // restart index floor(k / k_max)
  double res_norm = 0.0;     // ||s^k||_{P^{-1}} = (s^k, r^k)^{1/2}
  double ls_residual = 0.0;  // least-squares residual of the window problem
  double tolerance = 0.0;    // Lambda(x^k)
};

struct GmresOptions
{
  int k_max = 5;
  std::int64_t max_iterations = 100000;
  /// Measure weighted orthonormality of the active window on every iteration (O(k_max^2 N)).
  bool check_orthogonality = false;
  /// Called for every iterate, including the initial guess, after Lambda was evaluated.
  std::function<void(const GmresStep &, std::span<const double> x)> observer;
};

struct GmresResult
{
  Vector x;
  double initial_norm = 0.0;
  std::vector<GmresStep> steps;  // iterates k = 1, ..., k_underline
  std::int64_t k_underline = 0;
  int restarts = 0;
  int lucky_breakdowns = 0;
  std::size_t peak_vectors = 0;  // maximal number of stored basis vectors
  double max_orthogonality_error = 0.0;  // only if check_orthogonality

  /// Weighted residual norms ||s^0||, ||s^1||, ..., ||s^k_underline||.
  std::vector<double> norms() const;
};

//
// Restarted GMRES in the inner product weighted by the inverse of the SPD preconditioner P:
// minimises ||P(d - B x)||_{P^{-1}} over the current Krylov window and stops at the first
// iterate with ||s^k||_{P^{-1}} <= Lambda(x^k), including k = 0. Throws std::invalid_argument
// on inconsistent sizes or k_max < 1, std::runtime_error on non-finite values or when the
// iteration cap is exceeded, std::domain_error if P is detected to be indefinite.
//
GmresResult pgmres(const SparseOperator &B, const SpdOperator &P, std::span<const double> d,
                   std::span<const double> x0, const ToleranceFunction &stop,
                   const GmresOptions &options = {});

struct ContractionFactors
{
  std::vector<double> ratios;
  std::vector<bool> breakdown;  // previous norm was zero; ratio reported as 0
};

/// Successive ratios ||s^k|| / ||s^{k-1}||. Throws std::invalid_argument for fewer than two
/// norms.
ContractionFactors contraction_factors(std::span<const double> norms);

}  // namespace afem

#endif  // AFEM_GMRES_HPP
