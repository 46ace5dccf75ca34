// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "afem/gmres.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "afem/precond.hpp"

namespace afem
{

std::vector<double> GmresResult::norms() const
{
  std::vector<double> out{initial_norm};
  for (const auto &s : steps)
  {
    out.push_back(s.res_norm);
  }
  return out;
}

namespace
{

// Second Gram-Schmidt pass when orthogonalisation reduces the weighted norm below this
// fraction ("twice is enough" criterion).
constexpr double kReorthogonalize = 0.7071067811865476;

void require_finite(double value, const char *what, std::int64_t k)
{
  if (!std::isfinite(value))
  {
    throw std::runtime_error(std::string("pgmres: non-finite ") + what + " at iteration " +
                             std::to_string(k));
  }
}

Vector scaled(std::span<const double> x, double alpha)
{
  Vector y(x.size());
  for (std::size_t i = 0; i < x.size(); i++)
  {
    y[i] = alpha * x[i];
  }
  return y;
}

// Weighted orthonormality defect max |(vt_i, v_j) - delta_ij| of the active window.
double orthogonality_error(const std::vector<Vector> &vt, const std::vector<Vector> &v)
{
  double err = 0.0;
  for (std::size_t i = 0; i < vt.size(); i++)
  {
    for (std::size_t j = 0; j < v.size(); j++)
    {
      err = std::max(err, std::abs(dot(vt[i], v[j]) - (i == j ? 1.0 : 0.0)));
    }
  }
  return err;
}

}  // namespace

GmresResult pgmres(const SparseOperator &B, const SpdOperator &P, std::span<const double> d,
                   std::span<const double> x0, const ToleranceFunction &stop,
                   const GmresOptions &options)
{
  const Index n = B.rows();
  if (B.cols() != n || P.size() != n || static_cast<Index>(d.size()) != n ||
      static_cast<Index>(x0.size()) != n)
  {
    throw std::invalid_argument("pgmres: inconsistent dimensions");
  }
  if (options.k_max < 1)
  {
    throw std::invalid_argument("pgmres: k_max must be positive");
  }
  if (!stop)
  {
    throw std::invalid_argument("pgmres: missing tolerance function");
  }
  const int k_max = options.k_max;

  GmresResult out;
  out.x.assign(x0.begin(), x0.end());
  Vector r(d.begin(), d.end()), s(n, 0.0);
  B.apply_add(-1.0, out.x, r);
  P.apply(r, s);
  double norm = pinner(s, r);
  require_finite(norm, "residual norm", 0);

  GmresStep step;
  step.res_norm = norm;
  step.ls_residual = norm;
  step.tolerance = stop(out.x);
  out.initial_norm = norm;
  if (options.observer)
  {
    options.observer(step, out.x);
  }
  if (norm <= step.tolerance)
  {
    return out;
  }

  // Active window: unpreconditioned basis vt and preconditioned basis v = P vt.
  std::vector<Vector> vt, v;
  vt.reserve(k_max + 1);
  v.reserve(k_max + 1);
  HessenbergLS ls;
  Vector x_start;
  auto reseed = [&] {
    vt.clear();
    v.clear();
    vt.push_back(scaled(r, 1.0 / norm));
    v.push_back(scaled(s, 1.0 / norm));
    ls.reset(norm);
    x_start = out.x;
  };
  reseed();
  out.peak_vectors = 2;

  Vector wt(n), w(n), column;
  for (std::int64_t k = 1;; k++)
  {
    if (k > options.max_iterations)
    {
      throw std::runtime_error("pgmres: no convergence within " +
                               std::to_string(options.max_iterations) + " iterations");
    }
    const int K = static_cast<int>(vt.size());

    // New direction, weighted modified Gram-Schmidt on the unpreconditioned vector,
    // then one preconditioner application. Applying P after orthogonalisation keeps
    // v^{k+1} = P vt^{k+1} to rounding accuracy instead of accumulating drift through the
    // coupled update of both vectors.
    B.apply(v.back(), wt);
    column.assign(K + 1, 0.0);
    for (int j = 0; j < K; j++)
    {
      const double c = dot(wt, v[j]);
      axpy(-c, vt[j], wt);
      column[j] = c;
    }
    std::fill(w.begin(), w.end(), 0.0);
    P.apply(wt, w);
    double h2 = dot(wt, w);
    double before2 = h2;
    for (int j = 0; j < K; j++)
    {
      before2 += column[j] * column[j];
    }
    if (h2 < kReorthogonalize * kReorthogonalize * before2)
    {
      for (int j = 0; j < K; j++)
      {
        const double c = dot(wt, v[j]);
        axpy(-c, vt[j], wt);
        axpy(-c, v[j], w);
        column[j] += c;
      }
      h2 = dot(wt, w);
    }
    if (h2 < -1e-13 * before2)
    {
      throw std::domain_error("pgmres: preconditioner is not positive definite");
    }
    const double h = std::sqrt(std::max(h2, 0.0));
    const double before = std::sqrt(before2);
    require_finite(h, "Hessenberg entry", k);
    column[K] = h;

    // Least-squares update, new iterate and its residual.
    const auto sol = ls.append(column);
    out.x = x_start;
    for (int j = 0; j < K; j++)
    {
      axpy(sol.y[j], v[j], out.x);
    }
    std::copy(d.begin(), d.end(), r.begin());
    B.apply_add(-1.0, out.x, r);
    std::fill(s.begin(), s.end(), 0.0);
    P.apply(r, s);
    norm = pinner(s, r);
    require_finite(norm, "residual norm", k);

    step.k = k;
    step.K = static_cast<int>((k - 1) % k_max) + 1;
    step.R = k / k_max;
    step.res_norm = norm;
    step.ls_residual = sol.residual;
    step.tolerance = stop(out.x);
    out.steps.push_back(step);
    if (options.check_orthogonality)
    {
      out.max_orthogonality_error =
          std::max(out.max_orthogonality_error, orthogonality_error(vt, v));
    }
    if (options.observer)
    {
      options.observer(step, out.x);
    }
    if (norm <= step.tolerance)
    {
      out.k_underline = k;
      return out;
    }

    // Restart or extend the window.
    const bool breakdown = h <= 1e-14 * before;
    if (K == k_max || breakdown)
    {
      out.restarts += K == k_max ? 1 : 0;
      out.lucky_breakdowns += breakdown ? 1 : 0;
      reseed();
    }
    else
    {
      vt.push_back(scaled(wt, 1.0 / h));
      v.push_back(scaled(w, 1.0 / h));
    }
    out.peak_vectors = std::max(out.peak_vectors, vt.size() + v.size());
  }
}

ContractionFactors contraction_factors(std::span<const double> norms)
{
  if (norms.size() < 2)
  {
    throw std::invalid_argument("contraction_factors: need at least two norms");
  }
  ContractionFactors out;
  for (std::size_t k = 1; k < norms.size(); k++)
  {
    const bool zero = norms[k - 1] == 0.0;
    out.ratios.push_back(zero ? 0.0 : norms[k] / norms[k - 1]);
    out.breakdown.push_back(zero);
  }
  return out;
}

}  // namespace afem
