// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "afem/adaptive.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace afem
{

void AdaptiveParams::validate() const
{
  auto fail = [](const std::string &msg) { throw std::invalid_argument("adaptive: " + msg); };
  if (!(theta > 0.0 && theta <= 1.0))
  {
    fail("theta must lie in (0, 1]");
  }
  if (!(c_mark >= 1.0))
  {
    fail("c_mark must be at least 1");
  }
  if (!(c_alg > 0.0) || !(lambda_alg > 0.0))
  {
    fail("c_alg and lambda_alg must be positive");
  }
  if (k_max < 1)
  {
    fail("k_max must be positive");
  }
  if (!(tau >= 0.0))
  {
    fail("tau must be nonnegative");
  }
  if (max_dof < 0)
  {
    fail("max_dof must be nonnegative");
  }
  if (degree < 1 || degree > 4)
  {
    fail("degree must lie in 1..4");
  }
  if (preconditioner == PreconditionerType::Identity)
  {
    fail("the identity preconditioner is not admissible for the adaptive loop");
  }
}

std::string to_string(RunStatus status)
{
  switch (status)
  {
    case RunStatus::Running:
      return "running";
    case RunStatus::Converged:
      return "converged";
    case RunStatus::Exact:
      return "exact";
    case RunStatus::Budget:
      return "budget";
    case RunStatus::LevelLimit:
      return "level-limit";
  }
  return "unknown";
}

std::vector<StepRecord> RunHistory::final_records() const
{
  std::vector<StepRecord> out;
  for (std::size_t i = 0; i < records.size(); i++)
  {
    if (i + 1 == records.size() || records[i + 1].ell != records[i].ell)
    {
      out.push_back(records[i]);
    }
  }
  return out;
}

RunHistory afem_run(const Triangulation &initial, const PdeData &data,
                    const AdaptiveParams &params, const AdaptiveObservers &observers)
{
  params.validate();
  data.validate(initial);
  RunHistory history;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return params.timing ? std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - start)
                               .count()
                         : 0.0;
  };

  auto mesh = std::make_shared<const Triangulation>(initial);
  MultilevelHierarchy hierarchy(data);
  double S = 0.0, c_alg = params.c_alg, lambda_alg = params.lambda_alg, cost = 0.0;
  std::unique_ptr<FeSpace> prev_space;
  Vector x_prev;

  for (int ell = 0;; ell++)
  {
    hierarchy.push_level(mesh);
    auto space = std::make_unique<FeSpace>(mesh, params.degree);
    const auto system = assemble_system(*space, data);
    const Preconditioner P(hierarchy, *space, system.A, {params.preconditioner, true});
    const ResidualEstimator estimator(*space, data);

    // Nested iteration.
    Vector x0(space->size(), 0.0);
    if (prev_space)
    {
      x0 = spmv(prolongation(*prev_space, *space), x_prev);
    }

    EstimatorData indicators;
    double eta = 0.0;
    const ToleranceFunction stop = [&](std::span<const double> x) {
      indicators = estimator.estimate(x);
      eta = indicators.eta();
      return lambda_alg * eta;
    };
    GmresOptions options;
    options.k_max = params.k_max;
    options.observer = [&](const GmresStep &step, std::span<const double>) {
      StepRecord rec;
      rec.ell = ell;
      rec.k = step.k;
      rec.K = step.K;
      rec.R = step.R;
      rec.n_elem = mesh->num_elements();
      rec.n_dof = space->size();
      rec.eta = eta;
      rec.res_norm = step.res_norm;
      rec.H = eta + step.res_norm;
      cost += static_cast<double>(mesh->num_elements());
      rec.cost = cost;
      rec.wall_ms = elapsed_ms();
      rec.c_alg = c_alg;
      rec.lambda_alg = lambda_alg;
      history.records.push_back(rec);
    };
    const auto solve = pgmres(system.B, P, system.d, x0, stop, options);

    if (observers.on_level)
    {
      observers.on_level(LevelView{ell, *mesh, *space, system, P, solve.x, indicators, solve});
    }

    const double H = history.records.back().H;
    if (H <= params.tau)
    {
      history.status = H == 0.0 ? RunStatus::Exact : RunStatus::Converged;
      break;
    }
    const auto ctrl = parameter_control(S, c_alg, lambda_alg, ell, H);
    S = ctrl.S;
    c_alg = ctrl.c_alg;
    lambda_alg = ctrl.lambda_alg;
    if (ctrl.triggered)
    {
      history.trigger_levels.push_back(ell);
    }
    if (params.max_levels >= 0 && ell >= params.max_levels)
    {
      history.status = RunStatus::LevelLimit;
      break;
    }
    if (space->size() >= params.max_dof)
    {
      history.status = RunStatus::Budget;
      break;
    }

    const auto marked = dorfler_mark(indicators, params.theta, params.c_mark);
    mesh = std::make_shared<const Triangulation>(refine(*mesh, marked));
    x_prev = solve.x;
    prev_space = std::move(space);
  }
  return history;
}

namespace
{

// Strict ranking: larger indicator first, then smaller index.
struct Ranking
{
  const std::vector<double> &eta;
  bool operator()(Index a, Index b) const
  {
    return eta[a] > eta[b] || (eta[a] == eta[b] && a < b);
  }
};

MarkSet minimal_mark(const std::vector<double> &eta, double need)
{
  const Index n = static_cast<Index>(eta.size());
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const Ranking rank{eta};
  // Positions [0, lo) hold the lo highest-ranked elements with sum acc < need; the answer
  // lies in (lo, hi].
  Index lo = 0, hi = n;
  double acc = 0.0;
  while (hi - lo > 1)
  {
    const Index mid = lo + (hi - lo) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi, rank);
    double s = 0.0;
    for (Index i = lo; i < mid; i++)
    {
      s += eta[idx[i]];
    }
    if (acc + s >= need)
    {
      hi = mid;
    }
    else
    {
      acc += s;
      lo = mid;
    }
  }
  MarkSet out(idx.begin(), idx.begin() + hi);
  std::sort(out.begin(), out.end());
  return out;
}

// Approximate sorting into dyadic bins; at most twice the minimal cardinality.
MarkSet binned_mark(const std::vector<double> &eta, double need)
{
  constexpr int kBins = 64;
  const double emax = *std::max_element(eta.begin(), eta.end());
  std::vector<std::vector<Index>> bins(kBins);
  for (Index e = 0; e < static_cast<Index>(eta.size()); e++)
  {
    if (eta[e] <= 0.0)
    {
      continue;
    }
    const int j = std::min(kBins - 1, static_cast<int>(std::floor(std::log2(emax / eta[e]))));
    bins[std::max(j, 0)].push_back(e);
  }
  MarkSet out;
  double acc = 0.0;
  for (const auto &bin : bins)
  {
    for (Index e : bin)
    {
      if (acc >= need)
      {
        break;
      }
      out.push_back(e);
      acc += eta[e];
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

MarkSet dorfler_mark(const EstimatorData &data, double theta, double c_mark)
{
  if (!(theta > 0.0 && theta <= 1.0))
  {
    throw std::invalid_argument("dorfler_mark: theta must lie in (0, 1]");
  }
  if (!(c_mark >= 1.0))
  {
    throw std::invalid_argument("dorfler_mark: c_mark must be at least 1");
  }
  const auto &eta = data.indicators;
  const double total = data.total();
  if (total <= 0.0)
  {
    return {};
  }
  if (theta == 1.0)
  {
    MarkSet out;
    for (Index e = 0; e < static_cast<Index>(eta.size()); e++)
    {
      if (eta[e] > 0.0)
      {
        out.push_back(e);
      }
    }
    return out;
  }
  const double need = theta * total;
  return c_mark < 2.0 ? minimal_mark(eta, need) : binned_mark(eta, need);
}

ControlResult parameter_control(double S, double c_alg, double lambda_alg, int ell, double H)
{
  if (!(H > 0.0))
  {
    throw std::invalid_argument("parameter_control: quasi-error must be positive");
  }
  ControlResult out{S, c_alg, lambda_alg, false};
  if (ell >= 1 && S > c_alg / H)
  {
    out.c_alg = 2.0 * c_alg;
    out.lambda_alg = 0.5 * lambda_alg;
    out.triggered = true;
  }
  out.S = S + 1.0 / H;
  return out;
}

std::vector<double> cumulative_cost(std::span<const StepRecord> records)
{
  std::vector<double> out;
  out.reserve(records.size());
  double sum = 0.0;
  for (const auto &r : records)
  {
    sum += static_cast<double>(r.n_elem);
    out.push_back(sum);
  }
  return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size() || x.size() < 2)
  {
    throw std::invalid_argument("loglog_slope: need at least two matching points");
  }
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); i++)
  {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
    {
      throw std::invalid_argument("loglog_slope: values must be positive");
    }
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); i++)
  {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0)
  {
    throw std::invalid_argument("loglog_slope: abscissae are all equal");
  }
  return sxy / sxx;
}

RateDiagnostics rate_diagnostics(std::span<const StepRecord> records, double s)
{
  if (records.empty())
  {
    throw std::invalid_argument("rate_diagnostics: empty history");
  }
  if (!(s > 0.0))
  {
    throw std::invalid_argument("rate_diagnostics: rate must be positive");
  }
  RateDiagnostics out;
  for (const auto &r : records)
  {
    out.M_dof = std::max(out.M_dof, std::pow(static_cast<double>(r.n_elem), s) * r.H);
    out.M_cost = std::max(out.M_cost, std::pow(r.cost, s) * r.H);
  }

  // Final iterate of each level within the final decade of DOFs.
  std::vector<StepRecord> finals;
  for (std::size_t i = 0; i < records.size(); i++)
  {
    if (i + 1 == records.size() || records[i + 1].ell != records[i].ell)
    {
      finals.push_back(records[i]);
    }
  }
  const double n_max = static_cast<double>(finals.back().n_dof);
  std::vector<double> N, C, T, H, HT;
  for (const auto &r : finals)
  {
    if (static_cast<double>(r.n_dof) >= n_max / 10.0 && r.H > 0.0)
    {
      N.push_back(static_cast<double>(r.n_dof));
      C.push_back(r.cost);
      H.push_back(r.H);
      if (r.wall_ms > 0.0)
      {
        T.push_back(r.wall_ms);
        HT.push_back(r.H);
      }
    }
  }
  out.fitted_points = N.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.slope_dof = N.size() >= 2 ? loglog_slope(N, H) : nan;
  out.slope_cost = C.size() >= 2 ? loglog_slope(C, H) : nan;
  out.slope_time = T.size() >= 2 ? loglog_slope(T, HT) : nan;
  return out;
}

double theta_mark(double theta, double lambda_ratio)
{
  if (!(lambda_ratio >= 0.0 && lambda_ratio < 1.0))
  {
    throw std::invalid_argument("theta_mark: ratio must lie in [0, 1)");
  }
  const double num = std::sqrt(theta) + lambda_ratio;
  const double den = 1.0 - lambda_ratio;
  return num * num / (den * den);
}

double tail_sum_constant(std::span<const double> a)
{
  double C = 0.0, tail = 0.0;
  for (std::size_t l = a.size(); l-- > 0;)
  {
    C = std::max(C, tail / a[l]);
    tail += a[l];
  }
  return C;
}

double inverse_sum_constant(std::span<const double> a)
{
  double C = 0.0, head = 0.0;
  for (double v : a)
  {
    C = std::max(C, head * v);
    head += 1.0 / v;
  }
  return C;
}

RLinearFit r_linear_fit(std::span<const double> a)
{
  if (a.size() < 2)
  {
    throw std::invalid_argument("r_linear_fit: need at least two entries");
  }
  const double n = static_cast<double>(a.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
  {
    if (!(a[i] > 0.0))
    {
      throw std::invalid_argument("r_linear_fit: entries must be positive");
    }
    mx += static_cast<double>(i) / n;
    my += std::log(a[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
  {
    const double dx = static_cast<double>(i) - mx;
    sxy += dx * (std::log(a[i]) - my);
    sxx += dx * dx;
  }
  RLinearFit fit{std::exp(sxy / sxx), 0.0};
  for (std::size_t i = 0; i < a.size(); i++)
  {
    fit.C = std::max(fit.C, a[i] / std::pow(fit.q, static_cast<double>(i)));
  }
  return fit;
}

const char *const kHistoryHeader =
    "ell,k,K,R,n_elem,n_dof,eta,res_norm,H,cost,wall_ms,C_alg,lambda_alg";

void write_history_csv(std::ostream &out, std::span<const StepRecord> records)
{
  out << kHistoryHeader << '\n';
  char buf[512];
  for (const auto &r : records)
  {
    std::snprintf(buf, sizeof(buf),
                  "%d,%" PRId64 ",%d,%" PRId64 ",%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.ell, r.k, r.K, r.R, r.n_elem, r.n_dof, r.eta, r.res_norm, r.H, r.cost,
                  r.wall_ms, r.c_alg, r.lambda_alg);
    out << buf;
  }
}

std::vector<StepRecord> read_history_csv(std::istream &in)
{
  std::string line;
  if (!std::getline(in, line))
  {
    throw std::runtime_error("history csv: missing header");
  }
  if (!line.empty() && line.back() == '\r')
  {
    line.pop_back();
  }
  if (line != kHistoryHeader)
  {
    throw std::runtime_error("history csv: unexpected header '" + line + "'");
  }
  std::vector<StepRecord> out;
  int lineno = 1;
  while (std::getline(in, line))
  {
    lineno++;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty())
    {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ','))
    {
      fields.push_back(f);
    }
    if (fields.size() != 13)
    {
      throw std::runtime_error("history csv: line " + std::to_string(lineno) + " has " +
                               std::to_string(fields.size()) + " fields, expected 13");
    }
    try
    {
      std::size_t pos = 0;
      auto integer = [&](const std::string &s) {
        const long long v = std::stoll(s, &pos);
        if (pos != s.size())
        {
          throw std::invalid_argument(s);
        }
        return v;
      };
      auto real = [&](const std::string &s) {
        const double v = std::stod(s, &pos);
        if (pos != s.size())
        {
          throw std::invalid_argument(s);
        }
        return v;
      };
      StepRecord r;
      r.ell = static_cast<int>(integer(fields[0]));
      r.k = integer(fields[1]);
      r.K = static_cast<int>(integer(fields[2]));
      r.R = integer(fields[3]);
      r.n_elem = static_cast<Index>(integer(fields[4]));
      r.n_dof = static_cast<Index>(integer(fields[5]));
      r.eta = real(fields[6]);
      r.res_norm = real(fields[7]);
      r.H = real(fields[8]);
      r.cost = real(fields[9]);
      r.wall_ms = real(fields[10]);
      r.c_alg = real(fields[11]);
      r.lambda_alg = real(fields[12]);
      out.push_back(r);
    }
    catch (const std::exception &)
    {
      throw std::runtime_error("history csv: malformed value on line " + std::to_string(lineno));
    }
  }
  if (out.empty())
  {
    throw std::runtime_error("history csv: no records");
  }
  return out;
}

}  // namespace afem
