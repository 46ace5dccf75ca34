// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef AFEM_ADAPTIVE_HPP
#define AFEM_ADAPTIVE_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "afem/estimator.hpp"
#include "afem/fespace.hpp"
#include "afem/gmres.hpp"
#include "afem/mesh.hpp"
#include "afem/precond.hpp"

namespace afem
{

struct AdaptiveParams
{
  double theta = 0.5;
  double c_mark = 1.0;
  double c_alg = 1.0;
  double lambda_alg = 1.0;
  int k_max = 5;
  double tau = 0.0;
  /// Stop once a solved level has at least this many DOFs.
  std::int64_t max_dof = 10000;
  /// Stop after solving level max_levels (negative: unlimited).
  int max_levels = -1;
  PreconditionerType preconditioner = PreconditionerType::AdditiveSchwarz;
  int degree = 2;
  /// Record wall-clock times (otherwise wall_ms is 0, keeping output reproducible).
  bool timing = false;

  /// Throws std::invalid_argument for out-of-range values.
  void validate() const;
};

/// One iterate u_l^k of the adaptive loop.
struct StepRecord
{
  int ell = 0;
  std::int64_t k = 0;
  int K = 0;
  std::int64_t R = 0;
  Index n_elem = 0;
  Index n_dof = 0;
  double eta = 0.0;
  double res_norm = 0.0;
  double H = 0.0;
  double cost = 0.0;
  double wall_ms = 0.0;
  double c_alg = 0.0;
  double lambda_alg = 0.0;
};

enum class RunStatus
{
  Running,
  Converged,   // H <= tau
  Exact,       // H == 0
  Budget,      // DOF budget reached
  LevelLimit,  // max_levels reached
};

std::string to_string(RunStatus status);

struct RunHistory
{
  std::vector<StepRecord> records;
  RunStatus status = RunStatus::Running;
  std::vector<int> trigger_levels;  // levels at which C_alg / lambda_alg were updated

  int num_levels() const { return records.empty() ? 0 : records.back().ell + 1; }
  /// Last record of every level (the iterate u_l^{k_underline}).
  std::vector<StepRecord> final_records() const;
};

/// Everything computed on one level, exposed to observers after the solve.
struct LevelView
{
  int ell;
  const Triangulation &mesh;
  const FeSpace &space;
  const GalerkinSystem &system;
  const Preconditioner &preconditioner;
  std::span<const double> x;
  const EstimatorData &estimator;
  const GmresResult &solve;
};

struct AdaptiveObservers
{
  std::function<void(const LevelView &)> on_level;
};

/// Adaptive loop: solve & estimate with PGMRES and Lambda(x) = lambda_alg eta(x),
/// parameter control, Doerfler marking, NVB refinement and nested iteration.
RunHistory afem_run(const Triangulation &initial, const PdeData &data,
                    const AdaptiveParams &params, const AdaptiveObservers &observers = {});

/// Doerfler marking: a set M with theta eta^2 <= eta(M)^2 and #M <= C_mark times the minimal
/// cardinality. For C_mark < 2 the set is exactly minimal (ties broken by element index);
/// otherwise a linear-time binning selection is used. Returns sorted element indices.
/// Throws std::invalid_argument if theta is not in (0, 1] or C_mark < 1.
MarkSet dorfler_mark(const EstimatorData &data, double theta, double c_mark = 1.0);

struct ControlResult
{
  double S;
  double c_alg;
  double lambda_alg;
  bool triggered;
};

/// Parameter control: if ell >= 1 and S > C_alg / H then C_alg doubles and lambda_alg halves;
/// S always grows by 1 / H. Throws std::invalid_argument if H <= 0.
ControlResult parameter_control(double S, double c_alg, double lambda_alg, int ell, double H);

/// Running sums of #T over the records.
std::vector<double> cumulative_cost(std::span<const StepRecord> records);

struct RateDiagnostics
{
  double M_dof = 0.0;   // sup (#T)^s H over all records
  double M_cost = 0.0;  // sup cost^s H over all records
  double slope_dof = 0.0;   // H vs N over the final decade of DOFs (final iterates per level)
  double slope_cost = 0.0;  // H vs cost over the same records
  double slope_time = 0.0;  // H vs wall time (NaN without timings)
  std::size_t fitted_points = 0;
};

/// Rate diagnostics of a history. Throws std::invalid_argument if empty or s <= 0.
RateDiagnostics rate_diagnostics(std::span<const StepRecord> records, double s);

/// Least-squares slope of log y against log x. Throws std::invalid_argument for fewer than two
/// points or non-positive values.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// (theta^{1/2} + ratio)^2 / (1 - ratio)^2 for ratio = lambda_alg / lambda_alg_star.
/// Throws std::invalid_argument unless 0 <= ratio < 1.
double theta_mark(double theta, double lambda_ratio);

/// Smallest C with sum_{j > l} a_j <= C a_l for all l.
double tail_sum_constant(std::span<const double> a);
/// Smallest C with sum_{j < l} a_j^{-1} <= C a_l^{-1} for all l.
double inverse_sum_constant(std::span<const double> a);

struct RLinearFit
{
  double q;  // fitted contraction factor (exp of the log-linear slope)
  double C;  // smallest C with a_n <= C q^n for all n
};
/// Log-linear fit of a positive sequence. Throws std::invalid_argument for fewer than two
/// entries or non-positive values.
RLinearFit r_linear_fit(std::span<const double> a);

/// Fixed CSV header of histories.
extern const char *const kHistoryHeader;
/// Writes the header and one row per record with round-trip precision.
void write_history_csv(std::ostream &out, std::span<const StepRecord> records);
/// Parses a history CSV. Throws std::runtime_error on malformed input or an empty table.
std::vector<StepRecord> read_history_csv(std::istream &in);

}  // namespace afem

#endif  // AFEM_ADAPTIVE_HPP
