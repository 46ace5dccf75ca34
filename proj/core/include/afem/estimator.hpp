// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef AFEM_ESTIMATOR_HPP
#define AFEM_ESTIMATOR_HPP

#include <span>
#include <vector>

#include "afem/fespace.hpp"

namespace afem
{

/// Squared elementwise indicators of one evaluated discrete function.
struct EstimatorData
{
  std::vector<double> indicators;  // eta(T, v)^2 per element

  /// Sum of squared indicators.
  double total() const;
  /// Global estimator eta(v).
  double eta() const;
};

/// (sum_{T in U} eta(T)^2)^{1/2}. Throws std::invalid_argument on invalid indices.
double subset_norm(const EstimatorData &data, std::span<const Index> U);

//
// Residual error estimator
//   eta(T, v)^2 = |T| ||div(K grad v - fvec) - b . grad v - c v + f||_T^2
//               + |T|^{1/2} ||[[(K grad v - fvec) . n]]||_{dT \ boundary}^2.
// Quadrature data and coefficient values are precomputed, so repeated evaluation (once per
// solver iterate) only costs a pass over elements and interior edges.
//
class ResidualEstimator
{
public:
  ResidualEstimator(const FeSpace &space, const PdeData &data);

  const FeSpace &space() const { return space_; }

  EstimatorData estimate(std::span<const double> v) const;
  /// Global estimator without storing indicators.
  double eta(std::span<const double> v) const;

private:
  void evaluate(std::span<const double> v, std::span<double> indicators) const;

  const FeSpace &space_;
  Tabulation vol_;
  std::array<Tabulation, 3> edge_;
  int nqv_ = 0, nqe_ = 0;
  bool constant_ = false;

  // Element data.
  std::vector<ElementGeometry> geo_;
  // Per element (and quadrature point unless constant): Kxx, Kxy, Kyy, bx, by, c, dKx, dKy, g
  // where g = f - div fvec.
  std::vector<double> coef_;

  // Interior edge data.
  struct EdgeSide
  {
    Index element;
    std::uint8_t local_edge;
  };
  std::vector<std::array<EdgeSide, 2>> sides_;
  std::vector<std::uint8_t> reversed_;
  std::vector<double> length_;
  // Per edge (and edge quadrature point unless constant): (K0 n)_x, (K0 n)_y, (K1 n)_x,
  // (K1 n)_y, jump of fvec . n.
  std::vector<double> edge_coef_;
};

/// One-shot convenience wrapper.
EstimatorData estimate(const FeSpace &space, const PdeData &data, std::span<const double> v);

}  // namespace afem

#endif  // AFEM_ESTIMATOR_HPP
