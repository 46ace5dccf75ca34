// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef AFEM_REFERENCE_HPP
#define AFEM_REFERENCE_HPP

#include <array>
#include <vector>

namespace afem
{

/// Gauss-Legendre rule on [0, 1] with n points; weights sum to one.
struct LineRule
{
  std::vector<double> points;
  std::vector<double> weights;
};
LineRule gauss_legendre(int n);

/// Triangle rule in barycentric coordinates; weights sum to one, so an integral over T is
/// |T| * sum_q w_q f(x_q).
struct TriangleRule
{
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};

/// Collapsed (Duffy) Gauss product rule exact for polynomials of total degree `degree`.
TriangleRule triangle_rule(int degree);

//
// Degree-p Lagrange element on the reference triangle, described in barycentric
// coordinates. Node order: the three vertices, then p - 1 nodes per local edge (edge i joins
// vertices (i + 1) % 3 and (i + 2) % 3, nodes ordered from the first to the second vertex),
// then interior nodes.
//
class LagrangeElement
{
public:
  explicit LagrangeElement(int degree);

  int degree() const { return p_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int nodes_per_edge() const { return p_ - 1; }
  int num_interior() const { return (p_ - 1) * (p_ - 2) / 2; }
  /// First local node index of edge i.
  int edge_offset(int i) const { return 3 + i * (p_ - 1); }
  int interior_offset() const { return 3 + 3 * (p_ - 1); }

  /// Barycentric multi-index of node i (entries sum to p).
  const std::array<int, 3> &node(int i) const { return nodes_[i]; }
  std::array<double, 3> node_barycentric(int i) const;

  /// Basis values, first and second derivatives with respect to the barycentric
  /// coordinates (treated as independent variables).
  void evaluate(const std::array<double, 3> &lambda, double *values) const;
  void evaluate_gradients(const std::array<double, 3> &lambda,
                          std::array<double, 3> *gradients) const;
  void evaluate_hessians(const std::array<double, 3> &lambda,
                         std::array<std::array<double, 3>, 3> *hessians) const;

private:
  int p_;
  std::vector<std::array<int, 3>> nodes_;
};

/// Basis data tabulated at the points of a rule.
struct Tabulation
{
  int num_points = 0;
  int num_nodes = 0;
  std::vector<double> weights;
  std::vector<std::array<double, 3>> points;
  std::vector<double> values;                                    // [q * n + i]
  std::vector<std::array<double, 3>> gradients;                  // [q * n + i]
  std::vector<std::array<std::array<double, 3>, 3>> hessians;    // [q * n + i]
};

Tabulation tabulate(const LagrangeElement &fe, const TriangleRule &rule);

/// Tabulation on local edge `edge` at Gauss-Legendre points (ordered from the edge's first to
/// its second vertex).
Tabulation tabulate_edge(const LagrangeElement &fe, const LineRule &rule, int edge);

}  // namespace afem

#endif  // AFEM_REFERENCE_HPP
