// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "afem/reference.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace afem
{

namespace
{

// g_n(t) = prod_{m<n} (p t - m) / (m + 1) together with its first two derivatives.
struct Factor
{
  double v, d1, d2;
};

Factor lagrange_factor(int n, int p, double t)
{
  double v = 1.0, d1 = 0.0, d2 = 0.0;
  for (int m = 0; m < n; m++)
  {
    const double a = (p * t - m) / (m + 1), da = static_cast<double>(p) / (m + 1);
    d2 = d2 * a + 2.0 * d1 * da;
    d1 = d1 * a + v * da;
    v *= a;
  }
  return {v, d1, d2};
}

}  // namespace

LineRule gauss_legendre(int n)
{
  if (n < 1)
  {
    throw std::invalid_argument("Gauss-Legendre rule needs at least one point");
  }
  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; i++)
  {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; it++)
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; k++)
      {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
      {
        break;
      }
    }
    // Map from [-1, 1] to [0, 1], ordered increasingly.
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

TriangleRule triangle_rule(int degree)
{
  const int n = (degree + 3) / 2;
  const auto gl = gauss_legendre(n);
  TriangleRule rule;
  for (int i = 0; i < n; i++)
  {
    for (int j = 0; j < n; j++)
    {
      const double s = gl.points[i], t = gl.points[j];
      const double l1 = s, l2 = (1.0 - s) * t;
      rule.points.push_back({1.0 - l1 - l2, l1, l2});
      rule.weights.push_back(2.0 * gl.weights[i] * gl.weights[j] * (1.0 - s));
    }
  }
  return rule;
}

LagrangeElement::LagrangeElement(int degree) : p_(degree)
{
  if (degree < 1 || degree > 4)
  {
    throw std::invalid_argument("polynomial degree must be in 1..4");
  }
  for (int i = 0; i < 3; i++)
  {
    std::array<int, 3> a{0, 0, 0};
    a[i] = p_;
    nodes_.push_back(a);
  }
  for (int e = 0; e < 3; e++)
  {
    const int first = (e + 1) % 3, second = (e + 2) % 3;
    for (int t = 1; t < p_; t++)
    {
      std::array<int, 3> a{0, 0, 0};
      a[first] = p_ - t;
      a[second] = t;
      nodes_.push_back(a);
    }
  }
  for (int i = 1; i < p_; i++)
  {
    for (int j = 1; i + j < p_; j++)
    {
      nodes_.push_back({p_ - i - j, i, j});
    }
  }
}

std::array<double, 3> LagrangeElement::node_barycentric(int i) const
{
  return {static_cast<double>(nodes_[i][0]) / p_, static_cast<double>(nodes_[i][1]) / p_,
          static_cast<double>(nodes_[i][2]) / p_};
}

void LagrangeElement::evaluate(const std::array<double, 3> &lambda, double *values) const
{
  for (int i = 0; i < num_nodes(); i++)
  {
    double v = 1.0;
    for (int a = 0; a < 3; a++)
    {
      v *= lagrange_factor(nodes_[i][a], p_, lambda[a]).v;
    }
    values[i] = v;
  }
}

void LagrangeElement::evaluate_gradients(const std::array<double, 3> &lambda,
                                         std::array<double, 3> *gradients) const
{
  for (int i = 0; i < num_nodes(); i++)
  {
    Factor f[3];
    for (int a = 0; a < 3; a++)
    {
      f[a] = lagrange_factor(nodes_[i][a], p_, lambda[a]);
    }
    gradients[i] = {f[0].d1 * f[1].v * f[2].v, f[0].v * f[1].d1 * f[2].v,
                    f[0].v * f[1].v * f[2].d1};
  }
}

void LagrangeElement::evaluate_hessians(const std::array<double, 3> &lambda,
                                        std::array<std::array<double, 3>, 3> *hessians) const
{
  for (int i = 0; i < num_nodes(); i++)
  {
    Factor f[3];
    for (int a = 0; a < 3; a++)
    {
      f[a] = lagrange_factor(nodes_[i][a], p_, lambda[a]);
    }
    auto &h = hessians[i];
    h[0][0] = f[0].d2 * f[1].v * f[2].v;
    h[1][1] = f[0].v * f[1].d2 * f[2].v;
    h[2][2] = f[0].v * f[1].v * f[2].d2;
    h[0][1] = h[1][0] = f[0].d1 * f[1].d1 * f[2].v;
    h[0][2] = h[2][0] = f[0].d1 * f[1].v * f[2].d1;
    h[1][2] = h[2][1] = f[0].v * f[1].d1 * f[2].d1;
  }
}

namespace
{

Tabulation tabulate_points(const LagrangeElement &fe, std::vector<std::array<double, 3>> points,
                           std::vector<double> weights)
{
  Tabulation tab;
  tab.num_points = static_cast<int>(points.size());
  tab.num_nodes = fe.num_nodes();
  const std::size_t size = points.size() * fe.num_nodes();
  tab.values.resize(size);
  tab.gradients.resize(size);
  tab.hessians.resize(size);
  for (int q = 0; q < tab.num_points; q++)
  {
    fe.evaluate(points[q], &tab.values[q * tab.num_nodes]);
    fe.evaluate_gradients(points[q], &tab.gradients[q * tab.num_nodes]);
    fe.evaluate_hessians(points[q], &tab.hessians[q * tab.num_nodes]);
  }
  tab.points = std::move(points);
  tab.weights = std::move(weights);
  return tab;
}

}  // namespace

Tabulation tabulate(const LagrangeElement &fe, const TriangleRule &rule)
{
  return tabulate_points(fe, rule.points, rule.weights);
}

Tabulation tabulate_edge(const LagrangeElement &fe, const LineRule &rule, int edge)
{
  const int first = (edge + 1) % 3, second = (edge + 2) % 3;
  std::vector<std::array<double, 3>> points;
  for (double t : rule.points)
  {
    std::array<double, 3> lam{0.0, 0.0, 0.0};
    lam[first] = 1.0 - t;
    lam[second] = t;
    points.push_back(lam);
  }
  return tabulate_points(fe, std::move(points), rule.weights);
}

}  // namespace afem
