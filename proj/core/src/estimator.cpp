// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "afem/estimator.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace afem
{

namespace
{

constexpr int kVolCoef = 9;
constexpr int kEdgeCoef = 5;

}  // namespace

double EstimatorData::total() const
{
  return std::accumulate(indicators.begin(), indicators.end(), 0.0);
}

double EstimatorData::eta() const
{
  return std::sqrt(total());
}

double subset_norm(const EstimatorData &data, std::span<const Index> U)
{
  double sum = 0.0;
  for (Index e : U)
  {
    if (e < 0 || e >= static_cast<Index>(data.indicators.size()))
    {
      throw std::invalid_argument("subset_norm: element index " + std::to_string(e) +
                                  " out of range");
    }
    sum += data.indicators[e];
  }
  return std::sqrt(sum);
}

ResidualEstimator::ResidualEstimator(const FeSpace &space, const PdeData &data)
  : space_(space), constant_(data.constant)
{
  const auto &mesh = space.mesh();
  const auto &fe = space.element();
  const int p = fe.degree();
  vol_ = tabulate(fe, triangle_rule(2 * p + 2));
  const auto line = gauss_legendre(p + 2);
  for (int i = 0; i < 3; i++)
  {
    edge_[i] = tabulate_edge(fe, line, i);
  }
  nqv_ = vol_.num_points;
  nqe_ = static_cast<int>(line.points.size());

  const Index ne = mesh.num_elements();
  geo_.resize(ne);
  for (Index e = 0; e < ne; e++)
  {
    geo_[e] = element_geometry(mesh, e);
  }

  auto fill_volume = [&](Index e, const Point &x, double *out) {
    const Matrix2 K = data.K(e, x);
    const Point b = data.b(e, x);
    const Point dK = data.div_K ? data.div_K(e, x) : Point{0.0, 0.0};
    const double div_f = data.div_fvec ? data.div_fvec(e, x) : 0.0;
    out[0] = K.xx;
    out[1] = K.xy;
    out[2] = K.yy;
    out[3] = b.x;
    out[4] = b.y;
    out[5] = data.c(e, x);
    out[6] = dK.x;
    out[7] = dK.y;
    out[8] = data.f(e, x) - div_f;
  };
  if (constant_)
  {
    coef_.resize(kVolCoef);
    fill_volume(0, mesh.centroid(0), coef_.data());
  }
  else
  {
    coef_.resize(static_cast<std::size_t>(ne) * nqv_ * kVolCoef);
    for (Index e = 0; e < ne; e++)
    {
      for (int q = 0; q < nqv_; q++)
      {
        fill_volume(e, map_to_physical(mesh, e, vol_.points[q]),
                    &coef_[(static_cast<std::size_t>(e) * nqv_ + q) * kVolCoef]);
      }
    }
  }

  // Interior edges.
  auto local_edge = [&](Index e, Index k) {
    for (int i = 0; i < 3; i++)
    {
      if (mesh.element_edge(e, i) == k)
      {
        return static_cast<std::uint8_t>(i);
      }
    }
    throw std::logic_error("edge not found in adjacent element");
  };
  const int stride = constant_ ? 1 : nqe_;
  for (Index k = 0; k < mesh.num_edges(); k++)
  {
    if (mesh.is_boundary_edge(k))
    {
      continue;
    }
    const auto &t = mesh.edge_elements(k);
    const std::array<EdgeSide, 2> s{EdgeSide{t[0], local_edge(t[0], k)},
                                    EdgeSide{t[1], local_edge(t[1], k)}};
    const auto &el0 = mesh.element(s[0].element), &el1 = mesh.element(s[1].element);
    const Index first0 = el0[(s[0].local_edge + 1) % 3], first1 = el1[(s[1].local_edge + 1) % 3];
    const Index second0 = el0[(s[0].local_edge + 2) % 3];
    sides_.push_back(s);
    reversed_.push_back(first0 != first1 ? 1 : 0);
    const Point a = mesh.vertex(first0), b = mesh.vertex(second0);
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    length_.push_back(len);
    // Unit normal, pointing out of side 0 (elements are positively oriented, so the outward
    // normal of the edge a->b is its clockwise rotation).
    const Point n{(b.y - a.y) / len, -(b.x - a.x) / len};
    for (int q = 0; q < stride; q++)
    {
      const double t = constant_ ? 0.5 : line.points[q];
      const Point x{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
      const Matrix2 K0 = data.K(s[0].element, x), K1 = data.K(s[1].element, x);
      const Point f0 = data.fvec(s[0].element, x), f1 = data.fvec(s[1].element, x);
      edge_coef_.push_back(K0.xx * n.x + K0.xy * n.y);
      edge_coef_.push_back(K0.xy * n.x + K0.yy * n.y);
      edge_coef_.push_back(K1.xx * n.x + K1.xy * n.y);
      edge_coef_.push_back(K1.xy * n.x + K1.yy * n.y);
      edge_coef_.push_back((f0.x - f1.x) * n.x + (f0.y - f1.y) * n.y);
    }
  }
}

void ResidualEstimator::evaluate(std::span<const double> v, std::span<double> indicators) const
{
  if (static_cast<Index>(v.size()) != space_.size())
  {
    throw std::invalid_argument("estimator: coefficient vector has length " +
                                std::to_string(v.size()) + ", space has " +
                                std::to_string(space_.size()));
  }
  const auto &mesh = space_.mesh();
  const int nn = space_.element().num_nodes();
  const Index ne = mesh.num_elements();
  std::vector<double> local(nn);
  for (Index e = 0; e < ne; e++)
  {
    const auto dofs = space_.element_dofs(e);
    for (int i = 0; i < nn; i++)
    {
      local[i] = dofs[i] >= 0 ? v[dofs[i]] : 0.0;
    }
    const auto &g = geo_[e];
    double sum = 0.0;
    for (int q = 0; q < nqv_; q++)
    {
      double val = 0.0, gl[3] = {0.0, 0.0, 0.0}, hl[6] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
      const double *phi = &vol_.values[q * nn];
      const auto *dphi = &vol_.gradients[q * nn];
      const auto *hphi = &vol_.hessians[q * nn];
      for (int i = 0; i < nn; i++)
      {
        const double c = local[i];
        if (c == 0.0)
        {
          continue;
        }
        val += c * phi[i];
        gl[0] += c * dphi[i][0];
        gl[1] += c * dphi[i][1];
        gl[2] += c * dphi[i][2];
        hl[0] += c * hphi[i][0][0];
        hl[1] += c * hphi[i][1][1];
        hl[2] += c * hphi[i][2][2];
        hl[3] += c * hphi[i][0][1];
        hl[4] += c * hphi[i][0][2];
        hl[5] += c * hphi[i][1][2];
      }
      const double *cf =
          constant_ ? coef_.data() : &coef_[(static_cast<std::size_t>(e) * nqv_ + q) * kVolCoef];
      const Point grad{gl[0] * g.grad_lambda[0].x + gl[1] * g.grad_lambda[1].x +
                           gl[2] * g.grad_lambda[2].x,
                       gl[0] * g.grad_lambda[0].y + gl[1] * g.grad_lambda[1].y +
                           gl[2] * g.grad_lambda[2].y};
      // K : Hess v = sum_ab H_ab (grad l_a . K grad l_b).
      auto kform = [&](int a, int b) {
        const Point &la = g.grad_lambda[a], &lb = g.grad_lambda[b];
        return la.x * (cf[0] * lb.x + cf[1] * lb.y) + la.y * (cf[1] * lb.x + cf[2] * lb.y);
      };
      const double kh = hl[0] * kform(0, 0) + hl[1] * kform(1, 1) + hl[2] * kform(2, 2) +
                        2.0 * (hl[3] * kform(0, 1) + hl[4] * kform(0, 2) + hl[5] * kform(1, 2));
      const double r = kh + (cf[6] - cf[3]) * grad.x + (cf[7] - cf[4]) * grad.y - cf[5] * val +
                       cf[8];
      sum += vol_.weights[q] * r * r;
    }
    indicators[e] = g.area * g.area * sum;
  }

  const int stride = constant_ ? 0 : kEdgeCoef;
  for (std::size_t k = 0; k < sides_.size(); k++)
  {
    const auto &s = sides_[k];
    const double *ec = &edge_coef_[k * (constant_ ? 1 : nqe_) * kEdgeCoef];
    double jump2 = 0.0;
    for (int q = 0; q < nqe_; q++)
    {
      double flux = 0.0;
      for (int side = 0; side < 2; side++)
      {
        const Index e = s[side].element;
        const auto &tab = edge_[s[side].local_edge];
        const int qq = side == 1 && reversed_[k] ? nqe_ - 1 - q : q;
        const auto dofs = space_.element_dofs(e);
        double gl[3] = {0.0, 0.0, 0.0};
        for (int i = 0; i < nn; i++)
        {
          if (dofs[i] < 0)
          {
            continue;
          }
          const double c = v[dofs[i]];
          const auto &d = tab.gradients[qq * nn + i];
          gl[0] += c * d[0];
          gl[1] += c * d[1];
          gl[2] += c * d[2];
        }
        const auto &g = geo_[e];
        const Point grad{gl[0] * g.grad_lambda[0].x + gl[1] * g.grad_lambda[1].x +
                             gl[2] * g.grad_lambda[2].x,
                         gl[0] * g.grad_lambda[0].y + gl[1] * g.grad_lambda[1].y +
                             gl[2] * g.grad_lambda[2].y};
        const double *kn = ec + q * stride + 2 * side;
        flux += (side == 0 ? 1.0 : -1.0) * (kn[0] * grad.x + kn[1] * grad.y);
      }
      const double j = flux - ec[q * stride + 4];
      jump2 += edge_[0].weights[q] * j * j;
    }
    jump2 *= length_[k];
    for (int side = 0; side < 2; side++)
    {
      indicators[s[side].element] += std::sqrt(geo_[s[side].element].area) * jump2;
    }
  }
}

EstimatorData ResidualEstimator::estimate(std::span<const double> v) const
{
  EstimatorData data;
  data.indicators.assign(space_.mesh().num_elements(), 0.0);
  evaluate(v, data.indicators);
  return data;
}

double ResidualEstimator::eta(std::span<const double> v) const
{
  return estimate(v).eta();
}

EstimatorData estimate(const FeSpace &space, const PdeData &data, std::span<const double> v)
{
  return ResidualEstimator(space, data).estimate(v);
}

}  // namespace afem
