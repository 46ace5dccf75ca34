// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "afem/estimator.hpp"
#include "test_util.hpp"

namespace afem
{
namespace
{

std::shared_ptr<const Triangulation> shared(Triangulation mesh)
{
  return std::make_shared<const Triangulation>(std::move(mesh));
}

// Independent evaluation: pointwise values, gradients, finite-difference Hessians and a
// different quadrature rule.
std::vector<double> oracle_indicators(const FeSpace &space, const Matrix2 &K, const Point &b,
                                      double c, double f, const Vector &v)
{
  const auto &mesh = space.mesh();
  const int p = space.degree();
  std::vector<double> eta2(mesh.num_elements(), 0.0);
  const auto rule = triangle_rule(2 * p + 4);
  const double h = 1e-5;
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); q++)
    {
      const Point x = map_to_physical(mesh, e, rule.points[q]);
      auto grad_at = [&](double dx, double dy) {
        return space.evaluate_gradient(v, e, test::barycentric(mesh, e, {x.x + dx, x.y + dy}));
      };
      const Point gxp = grad_at(h, 0.0), gxm = grad_at(-h, 0.0);
      const Point gyp = grad_at(0.0, h), gym = grad_at(0.0, -h);
      const double hxx = (gxp.x - gxm.x) / (2 * h), hyy = (gyp.y - gym.y) / (2 * h);
      const double hxy = 0.5 * ((gxp.y - gxm.y) + (gyp.x - gym.x)) / (2 * h);
      const Point g = space.evaluate_gradient(v, e, rule.points[q]);
      const double val = space.evaluate(v, e, rule.points[q]);
      const double r = K.xx * hxx + 2.0 * K.xy * hxy + K.yy * hyy - b.x * g.x - b.y * g.y -
                       c * val + f;
      sum += rule.weights[q] * r * r;
    }
    eta2[e] = mesh.area(e) * mesh.area(e) * sum;
  }
  const auto line = gauss_legendre(p + 3);
  for (Index k = 0; k < mesh.num_edges(); k++)
  {
    if (mesh.is_boundary_edge(k))
    {
      continue;
    }
    const auto &ed = mesh.edge(k);
    const Point a = mesh.vertex(ed[0]), bb = mesh.vertex(ed[1]);
    const double len = std::hypot(bb.x - a.x, bb.y - a.y);
    const Point n{(bb.y - a.y) / len, -(bb.x - a.x) / len};
    const auto t = mesh.edge_elements(k);
    double jump2 = 0.0;
    for (std::size_t q = 0; q < line.points.size(); q++)
    {
      const double s = line.points[q];
      const Point x{a.x + s * (bb.x - a.x), a.y + s * (bb.y - a.y)};
      const Point g0 = space.evaluate_gradient(v, t[0], test::barycentric(mesh, t[0], x));
      const Point g1 = space.evaluate_gradient(v, t[1], test::barycentric(mesh, t[1], x));
      const Point d{g0.x - g1.x, g0.y - g1.y};
      const double j = (K.xx * d.x + K.xy * d.y) * n.x + (K.xy * d.x + K.yy * d.y) * n.y;
      jump2 += line.weights[q] * j * j;
    }
    for (Index e : t)
    {
      eta2[e] += std::sqrt(mesh.area(e)) * len * jump2;
    }
  }
  return eta2;
}

TEST(Estimator, ZeroDataZeroFunction)
{
  const FeSpace space(shared(initial_mesh_lshape()), 2);
  const auto data = PdeData::constant_data({}, {}, 0.0, 0.0);
  const auto est = estimate(space, data, Vector(space.size(), 0.0));
  EXPECT_EQ(est.eta(), 0.0);
}

TEST(Estimator, ConstantSourceOnZeroFunction)
{
  const auto mesh = shared(criss_cross_square(4));
  const FeSpace space(mesh, 1);
  const auto est =
      estimate(space, PdeData::constant_data({}, {}, 0.0, 1.0), Vector(space.size(), 0.0));
  for (Index e = 0; e < mesh->num_elements(); e++)
  {
    EXPECT_NEAR(est.indicators[e], mesh->area(e) * mesh->area(e), 1e-16);
  }
}

TEST(Estimator, VanishesForExactPolynomialSolution)
{
  // u = x(1-x)y(1-y) lies in the quartic space; with f = -div grad u + b . grad u the
  // residual and all jumps vanish.
  const auto mesh = shared(refine_uniform(criss_cross_square(2)));
  const FeSpace space(mesh, 4);
  const Point b{1.0, 25.0};
  auto data = PdeData::constant_data({}, b, 0.0, 0.0);
  data.constant = false;
  data.f = [b](Index, const Point &x) {
    const double ux = (1 - 2 * x.x) * x.y * (1 - x.y), uy = (1 - 2 * x.y) * x.x * (1 - x.x);
    return 2.0 * x.y * (1 - x.y) + 2.0 * x.x * (1 - x.x) + b.x * ux + b.y * uy;
  };
  const auto v = test::interpolate(space, [](const Point &x) {
    return x.x * (1 - x.x) * x.y * (1 - x.y);
  });
  EXPECT_LT(estimate(space, data, v).eta(), 1e-12);
  // A perturbed function is detected.
  auto w = v;
  w[0] += 1e-3;
  EXPECT_GT(estimate(space, data, w).eta(), 1e-6);
}

TEST(Estimator, MatchesIndependentOracle)
{
  std::mt19937_64 rng(21);
  auto mesh_raw = initial_mesh_lshape();
  mesh_raw = refine(mesh_raw, std::vector<Index>{2, 7, 30});
  const auto mesh = shared(mesh_raw);
  const Matrix2 K{1.3, 0.2, 0.7};
  const Point b{1.0, 25.0};
  for (int p = 1; p <= 3; p++)
  {
    const FeSpace space(mesh, p);
    const auto v = test::random_vector(rng, space.size());
    const auto est = estimate(space, PdeData::constant_data(K, b, 0.5, 1.0), v);
    const auto ref = oracle_indicators(space, K, b, 0.5, 1.0, v);
    for (Index e = 0; e < mesh->num_elements(); e++)
    {
      EXPECT_NEAR(est.indicators[e], ref[e], 1e-6 * ref[e] + 1e-12) << "p=" << p << " e=" << e;
    }
  }
}

TEST(Estimator, NonConstantDataPathAgreesWithConstantPath)
{
  std::mt19937_64 rng(22);
  const auto mesh = shared(refine_uniform(initial_mesh_lshape()));
  const FeSpace space(mesh, 2);
  const auto data = PdeData::constant_data({2.0, 0.1, 1.0}, {1.0, 25.0}, 0.3, 1.0, {0.2, 0.4});
  auto generic = data;
  generic.constant = false;
  const auto v = test::random_vector(rng, space.size());
  const auto a = estimate(space, data, v), b = estimate(space, generic, v);
  for (Index e = 0; e < mesh->num_elements(); e++)
  {
    EXPECT_NEAR(a.indicators[e], b.indicators[e], 1e-12 * a.indicators[e]);
  }
}

TEST(Estimator, SubsetNorms)
{
  std::mt19937_64 rng(23);
  const auto mesh = shared(initial_mesh_lshape());
  const FeSpace space(mesh, 2);
  const auto est = estimate(space, PdeData::constant_data({}, {1.0, 25.0}, 0.0, 1.0),
                            test::random_vector(rng, space.size()));
  std::vector<Index> all(mesh->num_elements());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_NEAR(subset_norm(est, all), est.eta(), 1e-14 * est.eta());
  EXPECT_EQ(subset_norm(est, {}), 0.0);
  for (int trial = 0; trial < 10; trial++)
  {
    std::vector<Index> U, rest;
    for (Index e = 0; e < mesh->num_elements(); e++)
    {
      (rng() % 2 ? U : rest).push_back(e);
    }
    const double a = subset_norm(est, U), b = subset_norm(est, rest);
    EXPECT_NEAR(a * a + b * b, est.total(), 1e-13 * est.total());
  }
  EXPECT_THROW(subset_norm(est, std::vector<Index>{48}), std::invalid_argument);
  EXPECT_THROW(estimate(space, PdeData::constant_data({}, {}, 0.0, 1.0), Vector(3)),
               std::invalid_argument);
}

TEST(Estimator, ReductionOnRefinedElements)
{
  std::mt19937_64 rng(24);
  const auto data = PdeData::constant_data({}, {1.0, 25.0}, 0.0, 1.0);
  auto coarse_mesh = shared(refine_uniform(initial_mesh_lshape()));
  for (int draw = 0; draw < 20; draw++)
  {
    const int p = 1 + draw % 3;
    std::vector<Index> marked;
    for (Index e = 0; e < coarse_mesh->num_elements(); e++)
    {
      if (rng() % 4 == 0)
      {
        marked.push_back(e);
      }
    }
    const auto fine_mesh = shared(refine(*coarse_mesh, marked));
    const FeSpace coarse(coarse_mesh, p), fine(fine_mesh, p);
    const auto vH = test::random_vector(rng, coarse.size());
    const auto vh = spmv(prolongation(coarse, fine), vH);
    const auto etaH = estimate(coarse, data, vH), etah = estimate(fine, data, vh);
    std::vector<int> children(coarse_mesh->num_elements(), 0);
    for (Index t = 0; t < fine_mesh->num_elements(); t++)
    {
      children[fine_mesh->parent(t)]++;
    }
    double refined = 0.0, created = 0.0;
    for (Index e = 0; e < coarse_mesh->num_elements(); e++)
    {
      refined += children[e] > 1 ? etaH.indicators[e] : 0.0;
    }
    for (Index t = 0; t < fine_mesh->num_elements(); t++)
    {
      created += children[fine_mesh->parent(t)] > 1 ? etah.indicators[t] : 0.0;
    }
    EXPECT_LE(std::sqrt(created), std::pow(2.0, -0.25) * std::sqrt(refined) * (1.0 + 1e-12));
    coarse_mesh = fine_mesh;
    if (coarse_mesh->num_elements() > 3000)
    {
      coarse_mesh = shared(refine_uniform(initial_mesh_lshape()));
    }
  }
}

TEST(Estimator, StabilityRatioStaysBounded)
{
  std::mt19937_64 rng(25);
  const auto data = PdeData::constant_data({}, {1.0, 25.0}, 0.0, 1.0);
  auto coarse_mesh = shared(initial_mesh_lshape());
  double running_max = 0.0;
  std::vector<double> maxima;
  for (int level = 0; level < 6; level++)
  {
    std::vector<Index> marked;
    for (Index e = 0; e < coarse_mesh->num_elements(); e++)
    {
      if (rng() % 5 == 0)
      {
        marked.push_back(e);
      }
    }
    const auto fine_mesh = shared(refine(*coarse_mesh, marked));
    const FeSpace coarse(coarse_mesh, 2), fine(fine_mesh, 2);
    const auto A = assemble_A(fine, data);
    const auto P = prolongation(coarse, fine);
    std::vector<int> children(coarse_mesh->num_elements(), 0);
    for (Index t = 0; t < fine_mesh->num_elements(); t++)
    {
      children[fine_mesh->parent(t)]++;
    }
    for (int draw = 0; draw < 5; draw++)
    {
      const auto vH = test::random_vector(rng, coarse.size());
      auto vh = spmv(P, vH);
      const auto pert = test::random_vector(rng, fine.size(), -0.1, 0.1);
      axpy(1.0, pert, vh);
      const auto etaH = estimate(coarse, data, vH), etah = estimate(fine, data, vh);
      double sH = 0.0, sh = 0.0;
      for (Index t = 0; t < fine_mesh->num_elements(); t++)
      {
        const Index parent = fine_mesh->parent(t);
        if (children[parent] == 1)
        {
          sh += etah.indicators[t];
          sH += etaH.indicators[parent];
        }
      }
      const double ratio = std::abs(std::sqrt(sh) - std::sqrt(sH)) / energy_norm(A, pert);
      EXPECT_TRUE(std::isfinite(ratio));
      running_max = std::max(running_max, ratio);
    }
    maxima.push_back(running_max);
    coarse_mesh = fine_mesh;
  }
  // The running maximum settles: the last levels do not increase it substantially.
  EXPECT_LT(maxima.back(), 2.0 * maxima[2]);
  EXPECT_LT(maxima.back(), 50.0);
}

}  // namespace
}  // namespace afem
