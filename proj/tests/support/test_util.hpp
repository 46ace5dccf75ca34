// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef AFEM_TEST_UTIL_HPP
#define AFEM_TEST_UTIL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "afem/fespace.hpp"
#include "afem/linalg.hpp"
#include "afem/mesh.hpp"

namespace afem::test
{

inline Vector random_vector(std::mt19937_64 &rng, std::size_t n, double lo = -1.0,
                            double hi = 1.0)
{
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector x(n);
  for (auto &v : x)
  {
    v = dist(rng);
  }
  return x;
}

/// Barycentric coordinates of p in element e.
inline std::array<double, 3> barycentric(const Triangulation &mesh, Index e, const Point &p)
{
  const auto &el = mesh.element(e);
  const Point &a = mesh.vertex(el[0]), &b = mesh.vertex(el[1]), &c = mesh.vertex(el[2]);
  const double det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  const double l1 = ((p.x - a.x) * (c.y - a.y) - (p.y - a.y) * (c.x - a.x)) / det;
  const double l2 = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / det;
  return {1.0 - l1 - l2, l1, l2};
}

/// Brute-force point location; returns -1 if p lies outside the mesh.
inline Index locate(const Triangulation &mesh, const Point &p)
{
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    const auto l = barycentric(mesh, e, p);
    if (l[0] >= -1e-12 && l[1] >= -1e-12 && l[2] >= -1e-12)
    {
      return e;
    }
  }
  return -1;
}

/// Uniformly random point of element e.
inline Point random_point(std::mt19937_64 &rng, const Triangulation &mesh, Index e)
{
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double s = dist(rng), t = dist(rng);
  if (s + t > 1.0)
  {
    s = 1.0 - s;
    t = 1.0 - t;
  }
  const auto &el = mesh.element(e);
  const Point &a = mesh.vertex(el[0]), &b = mesh.vertex(el[1]), &c = mesh.vertex(el[2]);
  return {a.x + s * (b.x - a.x) + t * (c.x - a.x), a.y + s * (b.y - a.y) + t * (c.y - a.y)};
}

/// Dense row-major matrix-vector product.
inline Vector dense_apply(const std::vector<double> &A, Index n, const Vector &x)
{
  Vector y(n, 0.0);
  for (Index i = 0; i < n; i++)
  {
    for (Index j = 0; j < static_cast<Index>(x.size()); j++)
    {
      y[i] += A[static_cast<std::size_t>(i) * x.size() + j] * x[j];
    }
  }
  return y;
}

/// Nodal interpolant of u in the space.
template <typename F>
Vector interpolate(const FeSpace &space, F &&u)
{
  Vector x(space.size(), 0.0);
  const auto &mesh = space.mesh();
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    const auto dofs = space.element_dofs(e);
    for (std::size_t i = 0; i < dofs.size(); i++)
    {
      if (dofs[i] >= 0)
      {
        x[dofs[i]] = u(map_to_physical(mesh, e, space.element().node_barycentric(i)));
      }
    }
  }
  return x;
}

}  // namespace afem::test

#endif  // AFEM_TEST_UTIL_HPP
