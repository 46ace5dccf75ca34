// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "afem/mesh.hpp"

namespace afem
{
namespace
{

using Triple = std::array<std::pair<double, double>, 3>;

Triple element_key(const Triangulation &mesh, Index e)
{
  Triple t;
  for (int i = 0; i < 3; i++)
  {
    const auto &p = mesh.vertex(mesh.element(e)[i]);
    t[i] = {p.x, p.y};
  }
  std::sort(t.begin(), t.end());
  return t;
}

// Geometric element patch of a point, independent of vertex and element numbering.
std::set<Triple> geometric_patch(const Triangulation &mesh, Point z)
{
  std::set<Triple> patch;
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    for (Index v : mesh.element(e))
    {
      if (mesh.vertex(v).x == z.x && mesh.vertex(v).y == z.y)
      {
        patch.insert(element_key(mesh, e));
      }
    }
  }
  return patch;
}

// V+ computed by comparing element patches before and after refinement.
std::vector<Index> changed_vertices_oracle(const Triangulation &prev, const Triangulation &mesh)
{
  std::vector<Index> result;
  for (Index v = 0; v < mesh.num_vertices(); v++)
  {
    if (v >= prev.num_vertices() ||
        geometric_patch(prev, mesh.vertex(v)) != geometric_patch(mesh, mesh.vertex(v)))
    {
      result.push_back(v);
    }
  }
  return result;
}

TEST(Mesh, InitialLShapeHas48Elements)
{
  const auto mesh = initial_mesh_lshape();
  EXPECT_EQ(mesh.num_elements(), 48);
  EXPECT_EQ(mesh.num_vertices(), 33);
  EXPECT_EQ(mesh.num_edges(), 80);
  EXPECT_NEAR(mesh.total_area(), 3.0, 1e-14);
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    EXPECT_GT(mesh.area(e), 0.0);
  }
  EXPECT_EQ(mesh.check_conformity(), "");
  EXPECT_FALSE(mesh.has_lineage());
}

TEST(Mesh, InitialReferenceEdgeIsLongest)
{
  const auto mesh = initial_mesh_lshape();
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    const auto &el = mesh.element(e);
    const int r = mesh.ref_edge(e);
    auto len = [&](int i) {
      const auto &a = mesh.vertex(el[(i + 1) % 3]), &b = mesh.vertex(el[(i + 2) % 3]);
      return std::hypot(a.x - b.x, a.y - b.y);
    };
    EXPECT_NEAR(len(r), 0.5, 1e-14);
    EXPECT_GE(len(r), len((r + 1) % 3));
    EXPECT_GE(len(r), len((r + 2) % 3));
  }
}

TEST(Mesh, InteriorEdgesHaveTwoElements)
{
  const auto mesh = initial_mesh_lshape();
  int boundary = 0;
  for (Index k = 0; k < mesh.num_edges(); k++)
  {
    if (mesh.is_boundary_edge(k))
    {
      boundary++;
    }
    else
    {
      EXPECT_GE(mesh.edge_elements(k)[1], 0);
    }
  }
  EXPECT_EQ(boundary, 16);
}

TEST(Mesh, RefineWithoutMarksIsIdentity)
{
  const auto mesh = initial_mesh_lshape();
  const auto fine = refine(mesh, {});
  ASSERT_EQ(fine.num_elements(), mesh.num_elements());
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    EXPECT_EQ(fine.element(e), mesh.element(e));
    EXPECT_EQ(fine.parent(e), e);
  }
  EXPECT_TRUE(changed_vertices(mesh, mesh).empty());
}

TEST(Mesh, RefineSingleElementRemovesIt)
{
  const auto mesh = initial_mesh_lshape();
  for (Index e : {0, 17, 47})
  {
    const std::vector<Index> marked{e};
    const auto fine = refine(mesh, marked);
    EXPECT_GT(fine.num_elements(), mesh.num_elements());
    EXPECT_EQ(fine.check_conformity(), "");
    const auto key = element_key(mesh, e);
    for (Index t = 0; t < fine.num_elements(); t++)
    {
      EXPECT_NE(element_key(fine, t), key);
    }
    // Nestedness: old vertices keep their coordinates and indices.
    for (Index v = 0; v < mesh.num_vertices(); v++)
    {
      EXPECT_EQ(fine.vertex(v).x, mesh.vertex(v).x);
      EXPECT_EQ(fine.vertex(v).y, mesh.vertex(v).y);
    }
    EXPECT_NEAR(fine.total_area(), 3.0, 1e-13);
  }
}

TEST(Mesh, RefineRejectsInvalidMarks)
{
  const auto mesh = initial_mesh_lshape();
  const std::vector<Index> out_of_range{48};
  const std::vector<Index> negative{-1};
  const std::vector<Index> duplicate{3, 3};
  EXPECT_THROW(refine(mesh, out_of_range), std::invalid_argument);
  EXPECT_THROW(refine(mesh, negative), std::invalid_argument);
  EXPECT_THROW(refine(mesh, duplicate), std::invalid_argument);
}

TEST(Mesh, ChildrenAreSmallerAndLineageCoversParent)
{
  std::mt19937_64 rng(7);
  auto mesh = initial_mesh_lshape();
  for (int step = 0; step < 6; step++)
  {
    std::vector<Index> marked;
    std::bernoulli_distribution pick(0.2);
    for (Index e = 0; e < mesh.num_elements(); e++)
    {
      if (pick(rng))
      {
        marked.push_back(e);
      }
    }
    const auto fine = refine(mesh, marked);
    std::vector<double> child_area(mesh.num_elements(), 0.0);
    std::vector<int> children(mesh.num_elements(), 0);
    for (Index t = 0; t < fine.num_elements(); t++)
    {
      const Index p = fine.parent(t);
      child_area[p] += fine.area(t);
      children[p]++;
      EXPECT_LE(fine.diameter(t), mesh.diameter(p) * (1.0 + 1e-14));
    }
    for (Index e = 0; e < mesh.num_elements(); e++)
    {
      EXPECT_NEAR(child_area[e], mesh.area(e), 1e-14);
    }
    for (Index e : marked)
    {
      EXPECT_GE(children[e], 2);
    }
    mesh = fine;
  }
}

TEST(Mesh, ClosureOverheadIsBounded)
{
  // #T_l - #T_0 <= C sum #M_l with a moderate C.
  std::mt19937_64 rng(2024);
  const auto initial = initial_mesh_lshape();
  auto mesh = initial;
  std::size_t marked_total = 0;
  double worst = 0.0;
  for (int step = 0; step < 10; step++)
  {
    std::vector<Index> marked;
    std::uniform_int_distribution<Index> pick(0, mesh.num_elements() - 1);
    std::set<Index> chosen;
    const int count = 1 + static_cast<int>(rng() % 6);
    while (static_cast<int>(chosen.size()) < count)
    {
      chosen.insert(pick(rng));
    }
    marked.assign(chosen.begin(), chosen.end());
    marked_total += marked.size();
    mesh = refine(mesh, marked);
    const double ratio = static_cast<double>(mesh.num_elements() - initial.num_elements()) /
                         static_cast<double>(marked_total);
    worst = std::max(worst, ratio);
  }
  EXPECT_GT(worst, 0.0);
  EXPECT_LT(worst, 20.0);
}

TEST(Mesh, RefinementIsDeterministic)
{
  auto a = initial_mesh_lshape(), b = initial_mesh_lshape();
  for (int step = 0; step < 4; step++)
  {
    std::vector<Index> marked;
    for (Index e = 0; e < a.num_elements(); e += 3)
    {
      marked.push_back(e);
    }
    a = refine(a, marked);
    b = refine(b, marked);
    EXPECT_TRUE(a == b);
  }
}

TEST(Mesh, VertexPatchOnTwoTriangleSquare)
{
  const auto mesh = structured_square(1);
  ASSERT_EQ(mesh.num_elements(), 2);
  int shared = 0;
  for (Index z = 0; z < mesh.num_vertices(); z++)
  {
    const auto patch = vertex_patch(mesh, z);
    EXPECT_TRUE(patch.size() == 1 || patch.size() == 2);
    shared += patch.size() == 2 ? 1 : 0;
  }
  EXPECT_EQ(shared, 2);
  EXPECT_THROW(vertex_patch(mesh, 4), std::invalid_argument);
}

TEST(Mesh, VertexPatchMatchesIncidenceScan)
{
  auto mesh = criss_cross_square(3);
  mesh = refine(mesh, std::vector<Index>{0, 5, 11});
  std::vector<std::uint8_t> covered(mesh.num_elements(), 0);
  for (Index z = 0; z < mesh.num_vertices(); z++)
  {
    MarkSet oracle;
    for (Index e = 0; e < mesh.num_elements(); e++)
    {
      const auto &el = mesh.element(e);
      if (std::find(el.begin(), el.end(), z) != el.end())
      {
        oracle.push_back(e);
      }
    }
    const auto patch = vertex_patch(mesh, z);
    EXPECT_EQ(patch, oracle);
    for (Index e : patch)
    {
      covered[e] = 1;
    }
  }
  EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](auto c) { return c == 1; }));
}

TEST(Mesh, ChangedVerticesUniformRefinement)
{
  const auto mesh = initial_mesh_lshape();
  const auto fine = refine_uniform(mesh);
  const auto plus = changed_vertices(mesh, fine);
  std::vector<Index> all(fine.num_vertices());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(plus, all);
  EXPECT_EQ(plus, changed_vertices_oracle(mesh, fine));
}

TEST(Mesh, ChangedVerticesSingleBisection)
{
  // An interior square side shared by two elements whose reference edges coincide: marking
  // one bisects exactly this pair.
  const auto mesh = initial_mesh_lshape();
  Index pair_edge = -1;
  for (Index k = 0; k < mesh.num_edges() && pair_edge < 0; k++)
  {
    const auto &t = mesh.edge_elements(k);
    if (t[1] >= 0 && mesh.element_edge(t[0], mesh.ref_edge(t[0])) == k &&
        mesh.element_edge(t[1], mesh.ref_edge(t[1])) == k)
    {
      pair_edge = k;
    }
  }
  ASSERT_GE(pair_edge, 0);
  const auto t = mesh.edge_elements(pair_edge);
  const auto fine = refine(mesh, std::vector<Index>{t[0]});
  ASSERT_EQ(fine.num_elements(), mesh.num_elements() + 2);
  ASSERT_EQ(fine.num_vertices(), mesh.num_vertices() + 1);
  std::set<Index> expected{mesh.num_vertices()};
  for (Index e : t)
  {
    for (Index v : mesh.element(e))
    {
      expected.insert(v);
    }
  }
  const auto plus = changed_vertices(mesh, fine);
  EXPECT_EQ(std::vector<Index>(expected.begin(), expected.end()), plus);
  EXPECT_EQ(plus, changed_vertices_oracle(mesh, fine));
}

TEST(Mesh, ChangedVerticesMatchesPatchOracleOnRandomRefinements)
{
  std::mt19937_64 rng(11);
  auto mesh = initial_mesh_lshape();
  for (int step = 0; step < 4; step++)
  {
    std::vector<Index> marked;
    for (Index e = 0; e < mesh.num_elements(); e++)
    {
      if (rng() % 7 == 0)
      {
        marked.push_back(e);
      }
    }
    const auto fine = refine(mesh, marked);
    EXPECT_EQ(changed_vertices(mesh, fine), changed_vertices_oracle(mesh, fine));
    mesh = fine;
  }
}

TEST(Mesh, ChangedVerticesRequiresLineage)
{
  const auto a = initial_mesh_lshape();
  const auto b = refine_uniform(refine_uniform(a));
  EXPECT_THROW(changed_vertices(a, b), std::invalid_argument);
}

TEST(Mesh, TextRoundTripAndLineageInference)
{
  auto coarse = initial_mesh_lshape();
  coarse = refine(coarse, std::vector<Index>{1, 2, 30});
  const auto fine = refine(coarse, std::vector<Index>{0, 7, 9, 40});
  std::stringstream cs, fs;
  write_mesh(cs, coarse);
  write_mesh(fs, fine);
  const auto coarse_read = read_mesh(cs);
  const auto fine_read = read_mesh(fs);
  ASSERT_EQ(fine_read.num_elements(), fine.num_elements());
  for (Index e = 0; e < fine.num_elements(); e++)
  {
    EXPECT_EQ(fine_read.element(e), fine.element(e));
    EXPECT_EQ(fine_read.ref_edge(e), fine.ref_edge(e));
  }
  EXPECT_FALSE(fine_read.has_lineage());
  const auto linked = infer_lineage(coarse_read, fine_read);
  ASSERT_TRUE(linked.has_lineage());
  for (Index e = 0; e < fine.num_elements(); e++)
  {
    EXPECT_EQ(linked.parent(e), fine.parent(e));
  }
  EXPECT_EQ(changed_vertices(coarse_read, linked), changed_vertices(coarse, fine));
}

TEST(Mesh, ReadRejectsMalformedInput)
{
  std::stringstream bad_header("d=3 nv=3 ne=1\n");
  EXPECT_THROW(read_mesh(bad_header), std::runtime_error);
  std::stringstream truncated("d=2 nv=3 ne=1\n0 0 1\n1 0 1\n");
  EXPECT_THROW(read_mesh(truncated), std::runtime_error);
}

}  // namespace
}  // namespace afem
