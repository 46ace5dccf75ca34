// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "afem/precond.hpp"
#include "dense_oracle.hpp"
#include "test_util.hpp"

namespace afem
{
namespace
{

using namespace test;

PdeData test_data()
{
  return PdeData::constant_data({2.0, 0.3, 1.0}, {1.0, 25.0}, 0.0, 1.0);
}

struct Case
{
  int levels;
  int degree;
};

class DenseOracle : public ::testing::TestWithParam<Case>
{
};

TEST_P(DenseOracle, MultigridSweepMatchesProductFormula)
{
  const auto [levels, p] = GetParam();
  const auto data = test_data();
  const auto meshes = small_sequence(levels);
  const auto h = make_hierarchy(meshes, data);
  const FeSpace space(meshes.back(), p);
  if (levels == 2 && p <= 2)
  {
    ASSERT_LE(space.size(), 60);
  }
  const Preconditioner P(h, space, assemble_A(space, data),
                         {PreconditionerType::SymmetricMultigrid, true});
  const Dense got = dense_operator(P);
  const Dense want = dense_smg(dense_levels(meshes, space, data));
  EXPECT_LT(max_abs(got - want), 1e-11 * max_abs(want));
}

TEST_P(DenseOracle, AdditiveSchwarzMatchesSubspaceSum)
{
  const auto [levels, p] = GetParam();
  const auto data = test_data();
  const auto meshes = small_sequence(levels);
  const auto h = make_hierarchy(meshes, data);
  const FeSpace space(meshes.back(), p);
  const Preconditioner P(h, space, assemble_A(space, data),
                         {PreconditionerType::AdditiveSchwarz, true});
  const Dense got = dense_operator(P);
  const Dense want = dense_as(dense_levels(meshes, space, data));
  EXPECT_LT(max_abs(got - want), 1e-11 * max_abs(want));
}

INSTANTIATE_TEST_SUITE_P(Hierarchies, DenseOracle,
                         ::testing::Values(Case{2, 1}, Case{2, 2}, Case{2, 3}, Case{4, 1},
                                           Case{4, 2}, Case{1, 2}),
                         [](const auto &info) {
                           return "L" + std::to_string(info.param.levels) + "_p" +
                                  std::to_string(info.param.degree);
                         });

TEST(Preconditioner, SingleLevelLowestOrderMultigridIsExactSolve)
{
  const auto data = test_data();
  const auto mesh = shared(initial_mesh_lshape());
  MultilevelHierarchy h(data);
  h.push_level(mesh);
  const FeSpace space(mesh, 1);
  const auto A = assemble_A(space, data);
  const Preconditioner P(h, space, A, {PreconditionerType::SymmetricMultigrid, true});
  const Dense M = dense_operator(P);
  const Dense Ainv = to_eigen(A).inverse();
  EXPECT_LT(max_abs(M - Ainv), 1e-12 * max_abs(Ainv));
  // Additive Schwarz without patches reduces to the same coarse solve.
  const Preconditioner Q(h, space, A, {PreconditionerType::AdditiveSchwarz, false});
  EXPECT_LT(max_abs(dense_operator(Q) - Ainv), 1e-12 * max_abs(Ainv));
}

TEST(Preconditioner, PatchesPartitionTheFineSpace)
{
  const auto data = test_data();
  const auto meshes = small_sequence(3);
  const auto h = make_hierarchy(meshes, data);
  for (int p = 1; p <= 3; p++)
  {
    const FeSpace space(meshes.back(), p);
    const Preconditioner P(h, space, assemble_A(space, data));
    std::size_t expected = 0, count = 0;
    for (Index z = 0; z < space.mesh().num_vertices(); z++)
    {
      const auto n = patch_oracle(space, z).size();
      expected += n;
      count += n > 0 ? 1 : 0;
    }
    EXPECT_EQ(P.patch_entries(), expected);
    EXPECT_EQ(P.num_patches(), count);
  }
}

TEST(Preconditioner, SymmetricPositiveDefiniteAcrossLevels)
{
  const auto data = test_data();
  std::mt19937_64 rng(7);
  MultilevelHierarchy h(data);
  auto mesh = shared(initial_mesh_lshape());
  for (int level = 0; level < 6; level++)
  {
    h.push_level(mesh);
    for (int p = 1; p <= 2; p++)
    {
      const FeSpace space(mesh, p);
      const auto A = assemble_A(space, data);
      for (auto type :
           {PreconditionerType::AdditiveSchwarz, PreconditionerType::SymmetricMultigrid})
      {
        const Preconditioner P(h, space, A, {type, true});
        const Dense M = dense_operator(P);
        EXPECT_LT(max_abs(M - M.transpose()), 1e-12 * max_abs(M))
            << "level " << level << " p " << p << " " << to_string(type);
        const Eigen::SelfAdjointEigenSolver<Dense> eig(0.5 * (M + M.transpose()));
        EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
      }
    }
    std::vector<Index> marks;
    std::bernoulli_distribution pick(0.15);
    for (Index e = 0; e < mesh->num_elements(); e++)
    {
      if (pick(rng) || mesh->centroid(e).x * mesh->centroid(e).x + mesh->centroid(e).y *
                                                                      mesh->centroid(e).y <
                           0.05)
      {
        marks.push_back(e);
      }
    }
    mesh = shared(refine(*mesh, marks));
  }
}

TEST(Preconditioner, ConditionNumberStaysBoundedUnderRefinement)
{
  const auto data = test_data();
  MultilevelHierarchy h(data);
  auto mesh = shared(initial_mesh_lshape());
  for (int level = 0; level < 8; level++)
  {
    h.push_level(mesh);
    const FeSpace space(mesh, 2);
    const auto A = assemble_A(space, data);
    for (auto type : {PreconditionerType::AdditiveSchwarz, PreconditionerType::SymmetricMultigrid})
    {
      const Preconditioner P(h, space, A, {type, true});
      const Dense M = dense_operator(P);
      const Eigen::LLT<Dense> llt(0.5 * (M + M.transpose()));
      const Dense Lm = llt.matrixL();
      const Eigen::SelfAdjointEigenSolver<Dense> eig(Lm.transpose() * to_eigen(A) * Lm);
      const double kappa = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
      EXPECT_LT(kappa, 40.0) << "level " << level << " " << to_string(type);
    }
    // Refine around the reentrant corner.
    std::vector<Index> marks;
    for (Index e = 0; e < mesh->num_elements(); e++)
    {
      const Point c = mesh->centroid(e);
      if (std::hypot(c.x, c.y) < 3.0 * mesh->diameter(e))
      {
        marks.push_back(e);
      }
    }
    mesh = shared(refine(*mesh, marks));
  }
}

TEST(Preconditioner, IdentityAndLinearity)
{
  std::mt19937_64 rng(3);
  const auto I = Preconditioner::identity(10);
  const auto r = test::random_vector(rng, 10);
  EXPECT_EQ(I.apply(r), r);
  EXPECT_THROW(I.apply(Vector(9, 0.0)), std::invalid_argument);

  const auto data = test_data();
  const auto meshes = small_sequence(3);
  const auto h = make_hierarchy(meshes, data);
  const FeSpace space(meshes.back(), 2);
  const Preconditioner P(h, space, assemble_A(space, data),
                         {PreconditionerType::SymmetricMultigrid, true});
  const auto x = test::random_vector(rng, space.size());
  const auto y = test::random_vector(rng, space.size());
  Vector z(x.size());
  for (std::size_t i = 0; i < z.size(); i++)
  {
    z[i] = 2.0 * x[i] - 3.0 * y[i];
  }
  const auto Px = P.apply(x), Py = P.apply(y), Pz = P.apply(z);
  for (std::size_t i = 0; i < z.size(); i++)
  {
    EXPECT_NEAR(Pz[i], 2.0 * Px[i] - 3.0 * Py[i], 1e-12 * (std::abs(Pz[i]) + 1.0));
  }
}

TEST(Preconditioner, Errors)
{
  const auto data = test_data();
  EXPECT_THROW(parse_preconditioner("jacobi"), std::invalid_argument);
  EXPECT_EQ(parse_preconditioner("smg"), PreconditionerType::SymmetricMultigrid);
  EXPECT_EQ(to_string(parse_preconditioner("as")), "as");

  MultilevelHierarchy h(data);
  const auto mesh = shared(initial_mesh_lshape());
  h.push_level(mesh);
  // Not a refinement of the previous level.
  EXPECT_THROW(h.push_level(shared(initial_mesh_lshape())), std::invalid_argument);
  // Space on a different mesh.
  const FeSpace other(shared(refine_uniform(*mesh)), 1);
  EXPECT_THROW(Preconditioner(h, other, assemble_A(other, data)), std::invalid_argument);
  // Empty hierarchy.
  MultilevelHierarchy empty(data);
  const FeSpace space(mesh, 1);
  EXPECT_THROW(Preconditioner(empty, space, assemble_A(space, data)), std::invalid_argument);
}

TEST(Pinner, ValueAndIndefiniteDetection)
{
  const Vector r{3.0, 4.0};
  EXPECT_DOUBLE_EQ(pinner(r, r), 5.0);
  const Vector s{-3.0, -4.0};
  EXPECT_THROW(pinner(s, r), std::domain_error);
  // Round-off sized negative values are clamped to zero.
  const Vector tiny{-1e-15, 1.0};
  const Vector one{1.0, 0.0};
  EXPECT_EQ(pinner(tiny, one), 0.0);
}

}  // namespace
}  // namespace afem
