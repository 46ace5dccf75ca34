// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef AFEM_FESPACE_HPP
#define AFEM_FESPACE_HPP

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "afem/linalg.hpp"
#include "afem/mesh.hpp"
#include "afem/reference.hpp"

namespace afem
{

/// Symmetric 2x2 matrix.
struct Matrix2
{
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;
};

using ScalarField = std::function<double(Index element, const Point &x)>;
using VectorField = std::function<Point(Index element, const Point &x)>;
using TensorField = std::function<Matrix2(Index element, const Point &x)>;

//
// Coefficients and data of -div(K grad u) + b . grad u + c u = f - div fvec with homogeneous
// Dirichlet conditions. Fields are evaluated per (element, point), so piecewise smooth data
// is supported.
//
struct PdeData
{
  TensorField K;
  VectorField b;
  ScalarField c;
  ScalarField f;
  VectorField fvec;

  /// Optional elementwise divergence of fvec (zero if empty).
  ScalarField div_fvec;
  /// Optional elementwise row divergence of K, (dx Kxx + dy Kxy, dx Kxy + dy Kyy) (zero if
  /// empty).
  VectorField div_K;

  /// Declared lower bound for the smallest eigenvalue of K.
  double k_min = 0.0;
  /// True if all fields are globally constant.
  bool constant = false;

  static PdeData constant_data(Matrix2 K, Point b, double c, double f, Point fvec = {});

  /// Spot-checks ellipticity at element centroids and, for constant data, 2 c >= 0. Throws
  /// std::invalid_argument on violation.
  void validate(const Triangulation &mesh) const;
};

/// Affine element geometry: area and gradients of the barycentric coordinates.
struct ElementGeometry
{
  double area;
  std::array<Point, 3> grad_lambda;
};
ElementGeometry element_geometry(const Triangulation &mesh, Index e);
Point map_to_physical(const Triangulation &mesh, Index e, const std::array<double, 3> &lambda);

//
// Continuous degree-p Lagrange space with homogeneous Dirichlet conditions. Global numbering:
// interior vertices (vertex order), then interior edges (edge order, nodes ordered from the
// smaller to the larger vertex index), then element interior nodes (element order).
//
class FeSpace
{
public:
  FeSpace(std::shared_ptr<const Triangulation> mesh, int degree);

  const Triangulation &mesh() const { return *mesh_; }
  const std::shared_ptr<const Triangulation> &mesh_ptr() const { return mesh_; }
  int degree() const { return fe_.degree(); }
  const LagrangeElement &element() const { return fe_; }
  Index size() const { return size_; }

  /// Global DOF of every local node of element e, -1 for Dirichlet nodes.
  std::span<const Index> element_dofs(Index e) const
  {
    return {dofs_.data() + static_cast<std::size_t>(e) * fe_.num_nodes(),
            static_cast<std::size_t>(fe_.num_nodes())};
  }
  /// DOF of vertex v, -1 on the boundary.
  Index vertex_dof(Index v) const { return vertex_dof_[v]; }
  Index num_vertex_dofs() const { return num_vertex_dofs_; }

  /// Value of the discrete function with coefficients x at barycentric point lambda of e.
  double evaluate(std::span<const double> x, Index e, const std::array<double, 3> &lambda) const;
  /// Physical gradient of the discrete function.
  Point evaluate_gradient(std::span<const double> x, Index e,
                          const std::array<double, 3> &lambda) const;

  /// Zero-valued operator with the DOF interaction pattern.
  SparseOperator sparsity() const;

private:
  std::shared_ptr<const Triangulation> mesh_;
  LagrangeElement fe_;
  Index size_ = 0;
  Index num_vertex_dofs_ = 0;
  std::vector<Index> dofs_;
  std::vector<Index> vertex_dof_;
};

/// Element matrices and load vector in local node order (row = test function), including
/// Dirichlet nodes.
struct LocalSystem
{
  int num_nodes = 0;
  std::vector<double> A;  // principal part, row-major
  std::vector<double> B;  // full bilinear form, row-major
  std::vector<double> F;
};
LocalSystem local_system(const FeSpace &space, const PdeData &data, Index e);

/// Galerkin matrix of the full bilinear form, (B)_{jk} = b(phi_k, phi_j).
SparseOperator assemble_B(const FeSpace &space, const PdeData &data);
/// Galerkin matrix of the symmetric principal part, (A)_{jk} = (K grad phi_k, grad phi_j).
SparseOperator assemble_A(const FeSpace &space, const PdeData &data);
/// Load vector F(phi_j) = (f, phi_j) + (fvec, grad phi_j).
Vector assemble_rhs(const FeSpace &space, const PdeData &data);

/// A, B and the load vector in one pass; A and B share their sparsity pattern.
struct GalerkinSystem
{
  SparseOperator A;
  SparseOperator B;
  Vector d;
};
GalerkinSystem assemble_system(const FeSpace &space, const PdeData &data);

/// Matrix of the embedding coarse -> fine by nodal interpolation. The fine mesh must either be
/// the coarse mesh or carry lineage pointing into it. Degrees may differ as long as the coarse
/// space embeds into the fine one.
SparseOperator prolongation(const FeSpace &coarse, const FeSpace &fine);

/// Sparse direct solve of B x = d. Throws std::runtime_error if B is singular.
Vector galerkin_solve_direct(const SparseOperator &B, std::span<const double> d);

/// (x^T A x)^{1/2}.
double energy_norm(const SparseOperator &A, std::span<const double> x);

}  // namespace afem

#endif  // AFEM_FESPACE_HPP
