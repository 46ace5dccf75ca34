// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef AFEM_PRECOND_HPP
#define AFEM_PRECOND_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "afem/fespace.hpp"
#include "afem/linalg.hpp"

namespace afem
{

enum class PreconditionerType
{
  AdditiveSchwarz,
  SymmetricMultigrid,
  Identity
};

PreconditionerType parse_preconditioner(const std::string &name);
std::string to_string(PreconditionerType type);

/// Damping of the multigrid smoother, 1 / (d + 1).
inline constexpr double kSmootherDamping = 1.0 / 3.0;

//
// Lowest-order data of a nested mesh sequence T_0, T_1, ..., built incrementally as the
// adaptive loop refines: per level the P1 space, its stiffness matrix, the P1 transfer from
// the previous level and the inverse diagonal restricted to the changed vertices V+.
//
class MultilevelHierarchy
{
public:
  struct Level
  {
    std::shared_ptr<const Triangulation> mesh;
    std::unique_ptr<FeSpace> p1;
    SparseOperator A1;
    SparseOperator transfer;         // P1(T_{j-1}) -> P1(T_j); empty on level 0
    std::vector<Index> plus_dofs;    // P1 DOFs of interior vertices in V+
    std::vector<double> plus_inv_diag;
  };

  explicit MultilevelHierarchy(PdeData data);

  /// Appends the next mesh. Every mesh after the first must carry lineage into the previous
  /// one. Throws std::invalid_argument otherwise.
  void push_level(std::shared_ptr<const Triangulation> mesh);

  int num_levels() const { return static_cast<int>(levels_.size()); }
  const Level &level(int j) const { return *levels_[j]; }
  const std::shared_ptr<const Triangulation> &mesh_ptr(int j) const { return levels_[j]->mesh; }
  const DenseCholesky &coarse_solver() const { return coarse_; }
  const PdeData &data() const { return data_; }

private:
  PdeData data_;
  std::vector<std::unique_ptr<Level>> levels_;
  DenseCholesky coarse_;
};

struct PreconditionerOptions
{
  PreconditionerType type = PreconditionerType::AdditiveSchwarz;
  /// Include the finest-level patch solves (disable only to isolate the coarse term).
  bool patches = true;
};

//
// Symmetric positive definite preconditioner for the finest level of a hierarchy:
// multilevel additive Schwarz or symmetric multigrid, both with an exact coarse P1 solve,
// V+ Jacobi corrections on intermediate levels and degree-p vertex-patch solves on the
// finest level.
//
class Preconditioner : public SpdOperator
{
public:
  /// `space` lives on the last mesh of the hierarchy; `A` is its principal-part matrix.
  Preconditioner(const MultilevelHierarchy &hierarchy, const FeSpace &space, SparseOperator A,
                 PreconditionerOptions options = {});
  /// Identity preconditioner of the given size.
  static Preconditioner identity(Index n);

  PreconditionerType type() const { return options_.type; }
  Index size() const override { return n_; }
  void apply(std::span<const double> r, std::span<double> s) const override;
  /// s = P r with dimension check (throws std::invalid_argument).
  Vector apply(std::span<const double> r) const;

  std::size_t num_patches() const { return patches_.size(); }
  /// Sum of patch sizes, for memory bookkeeping.
  std::size_t patch_entries() const;

private:
  explicit Preconditioner(Index n);

  struct Patch
  {
    std::vector<Index> dofs;
    DenseCholesky factor;
  };

  void apply_patches(std::span<const double> r, std::span<double> s, double scale) const;
  void apply_additive(std::span<const double> r, std::span<double> s) const;
  void apply_multigrid(std::span<const double> r, std::span<double> s) const;

  const MultilevelHierarchy *hierarchy_ = nullptr;
  PreconditionerOptions options_;
  Index n_ = 0;
  int finest_ = 0;            // hierarchy level of the finest mesh
  bool coarse_only_ = false;  // P equals the exact coarse solve
  SparseOperator A_;
  SparseOperator transfer_;   // P1 on the previous level (or on T_0 if finest_ == 0) -> space
  std::vector<Patch> patches_;
};

/// Preconditioner-weighted residual norm (s, r)^{1/2} for s = P r. Throws std::domain_error if
/// (s, r) < -1e-13 |s| |r|, which signals a preconditioner that is not SPD.
double pinner(std::span<const double> s, std::span<const double> r);

}  // namespace afem

#endif  // AFEM_PRECOND_HPP
