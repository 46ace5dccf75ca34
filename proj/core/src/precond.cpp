// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "afem/precond.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace afem
{

PreconditionerType parse_preconditioner(const std::string &name)
{
  if (name == "as")
  {
    return PreconditionerType::AdditiveSchwarz;
  }
  if (name == "smg")
  {
    return PreconditionerType::SymmetricMultigrid;
  }
  if (name == "identity")
  {
    return PreconditionerType::Identity;
  }
  throw std::invalid_argument("unknown preconditioner '" + name +
                              "' (expected as, smg or identity)");
}

std::string to_string(PreconditionerType type)
{
  switch (type)
  {
    case PreconditionerType::AdditiveSchwarz:
      return "as";
    case PreconditionerType::SymmetricMultigrid:
      return "smg";
    case PreconditionerType::Identity:
      return "identity";
  }
  return "unknown";
}

namespace
{

DenseCholesky dense_factor(const SparseOperator &A, std::span<const Index> dofs)
{
  const Index m = static_cast<Index>(dofs.size());
  std::vector<double> a(static_cast<std::size_t>(m) * m, 0.0);
  for (Index i = 0; i < m; i++)
  {
    for (Index j = 0; j <= i; j++)
    {
      a[static_cast<std::size_t>(i) * m + j] = A.coeff(dofs[i], dofs[j]);
    }
  }
  return DenseCholesky(m, a);
}

}  // namespace

MultilevelHierarchy::MultilevelHierarchy(PdeData data) : data_(std::move(data)) {}

void MultilevelHierarchy::push_level(std::shared_ptr<const Triangulation> mesh)
{
  if (!mesh)
  {
    throw std::invalid_argument("push_level: null mesh");
  }
  auto level = std::make_unique<Level>();
  level->mesh = mesh;
  level->p1 = std::make_unique<FeSpace>(mesh, 1);
  level->A1 = assemble_A(*level->p1, data_);
  if (levels_.empty())
  {
    std::vector<Index> all(level->p1->size());
    for (Index i = 0; i < level->p1->size(); i++)
    {
      all[i] = i;
    }
    coarse_ = dense_factor(level->A1, all);
  }
  else
  {
    const Level &prev = *levels_.back();
    if (!mesh->has_lineage() || mesh->parent_num_elements() != prev.mesh->num_elements())
    {
      throw std::invalid_argument("push_level: mesh is not a refinement of the previous level");
    }
    level->transfer = prolongation(*prev.p1, *level->p1);
    const auto diag = level->A1.diagonal();
    for (Index z : changed_vertices(*prev.mesh, *mesh))
    {
      const Index dof = level->p1->vertex_dof(z);
      if (dof >= 0)
      {
        level->plus_dofs.push_back(dof);
        level->plus_inv_diag.push_back(1.0 / diag[dof]);
      }
    }
  }
  levels_.push_back(std::move(level));
}

Preconditioner::Preconditioner(Index n) : n_(n)
{
  options_.type = PreconditionerType::Identity;
}

Preconditioner Preconditioner::identity(Index n)
{
  return Preconditioner(n);
}

Preconditioner::Preconditioner(const MultilevelHierarchy &hierarchy, const FeSpace &space,
                               SparseOperator A, PreconditionerOptions options)
  : hierarchy_(&hierarchy), options_(options), n_(space.size()), A_(std::move(A))
{
  if (options_.type == PreconditionerType::Identity)
  {
    hierarchy_ = nullptr;
    return;
  }
  if (hierarchy.num_levels() == 0)
  {
    throw std::invalid_argument("preconditioner: empty hierarchy");
  }
  finest_ = hierarchy.num_levels() - 1;
  const auto &fine_mesh = hierarchy.mesh_ptr(finest_);
  if (space.mesh_ptr() != fine_mesh && !(space.mesh() == *fine_mesh))
  {
    throw std::invalid_argument("preconditioner: space is not on the finest hierarchy mesh");
  }
  if (A_.rows() != n_ || A_.cols() != n_)
  {
    throw std::invalid_argument("preconditioner: matrix does not match the space");
  }
  const int p = space.degree();
  coarse_only_ =
      options_.type == PreconditionerType::SymmetricMultigrid && finest_ == 0 && p == 1;
  if (coarse_only_)
  {
    return;
  }

  // Transfer from P1 on the previous level into the finest space; built on the hierarchy's
  // mesh object so that a same-mesh transfer is recognised as nodal injection.
  const FeSpace fine(fine_mesh, p);
  transfer_ = prolongation(*hierarchy.level(std::max(finest_ - 1, 0)).p1, fine);

  if (!options_.patches)
  {
    return;
  }
  const auto &mesh = space.mesh();
  const auto &fe = space.element();
  std::vector<Index> dofs;
  for (Index z = 0; z < mesh.num_vertices(); z++)
  {
    dofs.clear();
    for (Index e : mesh.vertex_elements(z))
    {
      const auto &el = mesh.element(e);
      const auto edofs = space.element_dofs(e);
      const int a = static_cast<int>(std::find(el.begin(), el.end(), z) - el.begin());
      if (edofs[a] >= 0)
      {
        dofs.push_back(edofs[a]);
      }
      for (int i = 0; i < 3; i++)
      {
        if (i == a)
        {
          continue;
        }
        for (int k = 0; k < fe.nodes_per_edge(); k++)
        {
          const Index d = edofs[fe.edge_offset(i) + k];
          if (d >= 0)
          {
            dofs.push_back(d);
          }
        }
      }
      for (int k = 0; k < fe.num_interior(); k++)
      {
        dofs.push_back(edofs[fe.interior_offset() + k]);
      }
    }
    std::sort(dofs.begin(), dofs.end());
    dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
    if (dofs.empty())
    {
      continue;
    }
    patches_.push_back(Patch{dofs, dense_factor(A_, dofs)});
  }
}

std::size_t Preconditioner::patch_entries() const
{
  std::size_t sum = 0;
  for (const auto &patch : patches_)
  {
    sum += patch.dofs.size();
  }
  return sum;
}

void Preconditioner::apply_patches(std::span<const double> r, std::span<double> s,
                                   double scale) const
{
  Vector local;
  for (const auto &patch : patches_)
  {
    local.resize(patch.dofs.size());
    for (std::size_t i = 0; i < patch.dofs.size(); i++)
    {
      local[i] = r[patch.dofs[i]];
    }
    patch.factor.solve(local);
    for (std::size_t i = 0; i < patch.dofs.size(); i++)
    {
      s[patch.dofs[i]] += scale * local[i];
    }
  }
}

void Preconditioner::apply(std::span<const double> r, std::span<double> s) const
{
  switch (options_.type)
  {
    case PreconditionerType::Identity:
      std::copy(r.begin(), r.end(), s.begin());
      return;
    case PreconditionerType::AdditiveSchwarz:
      apply_additive(r, s);
      return;
    case PreconditionerType::SymmetricMultigrid:
      apply_multigrid(r, s);
      return;
  }
}

Vector Preconditioner::apply(std::span<const double> r) const
{
  if (static_cast<Index>(r.size()) != n_)
  {
    throw std::invalid_argument("preconditioner: residual has length " +
                                std::to_string(r.size()) + ", expected " + std::to_string(n_));
  }
  Vector s(n_, 0.0);
  apply(r, s);
  return s;
}

void Preconditioner::apply_additive(std::span<const double> r, std::span<double> s) const
{
  const auto &h = *hierarchy_;
  const int L = finest_;
  // Restriction to all P1 levels below the finest one.
  std::vector<Vector> res(std::max(L, 1));
  res[std::max(L - 1, 0)] = spmv_transpose(transfer_, r);
  for (int j = L - 1; j >= 1; j--)
  {
    res[j - 1] = spmv_transpose(h.level(j).transfer, res[j]);
  }
  Vector e = res[0];
  h.coarse_solver().solve(e);
  for (int j = 1; j <= L - 1; j++)
  {
    const auto &lev = h.level(j);
    Vector next = spmv(lev.transfer, e);
    for (std::size_t i = 0; i < lev.plus_dofs.size(); i++)
    {
      next[lev.plus_dofs[i]] += lev.plus_inv_diag[i] * res[j][lev.plus_dofs[i]];
    }
    e = std::move(next);
  }
  transfer_.apply(e, s);
  apply_patches(r, s, 1.0);
}

void Preconditioner::apply_multigrid(std::span<const double> r, std::span<double> s) const
{
  const auto &h = *hierarchy_;
  const int L = finest_;
  if (coarse_only_)
  {
    std::copy(r.begin(), r.end(), s.begin());
    h.coarse_solver().solve(s);
    return;
  }
  constexpr double mu = kSmootherDamping;

  // Finest level pre-smoothing.
  Vector c_fine(n_, 0.0);
  apply_patches(r, c_fine, mu);
  Vector r_fine(r.begin(), r.end());
  A_.apply_add(-1.0, c_fine, r_fine);

  // Intermediate levels, downward.
  std::vector<Vector> c_down(std::max(L, 1)), r_down(std::max(L, 1));
  Vector res = spmv_transpose(transfer_, r_fine);
  for (int j = L - 1; j >= 1; j--)
  {
    const auto &lev = h.level(j);
    Vector c(res.size(), 0.0);
    for (std::size_t i = 0; i < lev.plus_dofs.size(); i++)
    {
      c[lev.plus_dofs[i]] = mu * lev.plus_inv_diag[i] * res[lev.plus_dofs[i]];
    }
    lev.A1.apply_add(-1.0, c, res);
    c_down[j] = std::move(c);
    r_down[j] = res;
    res = spmv_transpose(lev.transfer, r_down[j]);
  }

  // Exact coarse solve.
  Vector e = std::move(res);
  h.coarse_solver().solve(e);

  // Intermediate levels, upward.
  for (int j = 1; j <= L - 1; j++)
  {
    const auto &lev = h.level(j);
    Vector ep = spmv(lev.transfer, e);
    Vector u = r_down[j];
    lev.A1.apply_add(-1.0, ep, u);
    for (std::size_t i = 0; i < ep.size(); i++)
    {
      ep[i] += c_down[j][i];
    }
    for (std::size_t i = 0; i < lev.plus_dofs.size(); i++)
    {
      const Index d = lev.plus_dofs[i];
      ep[d] += mu * lev.plus_inv_diag[i] * u[d];
    }
    e = std::move(ep);
  }

  // Finest level post-smoothing.
  transfer_.apply(e, s);
  Vector u = r_fine;
  A_.apply_add(-1.0, s, u);
  for (Index i = 0; i < n_; i++)
  {
    s[i] += c_fine[i];
  }
  apply_patches(u, s, mu);
}

double pinner(std::span<const double> s, std::span<const double> r)
{
  const double val = dot(s, r);
  if (val < -1e-13 * norm2(s) * norm2(r))
  {
    throw std::domain_error("preconditioner is not positive definite: (Pr, r) = " +
                            std::to_string(val));
  }
  return std::sqrt(std::max(val, 0.0));
}

}  // namespace afem
