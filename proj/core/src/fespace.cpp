// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "afem/fespace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace afem
{

PdeData PdeData::constant_data(Matrix2 K, Point b, double c, double f, Point fvec)
{
  PdeData data;
  data.K = [K](Index, const Point &) { return K; };
  data.b = [b](Index, const Point &) { return b; };
  data.c = [c](Index, const Point &) { return c; };
  data.f = [f](Index, const Point &) { return f; };
  data.fvec = [fvec](Index, const Point &) { return fvec; };
  const double mean = 0.5 * (K.xx + K.yy), dev = std::hypot(0.5 * (K.xx - K.yy), K.xy);
  data.k_min = mean - dev;
  data.constant = true;
  return data;
}

void PdeData::validate(const Triangulation &mesh) const
{
  if (!K || !b || !c || !f || !fvec)
  {
    throw std::invalid_argument("PdeData: all of K, b, c, f, fvec must be set");
  }
  if (!(k_min > 0.0))
  {
    throw std::invalid_argument("PdeData: declared k_min must be positive");
  }
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    const Point x = mesh.centroid(e);
    const Matrix2 k = K(e, x);
    const double mean = 0.5 * (k.xx + k.yy), dev = std::hypot(0.5 * (k.xx - k.yy), k.xy);
    if (mean - dev < k_min * (1.0 - 1e-12))
    {
      throw std::invalid_argument("PdeData: smallest eigenvalue of K below k_min on element " +
                                  std::to_string(e));
    }
    if (constant)
    {
      if (2.0 * c(e, x) < 0.0)
      {
        throw std::invalid_argument("PdeData: constant data requires c >= 0");
      }
      break;
    }
  }
}

ElementGeometry element_geometry(const Triangulation &mesh, Index e)
{
  const auto &el = mesh.element(e);
  const Point &a = mesh.vertex(el[0]), &b = mesh.vertex(el[1]), &c = mesh.vertex(el[2]);
  const double det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  if (!(det > 0.0))
  {
    throw std::invalid_argument("degenerate or inverted element " + std::to_string(e));
  }
  ElementGeometry g;
  g.area = 0.5 * det;
  const Point *v[3] = {&a, &b, &c};
  for (int i = 0; i < 3; i++)
  {
    const Point &p = *v[(i + 1) % 3], &q = *v[(i + 2) % 3];
    g.grad_lambda[i] = {(p.y - q.y) / det, (q.x - p.x) / det};
  }
  return g;
}

Point map_to_physical(const Triangulation &mesh, Index e, const std::array<double, 3> &lambda)
{
  const auto &el = mesh.element(e);
  Point x{0.0, 0.0};
  for (int a = 0; a < 3; a++)
  {
    x.x += lambda[a] * mesh.vertex(el[a]).x;
    x.y += lambda[a] * mesh.vertex(el[a]).y;
  }
  return x;
}

FeSpace::FeSpace(std::shared_ptr<const Triangulation> mesh, int degree)
  : mesh_(std::move(mesh)), fe_(degree)
{
  const auto &m = *mesh_;
  const int p = degree, nn = fe_.num_nodes();
  vertex_dof_.assign(m.num_vertices(), -1);
  Index next = 0;
  for (Index v = 0; v < m.num_vertices(); v++)
  {
    if (!m.is_boundary_vertex(v))
    {
      vertex_dof_[v] = next++;
    }
  }
  num_vertex_dofs_ = next;
  std::vector<Index> edge_first(m.num_edges(), -1);
  if (p > 1)
  {
    for (Index k = 0; k < m.num_edges(); k++)
    {
      if (!m.is_boundary_edge(k))
      {
        edge_first[k] = next;
        next += p - 1;
      }
    }
  }
  dofs_.assign(static_cast<std::size_t>(m.num_elements()) * nn, -1);
  for (Index e = 0; e < m.num_elements(); e++)
  {
    Index *d = dofs_.data() + static_cast<std::size_t>(e) * nn;
    const auto &el = m.element(e);
    for (int a = 0; a < 3; a++)
    {
      d[a] = vertex_dof_[el[a]];
    }
    for (int i = 0; i < 3 && p > 1; i++)
    {
      const Index k = m.element_edge(e, i);
      if (edge_first[k] < 0)
      {
        continue;
      }
      // Local nodes run from local vertex (i+1)%3 to (i+2)%3; global ones from the smaller
      // vertex index to the larger.
      const bool forward = el[(i + 1) % 3] < el[(i + 2) % 3];
      for (int t = 0; t < p - 1; t++)
      {
        d[fe_.edge_offset(i) + t] = edge_first[k] + (forward ? t : p - 2 - t);
      }
    }
    for (int t = 0; t < fe_.num_interior(); t++)
    {
      d[fe_.interior_offset() + t] = next++;
    }
  }
  size_ = next;
}

double FeSpace::evaluate(std::span<const double> x, Index e,
                         const std::array<double, 3> &lambda) const
{
  std::vector<double> phi(fe_.num_nodes());
  fe_.evaluate(lambda, phi.data());
  const auto d = element_dofs(e);
  double v = 0.0;
  for (int i = 0; i < fe_.num_nodes(); i++)
  {
    if (d[i] >= 0)
    {
      v += x[d[i]] * phi[i];
    }
  }
  return v;
}

Point FeSpace::evaluate_gradient(std::span<const double> x, Index e,
                                 const std::array<double, 3> &lambda) const
{
  std::vector<std::array<double, 3>> g(fe_.num_nodes());
  fe_.evaluate_gradients(lambda, g.data());
  const auto geo = element_geometry(*mesh_, e);
  const auto d = element_dofs(e);
  Point grad{0.0, 0.0};
  for (int i = 0; i < fe_.num_nodes(); i++)
  {
    if (d[i] < 0)
    {
      continue;
    }
    for (int a = 0; a < 3; a++)
    {
      grad.x += x[d[i]] * g[i][a] * geo.grad_lambda[a].x;
      grad.y += x[d[i]] * g[i][a] * geo.grad_lambda[a].y;
    }
  }
  return grad;
}

SparseOperator FeSpace::sparsity() const
{
  const Index ne = mesh_->num_elements();
  const int nn = fe_.num_nodes();
  // DOF -> elements in CSR form.
  std::vector<Index> ptr(static_cast<std::size_t>(size_) + 1, 0);
  for (Index d : dofs_)
  {
    if (d >= 0)
    {
      ptr[d + 1]++;
    }
  }
  for (Index i = 0; i < size_; i++)
  {
    ptr[i + 1] += ptr[i];
  }
  std::vector<Index> adj(ptr.back()), fill(ptr.begin(), ptr.end() - 1);
  for (Index e = 0; e < ne; e++)
  {
    for (Index d : element_dofs(e))
    {
      if (d >= 0)
      {
        adj[fill[d]++] = e;
      }
    }
  }
  std::vector<Index> row_ptr(static_cast<std::size_t>(size_) + 1, 0), col_idx, row;
  col_idx.reserve(static_cast<std::size_t>(size_) * (nn + 6));
  for (Index i = 0; i < size_; i++)
  {
    row.clear();
    for (Index q = ptr[i]; q < ptr[i + 1]; q++)
    {
      for (Index d : element_dofs(adj[q]))
      {
        if (d >= 0)
        {
          row.push_back(d);
        }
      }
    }
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    col_idx.insert(col_idx.end(), row.begin(), row.end());
    row_ptr[i + 1] = static_cast<Index>(col_idx.size());
  }
  std::vector<double> values(col_idx.size(), 0.0);
  return SparseOperator(size_, size_, std::move(row_ptr), std::move(col_idx), std::move(values));
}

namespace
{

struct AssemblyFlags
{
  bool A = false, B = false, rhs = false;
};

void compute_local(const FeSpace &space, const PdeData &data, Index e, const Tabulation &tab,
                   AssemblyFlags flags, LocalSystem &local)
{
  const auto &mesh = space.mesh();
  const int nn = space.element().num_nodes();
  local.num_nodes = nn;
  local.A.assign(flags.A || flags.B ? nn * nn : 0, 0.0);
  local.B.assign(flags.A || flags.B ? nn * nn : 0, 0.0);
  local.F.assign(flags.rhs ? nn : 0, 0.0);
  const auto geo = element_geometry(mesh, e);
  std::vector<Point> grad(nn);
  for (int q = 0; q < tab.num_points; q++)
  {
    const double w = tab.weights[q] * geo.area;
    const Point x = map_to_physical(mesh, e, tab.points[q]);
    const double *phi = &tab.values[q * nn];
    for (int i = 0; i < nn; i++)
    {
      const auto &g = tab.gradients[q * nn + i];
      grad[i] = {g[0] * geo.grad_lambda[0].x + g[1] * geo.grad_lambda[1].x +
                     g[2] * geo.grad_lambda[2].x,
                 g[0] * geo.grad_lambda[0].y + g[1] * geo.grad_lambda[1].y +
                     g[2] * geo.grad_lambda[2].y};
    }
    if (flags.A || flags.B)
    {
      const Matrix2 K = data.K(e, x);
      const Point b = flags.B ? data.b(e, x) : Point{};
      const double c = flags.B ? data.c(e, x) : 0.0;
      for (int j = 0; j < nn; j++)
      {
        const Point kg{K.xx * grad[j].x + K.xy * grad[j].y, K.xy * grad[j].x + K.yy * grad[j].y};
        const double bg = b.x * grad[j].x + b.y * grad[j].y;
        for (int i = 0; i < nn; i++)
        {
          const double a = kg.x * grad[i].x + kg.y * grad[i].y;
          local.A[i * nn + j] += w * a;
          local.B[i * nn + j] += w * (a + (bg + c * phi[j]) * phi[i]);
        }
      }
    }
    if (flags.rhs)
    {
      const double f = data.f(e, x);
      const Point fv = data.fvec(e, x);
      for (int i = 0; i < nn; i++)
      {
        local.F[i] += w * (f * phi[i] + fv.x * grad[i].x + fv.y * grad[i].y);
      }
    }
  }
}

Tabulation volume_tabulation(const FeSpace &space)
{
  return tabulate(space.element(), triangle_rule(2 * space.degree() + 2));
}

GalerkinSystem assemble(const FeSpace &space, const PdeData &data, AssemblyFlags flags)
{
  const auto &mesh = space.mesh();
  const int nn = space.element().num_nodes();
  const auto tab = volume_tabulation(space);
  GalerkinSystem sys;
  SparseOperator pattern;
  if (flags.A || flags.B)
  {
    pattern = space.sparsity();
    if (flags.A)
    {
      sys.A = pattern;
    }
    if (flags.B)
    {
      sys.B = pattern;
    }
  }
  if (flags.rhs)
  {
    sys.d.assign(space.size(), 0.0);
  }
  LocalSystem local;
  std::vector<std::ptrdiff_t> pos(nn * nn);
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    compute_local(space, data, e, tab, flags, local);
    const auto dofs = space.element_dofs(e);
    if (flags.A || flags.B)
    {
      for (int i = 0; i < nn; i++)
      {
        for (int j = 0; j < nn; j++)
        {
          pos[i * nn + j] = dofs[i] >= 0 && dofs[j] >= 0 ? pattern.find(dofs[i], dofs[j]) : -1;
        }
      }
      for (int t = 0; t < nn * nn; t++)
      {
        if (pos[t] < 0)
        {
          continue;
        }
        if (flags.A)
        {
          sys.A.values()[pos[t]] += local.A[t];
        }
        if (flags.B)
        {
          sys.B.values()[pos[t]] += local.B[t];
        }
      }
    }
    if (flags.rhs)
    {
      for (int i = 0; i < nn; i++)
      {
        if (dofs[i] >= 0)
        {
          sys.d[dofs[i]] += local.F[i];
        }
      }
    }
  }
  return sys;
}

}  // namespace

LocalSystem local_system(const FeSpace &space, const PdeData &data, Index e)
{
  LocalSystem local;
  compute_local(space, data, e, volume_tabulation(space), {.A = true, .B = true, .rhs = true},
                local);
  return local;
}

SparseOperator assemble_B(const FeSpace &space, const PdeData &data)
{
  return std::move(assemble(space, data, {.B = true}).B);
}

SparseOperator assemble_A(const FeSpace &space, const PdeData &data)
{
  return std::move(assemble(space, data, {.A = true}).A);
}

Vector assemble_rhs(const FeSpace &space, const PdeData &data)
{
  return std::move(assemble(space, data, {.rhs = true}).d);
}

GalerkinSystem assemble_system(const FeSpace &space, const PdeData &data)
{
  return assemble(space, data, {.A = true, .B = true, .rhs = true});
}

SparseOperator prolongation(const FeSpace &coarse, const FeSpace &fine)
{
  const auto &cm = coarse.mesh(), &fm = fine.mesh();
  const bool same = &cm == &fm;
  if (!same && (!fm.has_lineage() || fm.parent_num_elements() != cm.num_elements() ||
                fm.parent_num_vertices() != cm.num_vertices()))
  {
    throw std::invalid_argument("prolongation: fine mesh is not a refinement of the coarse mesh");
  }
  if (coarse.degree() > fine.degree())
  {
    throw std::invalid_argument("prolongation: coarse degree exceeds fine degree");
  }
  const auto &cfe = coarse.element(), &ffe = fine.element();
  const int cn = cfe.num_nodes(), fn = ffe.num_nodes();
  std::vector<std::uint8_t> done(fine.size(), 0);
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(fine.size()) * (coarse.degree() == 1 ? 3 : cn));
  std::vector<double> phi(cn);
  for (Index e = 0; e < fm.num_elements(); e++)
  {
    const auto fd = fine.element_dofs(e);
    const Index parent = same ? e : fm.parent(e);
    const auto cd = coarse.element_dofs(parent);
    const auto &pel = cm.element(parent);
    const Point &a = cm.vertex(pel[0]), &b = cm.vertex(pel[1]), &c = cm.vertex(pel[2]);
    const double det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    for (int i = 0; i < fn; i++)
    {
      const Index row = fd[i];
      if (row < 0 || done[row])
      {
        continue;
      }
      done[row] = 1;
      const Point x = map_to_physical(fm, e, ffe.node_barycentric(i));
      const double l1 = ((x.x - a.x) * (c.y - a.y) - (x.y - a.y) * (c.x - a.x)) / det;
      const double l2 = ((b.x - a.x) * (x.y - a.y) - (b.y - a.y) * (x.x - a.x)) / det;
      cfe.evaluate({1.0 - l1 - l2, l1, l2}, phi.data());
      for (int j = 0; j < cn; j++)
      {
        if (cd[j] >= 0 && std::abs(phi[j]) > 1e-13)
        {
          triplets.push_back({row, cd[j], phi[j]});
        }
      }
    }
  }
  return SparseOperator::from_triplets(fine.size(), coarse.size(), std::move(triplets));
}

Vector galerkin_solve_direct(const SparseOperator &B, std::span<const double> d)
{
  if (B.rows() != B.cols() || static_cast<Index>(d.size()) != B.rows())
  {
    throw std::invalid_argument("galerkin_solve_direct: dimension mismatch");
  }
  const Index n = B.rows();
  if (n == 0)
  {
    return {};
  }
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> M(n, n);
  std::vector<Eigen::Triplet<double, int>> entries;
  entries.reserve(B.nnz());
  const auto ptr = B.row_ptr();
  const auto idx = B.col_idx();
  const auto val = B.values();
  for (Index i = 0; i < n; i++)
  {
    for (Index p = ptr[i]; p < ptr[i + 1]; p++)
    {
      entries.emplace_back(i, idx[p], val[p]);
    }
  }
  M.setFromTriplets(entries.begin(), entries.end());
  M.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success)
  {
    throw std::runtime_error("galerkin_solve_direct: matrix is singular");
  }
  const Eigen::Map<const Eigen::VectorXd> rhs(d.data(), n);
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite())
  {
    throw std::runtime_error("galerkin_solve_direct: solve failed");
  }
  return Vector(sol.data(), sol.data() + n);
}

double energy_norm(const SparseOperator &A, std::span<const double> x)
{
  const Vector ax = spmv(A, x);
  return std::sqrt(std::max(0.0, dot(ax, x)));
}

}  // namespace afem
