// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "afem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace afem
{

namespace
{

double signed_area(const Point &a, const Point &b, const Point &c)
{
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double squared_length(const Point &a, const Point &b)
{
  const double dx = b.x - a.x, dy = b.y - a.y;
  return dx * dx + dy * dy;
}

Edge sorted_edge(Index a, Index b)
{
  return a < b ? Edge{a, b} : Edge{b, a};
}

// Barycentric coordinates of p with respect to triangle (a, b, c).
std::array<double, 3> barycentric(const Point &a, const Point &b, const Point &c, const Point &p)
{
  const double det = signed_area(a, b, c);
  return {signed_area(p, b, c) / det, signed_area(a, p, c) / det, signed_area(a, b, p) / det};
}

bool contains(const Triangulation &mesh, Index e, const Point &p, double tol)
{
  const auto &el = mesh.element(e);
  const auto lam = barycentric(mesh.vertex(el[0]), mesh.vertex(el[1]), mesh.vertex(el[2]), p);
  return lam[0] >= -tol && lam[1] >= -tol && lam[2] >= -tol;
}

Triangulation square_mesh(int n, bool criss_cross)
{
  if (n < 1)
  {
    throw std::invalid_argument("square mesh needs at least one cell per direction");
  }
  std::vector<Point> vertices;
  const double h = 1.0 / n;
  for (int j = 0; j <= n; j++)
  {
    for (int i = 0; i <= n; i++)
    {
      vertices.push_back({i * h, j * h});
    }
  }
  auto id = [n](int i, int j) { return static_cast<Index>(j * (n + 1) + i); };
  std::vector<Element> elements;
  for (int j = 0; j < n; j++)
  {
    for (int i = 0; i < n; i++)
    {
      const Index sw = id(i, j), se = id(i + 1, j), ne = id(i + 1, j + 1), nw = id(i, j + 1);
      if (criss_cross)
      {
        const auto c = static_cast<Index>(vertices.size());
        vertices.push_back({(i + 0.5) * h, (j + 0.5) * h});
        elements.push_back({sw, se, c});
        elements.push_back({se, ne, c});
        elements.push_back({ne, nw, c});
        elements.push_back({nw, sw, c});
      }
      else
      {
        elements.push_back({sw, se, ne});
        elements.push_back({sw, ne, nw});
      }
    }
  }
  auto ref = longest_edge_reference(vertices, elements);
  return Triangulation(std::move(vertices), std::move(elements), std::move(ref));
}

}  // namespace

Triangulation::Triangulation(std::vector<Point> vertices, std::vector<Element> elements,
                             std::vector<std::uint8_t> ref_edges)
  : vertices_(std::move(vertices)), elements_(std::move(elements)),
    ref_edges_(std::move(ref_edges)), vertex_level_(vertices_.size(), 0)
{
  if (ref_edges_.size() != elements_.size())
  {
    throw std::invalid_argument("one reference edge per element required");
  }
  for (std::size_t e = 0; e < elements_.size(); e++)
  {
    for (Index v : elements_[e])
    {
      if (v < 0 || v >= num_vertices())
      {
        throw std::invalid_argument("element " + std::to_string(e) +
                                    " references an invalid vertex");
      }
    }
    if (ref_edges_[e] > 2)
    {
      throw std::invalid_argument("reference edge index out of range in element " +
                                  std::to_string(e));
    }
    const auto &el = elements_[e];
    if (!(signed_area(vertices_[el[0]], vertices_[el[1]], vertices_[el[2]]) > 0.0))
    {
      throw std::invalid_argument("element " + std::to_string(e) +
                                  " is degenerate or negatively oriented");
    }
  }
  build_topology();
}

void Triangulation::build_topology()
{
  struct Slot
  {
    Edge key;
    Index element;
    int local;
  };
  std::vector<Slot> slots;
  slots.reserve(3 * elements_.size());
  for (Index e = 0; e < num_elements(); e++)
  {
    const auto &el = elements_[e];
    for (int i = 0; i < 3; i++)
    {
      slots.push_back({sorted_edge(el[(i + 1) % 3], el[(i + 2) % 3]), e, i});
    }
  }
  std::sort(slots.begin(), slots.end(), [](const Slot &a, const Slot &b) {
    if (a.key != b.key)
    {
      return a.key < b.key;
    }
    return a.element < b.element;
  });

  edges_.clear();
  edge_elements_.clear();
  element_edges_.assign(elements_.size(), {-1, -1, -1});
  for (std::size_t s = 0; s < slots.size();)
  {
    std::size_t t = s;
    while (t < slots.size() && slots[t].key == slots[s].key)
    {
      t++;
    }
    if (t - s > 2)
    {
      throw std::invalid_argument("edge shared by more than two elements");
    }
    const auto k = static_cast<Index>(edges_.size());
    edges_.push_back(slots[s].key);
    edge_elements_.push_back({slots[s].element, t - s == 2 ? slots[s + 1].element : -1});
    for (std::size_t u = s; u < t; u++)
    {
      element_edges_[slots[u].element][slots[u].local] = k;
    }
    s = t;
  }

  boundary_vertex_.assign(vertices_.size(), 0);
  for (Index k = 0; k < num_edges(); k++)
  {
    if (edge_elements_[k][1] < 0)
    {
      boundary_vertex_[edges_[k][0]] = 1;
      boundary_vertex_[edges_[k][1]] = 1;
    }
  }

  vertex_element_ptr_.assign(vertices_.size() + 1, 0);
  for (const auto &el : elements_)
  {
    for (Index v : el)
    {
      vertex_element_ptr_[v + 1]++;
    }
  }
  std::partial_sum(vertex_element_ptr_.begin(), vertex_element_ptr_.end(),
                   vertex_element_ptr_.begin());
  vertex_element_idx_.resize(vertex_element_ptr_.back());
  std::vector<Index> fill(vertex_element_ptr_.begin(), vertex_element_ptr_.end() - 1);
  for (Index e = 0; e < num_elements(); e++)
  {
    for (Index v : elements_[e])
    {
      vertex_element_idx_[fill[v]++] = e;
    }
  }
}

double Triangulation::area(Index e) const
{
  const auto &el = elements_[e];
  return signed_area(vertices_[el[0]], vertices_[el[1]], vertices_[el[2]]);
}

double Triangulation::diameter(Index e) const
{
  const auto &el = elements_[e];
  return std::sqrt(std::max({squared_length(vertices_[el[0]], vertices_[el[1]]),
                             squared_length(vertices_[el[1]], vertices_[el[2]]),
                             squared_length(vertices_[el[2]], vertices_[el[0]])}));
}

Point Triangulation::centroid(Index e) const
{
  const auto &el = elements_[e];
  return {(vertices_[el[0]].x + vertices_[el[1]].x + vertices_[el[2]].x) / 3.0,
          (vertices_[el[0]].y + vertices_[el[1]].y + vertices_[el[2]].y) / 3.0};
}

double Triangulation::total_area() const
{
  double sum = 0.0;
  for (Index e = 0; e < num_elements(); e++)
  {
    sum += area(e);
  }
  return sum;
}

std::string Triangulation::check_conformity() const
{
  // A hanging node shows up as a vertex with two collinear boundary edges pointing in the
  // same direction, or as a vertex with more than two boundary edges.
  std::vector<std::vector<Index>> boundary_edges(vertices_.size());
  for (Index k = 0; k < num_edges(); k++)
  {
    if (is_boundary_edge(k))
    {
      boundary_edges[edges_[k][0]].push_back(k);
      boundary_edges[edges_[k][1]].push_back(k);
    }
  }
  for (Index v = 0; v < num_vertices(); v++)
  {
    const auto &be = boundary_edges[v];
    if (be.empty())
    {
      continue;
    }
    if (be.size() != 2)
    {
      return "vertex " + std::to_string(v) + " has " + std::to_string(be.size()) +
             " boundary edges";
    }
    auto direction = [&](Index k) {
      const Index w = edges_[k][0] == v ? edges_[k][1] : edges_[k][0];
      const double dx = vertices_[w].x - vertices_[v].x, dy = vertices_[w].y - vertices_[v].y;
      const double len = std::hypot(dx, dy);
      return Point{dx / len, dy / len};
    };
    const Point d0 = direction(be[0]), d1 = direction(be[1]);
    const double cross = d0.x * d1.y - d0.y * d1.x;
    const double dot = d0.x * d1.x + d0.y * d1.y;
    if (std::abs(cross) < 1e-12 && dot > 0.0)
    {
      return "hanging node next to vertex " + std::to_string(v);
    }
  }
  for (Index e = 0; e < num_elements(); e++)
  {
    if (!(area(e) > 0.0))
    {
      return "element " + std::to_string(e) + " has non-positive area";
    }
  }
  return {};
}

bool Triangulation::operator==(const Triangulation &other) const
{
  if (vertices_.size() != other.vertices_.size() || elements_ != other.elements_ ||
      ref_edges_ != other.ref_edges_)
  {
    return false;
  }
  for (std::size_t v = 0; v < vertices_.size(); v++)
  {
    if (vertices_[v].x != other.vertices_[v].x || vertices_[v].y != other.vertices_[v].y)
    {
      return false;
    }
  }
  return true;
}

std::vector<std::uint8_t> longest_edge_reference(std::span<const Point> vertices,
                                                 std::span<const Element> elements)
{
  std::vector<std::uint8_t> ref(elements.size(), 0);
  for (std::size_t e = 0; e < elements.size(); e++)
  {
    const auto &el = elements[e];
    int best = -1;
    double best_len = -1.0;
    for (int i = 0; i < 3; i++)
    {
      const double len = squared_length(vertices[el[(i + 1) % 3]], vertices[el[(i + 2) % 3]]);
      const bool longer = len > best_len * (1.0 + 1e-12);
      const bool tie = !longer && len >= best_len * (1.0 - 1e-12);
      if (best < 0 || longer || (tie && el[i] < el[best]))
      {
        best = i;
        best_len = std::max(len, best_len);
      }
    }
    ref[e] = static_cast<std::uint8_t>(best);
  }
  return ref;
}

Triangulation initial_mesh_lshape()
{
  // Grid vertices with spacing 1/2 on [-1,1]^2 minus the open lower-right quadrant, followed
  // by the centres of the twelve squares.
  std::vector<Point> vertices;
  std::vector<std::array<Index, 5>> grid(5);
  for (int j = 0; j <= 4; j++)
  {
    for (int i = 0; i <= 4; i++)
    {
      const double x = -1.0 + 0.5 * i, y = -1.0 + 0.5 * j;
      if (x > 0.0 && y < 0.0)
      {
        grid[j][i] = -1;
        continue;
      }
      grid[j][i] = static_cast<Index>(vertices.size());
      vertices.push_back({x, y});
    }
  }
  std::vector<Element> elements;
  for (int j = 0; j < 4; j++)
  {
    for (int i = 0; i < 4; i++)
    {
      if (i >= 2 && j < 2)
      {
        continue;
      }
      const Index sw = grid[j][i], se = grid[j][i + 1], ne = grid[j + 1][i + 1],
                  nw = grid[j + 1][i];
      const auto c = static_cast<Index>(vertices.size());
      vertices.push_back({-1.0 + 0.5 * i + 0.25, -1.0 + 0.5 * j + 0.25});
      elements.push_back({sw, se, c});
      elements.push_back({se, ne, c});
      elements.push_back({ne, nw, c});
      elements.push_back({nw, sw, c});
    }
  }
  auto ref = longest_edge_reference(vertices, elements);
  return Triangulation(std::move(vertices), std::move(elements), std::move(ref));
}

Triangulation criss_cross_square(int n)
{
  return square_mesh(n, true);
}

Triangulation structured_square(int n)
{
  return square_mesh(n, false);
}

Triangulation refine(const Triangulation &mesh, std::span<const Index> marked)
{
  std::vector<std::uint8_t> is_marked(mesh.num_elements(), 0);
  for (Index e : marked)
  {
    if (e < 0 || e >= mesh.num_elements())
    {
      throw std::invalid_argument("marked element index " + std::to_string(e) +
                                  " out of range");
    }
    if (is_marked[e])
    {
      throw std::invalid_argument("element " + std::to_string(e) + " marked twice");
    }
    is_marked[e] = 1;
  }

  // Closure: every element with a bisected edge must bisect its reference edge.
  std::vector<std::uint8_t> edge_marked(mesh.num_edges(), 0);
  std::vector<Index> queue;
  auto mark_edge = [&](Index k) {
    if (!edge_marked[k])
    {
      edge_marked[k] = 1;
      queue.push_back(k);
    }
  };
  for (Index e : marked)
  {
    mark_edge(mesh.element_edge(e, mesh.ref_edge(e)));
  }
  while (!queue.empty())
  {
    const Index k = queue.back();
    queue.pop_back();
    for (Index t : mesh.edge_elements(k))
    {
      if (t >= 0)
      {
        mark_edge(mesh.element_edge(t, mesh.ref_edge(t)));
      }
    }
  }

  std::vector<Point> vertices(mesh.vertices().begin(), mesh.vertices().end());
  std::vector<Index> midpoint(mesh.num_edges(), -1);
  for (Index k = 0; k < mesh.num_edges(); k++)
  {
    if (edge_marked[k])
    {
      const auto &ed = mesh.edge(k);
      midpoint[k] = static_cast<Index>(vertices.size());
      const Point &a = mesh.vertex(ed[0]), &b = mesh.vertex(ed[1]);
      vertices.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    }
  }

  std::vector<Element> elements;
  std::vector<std::uint8_t> ref_edges;
  std::vector<Index> parents;
  elements.reserve(2 * static_cast<std::size_t>(mesh.num_elements()));
  auto emit = [&](const Element &el, std::uint8_t ref, Index parent) {
    elements.push_back(el);
    ref_edges.push_back(ref);
    parents.push_back(parent);
  };
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    const auto &el = mesh.element(e);
    const int r = mesh.ref_edge(e);
    const Index ref_k = mesh.element_edge(e, r);
    if (!edge_marked[ref_k])
    {
      emit(el, static_cast<std::uint8_t>(r), e);
      continue;
    }
    // Rotate to (c, a, b) with reference edge ab and newest vertex c.
    const Index c = el[r], a = el[(r + 1) % 3], b = el[(r + 2) % 3];
    const Index m = midpoint[ref_k];
    const Index ca = midpoint[mesh.element_edge(e, (r + 2) % 3)];
    const Index bc = midpoint[mesh.element_edge(e, (r + 1) % 3)];
    // Children (m, c, a) and (m, b, c): the new vertex is the newest, so local edge 0 is the
    // reference edge of both.
    if (ca >= 0)
    {
      emit({ca, m, c}, 0, e);
      emit({ca, a, m}, 0, e);
    }
    else
    {
      emit({m, c, a}, 0, e);
    }
    if (bc >= 0)
    {
      emit({bc, m, b}, 0, e);
      emit({bc, c, m}, 0, e);
    }
    else
    {
      emit({m, b, c}, 0, e);
    }
  }

  Triangulation fine(std::move(vertices), std::move(elements), std::move(ref_edges));
  fine.level_ = mesh.level() + 1;
  fine.vertex_level_.assign(mesh.vertex_level_.begin(), mesh.vertex_level_.end());
  fine.vertex_level_.resize(fine.vertices_.size(), fine.level_);
  fine.parents_ = std::move(parents);
  fine.parent_num_elements_ = mesh.num_elements();
  fine.parent_num_vertices_ = mesh.num_vertices();
  if (auto msg = fine.check_conformity(); !msg.empty())
  {
    throw std::logic_error("refinement produced a non-conforming mesh: " + msg);
  }
  return fine;
}

Triangulation refine_uniform(const Triangulation &mesh)
{
  MarkSet all(mesh.num_elements());
  std::iota(all.begin(), all.end(), 0);
  return refine(mesh, all);
}

MarkSet vertex_patch(const Triangulation &mesh, Index z)
{
  if (z < 0 || z >= mesh.num_vertices())
  {
    throw std::invalid_argument("vertex index " + std::to_string(z) + " out of range");
  }
  const auto patch = mesh.vertex_elements(z);
  return {patch.begin(), patch.end()};
}

std::vector<Index> changed_vertices(const Triangulation &previous, const Triangulation &mesh)
{
  if (&previous == &mesh || previous == mesh)
  {
    return {};
  }
  if (!mesh.has_lineage() || mesh.parent_num_elements() != previous.num_elements() ||
      mesh.parent_num_vertices() != previous.num_vertices())
  {
    throw std::invalid_argument("mesh is not a refinement of the given previous mesh");
  }
  std::vector<Index> children(previous.num_elements(), 0);
  for (Index p : mesh.parents())
  {
    children[p]++;
  }
  std::vector<std::uint8_t> changed(mesh.num_vertices(), 0);
  for (Index e = 0; e < previous.num_elements(); e++)
  {
    if (children[e] > 1)
    {
      for (Index v : previous.element(e))
      {
        changed[v] = 1;
      }
    }
  }
  std::fill(changed.begin() + previous.num_vertices(), changed.end(), 1);
  std::vector<Index> result;
  for (Index v = 0; v < mesh.num_vertices(); v++)
  {
    if (changed[v])
    {
      result.push_back(v);
    }
  }
  return result;
}

Triangulation infer_lineage(const Triangulation &coarse, const Triangulation &fine)
{
  if (fine.num_vertices() < coarse.num_vertices())
  {
    throw std::invalid_argument("fine mesh has fewer vertices than the coarse mesh");
  }
  for (Index v = 0; v < coarse.num_vertices(); v++)
  {
    if (coarse.vertex(v).x != fine.vertex(v).x || coarse.vertex(v).y != fine.vertex(v).y)
    {
      throw std::invalid_argument("coarse vertices are not the leading fine vertices");
    }
  }
  constexpr double tol = 1e-10;
  std::vector<Index> parents(fine.num_elements(), -1);
  for (Index e = 0; e < fine.num_elements(); e++)
  {
    const auto &el = fine.element(e);
    const Point c = fine.centroid(e);
    auto inside = [&](Index t) {
      return contains(coarse, t, c, tol) && contains(coarse, t, fine.vertex(el[0]), tol) &&
             contains(coarse, t, fine.vertex(el[1]), tol) &&
             contains(coarse, t, fine.vertex(el[2]), tol);
    };
    for (Index v : el)
    {
      if (v >= coarse.num_vertices() || parents[e] >= 0)
      {
        continue;
      }
      for (Index t : coarse.vertex_elements(v))
      {
        if (inside(t))
        {
          parents[e] = t;
          break;
        }
      }
    }
    for (Index t = 0; parents[e] < 0 && t < coarse.num_elements(); t++)
    {
      if (inside(t))
      {
        parents[e] = t;
      }
    }
    if (parents[e] < 0)
    {
      throw std::invalid_argument("fine element " + std::to_string(e) +
                                  " is not contained in any coarse element");
    }
  }
  Triangulation result(std::vector<Point>(fine.vertices().begin(), fine.vertices().end()),
                       std::vector<Element>(fine.elements().begin(), fine.elements().end()),
                       std::vector<std::uint8_t>(fine.ref_edges_));
  result.level_ = coarse.level() + 1;
  result.vertex_level_.assign(coarse.vertex_level_.begin(), coarse.vertex_level_.end());
  result.vertex_level_.resize(result.vertices_.size(), result.level_);
  result.parents_ = std::move(parents);
  result.parent_num_elements_ = coarse.num_elements();
  result.parent_num_vertices_ = coarse.num_vertices();
  return result;
}

void write_mesh(std::ostream &os, const Triangulation &mesh)
{
  os << "d=2 nv=" << mesh.num_vertices() << " ne=" << mesh.num_elements() << '\n';
  os << std::setprecision(17);
  for (Index v = 0; v < mesh.num_vertices(); v++)
  {
    os << mesh.vertex(v).x << ' ' << mesh.vertex(v).y << ' '
       << (mesh.is_boundary_vertex(v) ? 1 : 0) << '\n';
  }
  for (Index e = 0; e < mesh.num_elements(); e++)
  {
    const auto &el = mesh.element(e);
    os << el[0] << ' ' << el[1] << ' ' << el[2] << ' ' << int(mesh.ref_edge(e)) << '\n';
  }
}

Triangulation read_mesh(std::istream &is)
{
  std::string header;
  if (!std::getline(is, header))
  {
    throw std::runtime_error("mesh file: missing header");
  }
  int d = 0;
  long nv = -1, ne = -1;
  if (std::sscanf(header.c_str(), "d=%d nv=%ld ne=%ld", &d, &nv, &ne) != 3 || d != 2 ||
      nv < 3 || ne < 1)
  {
    throw std::runtime_error("mesh file: malformed header '" + header + "'");
  }
  std::vector<Point> vertices(nv);
  std::vector<int> flags(nv);
  for (long v = 0; v < nv; v++)
  {
    if (!(is >> vertices[v].x >> vertices[v].y >> flags[v]))
    {
      throw std::runtime_error("mesh file: truncated vertex list at vertex " +
                               std::to_string(v));
    }
  }
  std::vector<Element> elements(ne);
  std::vector<std::uint8_t> ref(ne);
  for (long e = 0; e < ne; e++)
  {
    int r = 0;
    if (!(is >> elements[e][0] >> elements[e][1] >> elements[e][2] >> r))
    {
      throw std::runtime_error("mesh file: truncated element list at element " +
                               std::to_string(e));
    }
    if (r < 0 || r > 2)
    {
      throw std::runtime_error("mesh file: reference edge out of range at element " +
                               std::to_string(e));
    }
    ref[e] = static_cast<std::uint8_t>(r);
  }
  Triangulation mesh(std::move(vertices), std::move(elements), std::move(ref));
  if (auto msg = mesh.check_conformity(); !msg.empty())
  {
    throw std::runtime_error("mesh file: " + msg);
  }
  for (Index v = 0; v < mesh.num_vertices(); v++)
  {
    if ((flags[v] != 0) != mesh.is_boundary_vertex(v))
    {
      throw std::runtime_error("mesh file: boundary flag of vertex " + std::to_string(v) +
                               " disagrees with the topology");
    }
  }
  return mesh;
}

void write_mesh_file(const std::string &path, const Triangulation &mesh)
{
  std::ofstream os(path);
  if (!os)
  {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  write_mesh(os, mesh);
}

Triangulation read_mesh_file(const std::string &path)
{
  std::ifstream is(path);
  if (!is)
  {
    throw std::runtime_error("cannot open mesh file '" + path + "'");
  }
  return read_mesh(is);
}

}  // namespace afem
