// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef AFEM_MESH_HPP
#define AFEM_MESH_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace afem
{

using Index = std::int32_t;

struct Point
{
  double x = 0.0;
  double y = 0.0;
};

/// Vertex triple of a triangle. Local edge i is the edge opposite local vertex i, i.e. it
/// joins vertices (i + 1) % 3 and (i + 2) % 3.
using Element = std::array<Index, 3>;

/// Sorted vertex pair identifying an edge.
using Edge = std::array<Index, 2>;

/// Set of element indices of one triangulation (sorted, without duplicates).
using MarkSet = std::vector<Index>;

//
// Conforming 2D triangulation with newest-vertex-bisection bookkeeping. Every element
// carries a reference edge; refinement lineage (parent element in the mesh this one was
// refined from) is kept for exactly one generation. Instances are immutable.
//
class Triangulation
{
public:
  /// Builds a triangulation from raw data. Elements must be positively oriented and the
  /// mesh conforming; throws std::invalid_argument otherwise.
  Triangulation(std::vector<Point> vertices, std::vector<Element> elements,
                std::vector<std::uint8_t> ref_edges);

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_elements() const { return static_cast<Index>(elements_.size()); }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }

  const Point &vertex(Index v) const { return vertices_[v]; }
  const Element &element(Index e) const { return elements_[e]; }
  std::uint8_t ref_edge(Index e) const { return ref_edges_[e]; }
  std::span<const Point> vertices() const { return vertices_; }
  std::span<const Element> elements() const { return elements_; }

  /// Global edge index of local edge i of element e.
  Index element_edge(Index e, int i) const { return element_edges_[e][i]; }
  const Edge &edge(Index k) const { return edges_[k]; }
  /// Elements adjacent to edge k; the second entry is -1 on the boundary.
  const std::array<Index, 2> &edge_elements(Index k) const { return edge_elements_[k]; }
  bool is_boundary_edge(Index k) const { return edge_elements_[k][1] < 0; }
  bool is_boundary_vertex(Index v) const { return boundary_vertex_[v] != 0; }

  /// Elements containing vertex v, in increasing index order.
  std::span<const Index> vertex_elements(Index v) const
  {
    return {vertex_element_idx_.data() + vertex_element_ptr_[v],
            vertex_element_idx_.data() + vertex_element_ptr_[v + 1]};
  }

  double area(Index e) const;
  double diameter(Index e) const;
  Point centroid(Index e) const;
  double total_area() const;

  /// Refinement generation (0 for an initial mesh).
  int level() const { return level_; }
  Index vertex_level(Index v) const { return vertex_level_[v]; }

  /// Lineage: for each element, the element of the previous mesh it was cut from. Empty for
  /// initial meshes.
  bool has_lineage() const { return !parents_.empty(); }
  Index parent(Index e) const { return parents_[e]; }
  std::span<const Index> parents() const { return parents_; }
  Index parent_num_elements() const { return parent_num_elements_; }
  Index parent_num_vertices() const { return parent_num_vertices_; }

  /// Edges with more than two elements, inverted elements and hanging nodes are reported.
  /// Returns an empty string for a conforming mesh, a diagnostic otherwise.
  std::string check_conformity() const;

  bool operator==(const Triangulation &other) const;

private:
  friend Triangulation refine(const Triangulation &, std::span<const Index>);
  friend Triangulation infer_lineage(const Triangulation &, const Triangulation &);

  void build_topology();

  std::vector<Point> vertices_;
  std::vector<Element> elements_;
  std::vector<std::uint8_t> ref_edges_;

  std::vector<Edge> edges_;
  std::vector<std::array<Index, 3>> element_edges_;
  std::vector<std::array<Index, 2>> edge_elements_;
  std::vector<std::uint8_t> boundary_vertex_;
  std::vector<Index> vertex_element_ptr_, vertex_element_idx_;

  int level_ = 0;
  std::vector<Index> vertex_level_;
  std::vector<Index> parents_;
  Index parent_num_elements_ = 0;
  Index parent_num_vertices_ = 0;
};

/// L-shaped domain (-1,1)^2 \ [0,1]x[-1,0] split into twelve squares of side 1/2, each cut
/// into four triangles by its diagonals (48 elements). Reference edge = longest edge.
Triangulation initial_mesh_lshape();

/// Unit square (0,1)^2 with an n x n grid of criss-cross cells (4 n^2 elements).
Triangulation criss_cross_square(int n);

/// Unit square (0,1)^2 with an n x n grid of cells, each split along one diagonal.
Triangulation structured_square(int n);

/// Chooses the longest edge of every element as its reference edge; ties go to the edge
/// whose opposite vertex has the smallest global index.
std::vector<std::uint8_t> longest_edge_reference(std::span<const Point> vertices,
                                                 std::span<const Element> elements);

/// Coarsest newest-vertex-bisection refinement in which every marked element is bisected
/// at least once. Old vertices keep their indices; new vertices are appended.
Triangulation refine(const Triangulation &mesh, std::span<const Index> marked);

/// Bisects every element once.
Triangulation refine_uniform(const Triangulation &mesh);

/// Elements containing vertex z.
MarkSet vertex_patch(const Triangulation &mesh, Index z);

/// Newly created vertices together with the carried-over vertices whose element patch was
/// modified by the refinement from `previous` to `mesh`. Sorted.
std::vector<Index> changed_vertices(const Triangulation &previous, const Triangulation &mesh);

/// Reconstructs lineage of `fine` with respect to `coarse` geometrically. The coarse vertices
/// must be the leading vertices of `fine`; each fine element is assigned the coarse element
/// containing it. Throws if `fine` is not nested in `coarse`.
Triangulation infer_lineage(const Triangulation &coarse, const Triangulation &fine);

/// Plain-text mesh format: `d=2 nv=<int> ne=<int>`, vertex lines `x y boundary_flag`, element
/// lines `v0 v1 v2 ref_edge`.
void write_mesh(std::ostream &os, const Triangulation &mesh);
Triangulation read_mesh(std::istream &is);
void write_mesh_file(const std::string &path, const Triangulation &mesh);
Triangulation read_mesh_file(const std::string &path);

}  // namespace afem

#endif  // AFEM_MESH_HPP
