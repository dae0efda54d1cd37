//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace fracopt {

using Point = std::array<double, 3>;
using Cell = std::array<int, 4>;

/// Location of a point inside a mesh: the containing cell and the barycentric
/// coordinates with respect to its vertices (only the first dim+1 are used).
struct CellLocation {
  int cell = -1;
  std::array<double, 4> barycentric {};
};

/// Conforming simplicial triangulation of the unit square (n = 2) or unit
/// cube (n = 3). Every grid square/cube of the structured m^n grid is split
/// along its main diagonal (Kuhn triangulation), so the meshes obtained for
/// m, 2m, 4m, ... are nested.
///
/// Vertices are numbered lexicographically with x running fastest; interior
/// degrees of freedom inherit that ordering. Immutable after construction.
class Mesh {
public:
  int dim() const noexcept { return dim_; }
  int cells_per_side() const noexcept { return m_; }
  int refinement_level() const noexcept { return level_; }

  /// Length of the longest edge.
  double h() const noexcept { return h_; }
  /// Side length of the underlying structured grid, 1/m.
  double grid_spacing() const noexcept { return 1.0 / m_; }

  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_cells() const noexcept { return cells_.size(); }
  std::size_t num_dofs() const noexcept { return vertex_of_dof_.size(); }
  int vertices_per_cell() const noexcept { return dim_ + 1; }

  const Point &vertex(std::size_t v) const { return vertices_[v]; }
  const Cell &cell(std::size_t c) const { return cells_[c]; }
  std::span<const Point> vertices() const noexcept { return vertices_; }
  std::span<const Cell> cells() const noexcept { return cells_; }

  bool on_boundary(std::size_t v) const { return boundary_[v] != 0; }
  /// Interior dof index of a vertex, -1 on the boundary.
  int dof_of_vertex(std::size_t v) const { return dof_of_vertex_[v]; }
  int vertex_of_dof(std::size_t d) const { return vertex_of_dof_[d]; }

  double cell_volume(std::size_t c) const;
  Point cell_centroid(std::size_t c) const;

  /// Vertex index of structured grid node (i, j, k).
  int grid_vertex(int i, int j, int k = 0) const noexcept;

  /// Locates x in the mesh; points outside [0,1]^n are clamped onto it.
  CellLocation locate(const Point &x) const;

  /// Builds a mesh from raw data. `cells_per_side` must describe the
  /// structured grid the vertices and cells come from.
  static std::shared_ptr<const Mesh> from_data(int dim, int cells_per_side,
                                               int level,
                                               std::vector<Point> vertices,
                                               std::vector<Cell> cells);

private:
  Mesh() = default;
  void finalize();

  int dim_ = 2;
  int m_ = 1;
  int level_ = 0;
  double h_ = 0.0;
  std::vector<Point> vertices_;
  std::vector<Cell> cells_;
  std::vector<char> boundary_;
  std::vector<int> dof_of_vertex_;
  std::vector<int> vertex_of_dof_;

  friend std::shared_ptr<const Mesh> structured_mesh(int, int, int);
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Structured Kuhn mesh of (0,1)^dim with m cells per side.
MeshPtr structured_mesh(int dim, int cells_per_side, int level = 0);

/// Right-triangle mesh of the unit square, two triangles per grid square
/// sharing the (0,0)-(1,1) diagonal. Vertex count (m+1)^2, h = sqrt(2)/m.
MeshPtr unit_square_mesh(int cells_per_side);

/// Unit cube split into m^3 cubes of 6 tetrahedra each.
MeshPtr unit_cube_mesh(int cells_per_side);

/// Bisects every edge. The child of a structured mesh is the structured mesh
/// with twice as many cells per side, nested in its parent.
MeshPtr refine_uniform(const Mesh &mesh);

/// True if every cell of `fine` lies inside a single cell of `coarse`.
bool is_nested(const Mesh &coarse, const Mesh &fine);

/// Plain-text dump: `dim n_vertices n_cells`, then one line per vertex
/// (dim coordinates), then one line per cell (0-based vertex indices).
void write_mesh(std::ostream &out, const Mesh &mesh);
MeshPtr read_mesh(std::istream &in);

} // namespace fracopt
