//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <functional>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fracopt/mesh.hpp"

namespace fracopt {

using Vector = Eigen::VectorXd;
/// Symmetric sparse matrix over interior dofs. Both triangles are stored so
/// that row access gives matrix-vector products and row sums directly.
using SparseSymMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

using PointFunction = std::function<double(const Point &)>;

/// Continuous piecewise linear function vanishing on the boundary; one value
/// per interior dof.
struct NodalFunction {
  MeshPtr mesh;
  Vector values;

  NodalFunction() = default;
  NodalFunction(MeshPtr m, Vector v);
  static NodalFunction zero(MeshPtr m);
  /// Value at vertex v (zero on the boundary).
  double at_vertex(std::size_t v) const;
  /// Point evaluation through the containing cell.
  double operator()(const Point &x) const;
};

/// Piecewise constant function, one value per cell.
struct CellwiseFunction {
  MeshPtr mesh;
  Vector values;

  CellwiseFunction() = default;
  CellwiseFunction(MeshPtr m, Vector v);
  static CellwiseFunction zero(MeshPtr m);
};

/// Nodal interpolant of f; boundary values are dropped (the functions in this
/// library vanish on the boundary).
NodalFunction interpolate(MeshPtr mesh, const PointFunction &f);

/// Values of a nodal function at all vertices, zeros on the boundary.
Vector vertex_values(const NodalFunction &v);

SparseSymMatrix assemble_stiffness(const Mesh &mesh);
SparseSymMatrix assemble_mass(const Mesh &mesh);

/// Row sums of a mass matrix; returns the diagonal.
Vector lump_mass(const SparseSymMatrix &mass);

/// Vertex-rule lumped mass (M_h)_ii = int phi_i, i.e. the row sums of the
/// mass matrix before boundary rows and columns are removed. Equals the grid
/// cell volume 1/m^n at every interior vertex of a structured mesh.
Vector lumped_mass(const Mesh &mesh);

/// Load vectors (f, phi_i) over interior dofs.
Vector assemble_load(const NodalFunction &f);
Vector assemble_load(const CellwiseFunction &f);
/// Pointwise data is integrated with a degree-2 cell rule (or `degree`).
Vector assemble_load(const Mesh &mesh, const PointFunction &f, int degree = 2);

/// L2 projection onto piecewise constants (cell means).
CellwiseFunction project_p0(const NodalFunction &v);
CellwiseFunction project_p0(MeshPtr mesh, const PointFunction &f,
                            int degree = 4);

double l2_inner(const NodalFunction &u, const NodalFunction &v);
double l2_inner(const CellwiseFunction &u, const CellwiseFunction &v);
double l2_norm(const NodalFunction &v);
double l2_norm(const CellwiseFunction &v);
double h1_seminorm(const NodalFunction &v);

/// Exact prolongation of a P1 function to a nested finer structured mesh.
NodalFunction prolongate(const NodalFunction &coarse, MeshPtr fine);
/// Cellwise prolongation of a P0 function to a nested finer mesh.
CellwiseFunction prolongate(const CellwiseFunction &coarse, MeshPtr fine);

/// Sparse P1 prolongation between interior dofs of nested structured meshes
/// with fine.cells_per_side() == 2 * coarse.cells_per_side().
SparseSymMatrix p1_prolongation(const Mesh &coarse, const Mesh &fine);

/// Gradients of the barycentric coordinates of cell c (rows), dim columns.
Eigen::Matrix<double, 4, 3> barycentric_gradients(const Mesh &mesh,
                                                   std::size_t c);

/// Physical coordinates of a barycentric point of cell c.
Point map_to_cell(const Mesh &mesh, std::size_t c,
                  const std::array<double, 4> &lambda);

void require_same_mesh(const MeshPtr &a, const MeshPtr &b);

} // namespace fracopt
