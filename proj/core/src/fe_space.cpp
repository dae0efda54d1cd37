//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "fracopt/fe_space.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fracopt/simplex_quadrature.hpp"

namespace fracopt {

using Triplet = Eigen::Triplet<double>;

void require_same_mesh(const MeshPtr &a, const MeshPtr &b) {
  if (!a || !b)
    throw std::invalid_argument("function is not attached to a mesh");
  if (a == b)
    return;
  if (a->dim() != b->dim() || a->cells_per_side() != b->cells_per_side() ||
      a->num_vertices() != b->num_vertices())
    throw std::invalid_argument("functions live on different meshes");
}

NodalFunction::NodalFunction(MeshPtr m, Vector v)
    : mesh(std::move(m)), values(std::move(v)) {
  if (!mesh || static_cast<std::size_t>(values.size()) != mesh->num_dofs())
    throw std::invalid_argument("nodal function size != interior dof count");
}

NodalFunction NodalFunction::zero(MeshPtr m) {
  const auto n = static_cast<Eigen::Index>(m->num_dofs());
  return {std::move(m), Vector::Zero(n)};
}

double NodalFunction::at_vertex(std::size_t v) const {
  const int d = mesh->dof_of_vertex(v);
  return d < 0 ? 0.0 : values[d];
}

double NodalFunction::operator()(const Point &x) const {
  const CellLocation loc = mesh->locate(x);
  const Cell &t = mesh->cell(loc.cell);
  double val = 0.0;
  for (int i = 0; i <= mesh->dim(); ++i)
    val += loc.barycentric[i] * at_vertex(t[i]);
  return val;
}

CellwiseFunction::CellwiseFunction(MeshPtr m, Vector v)
    : mesh(std::move(m)), values(std::move(v)) {
  if (!mesh || static_cast<std::size_t>(values.size()) != mesh->num_cells())
    throw std::invalid_argument("cellwise function size != cell count");
}

CellwiseFunction CellwiseFunction::zero(MeshPtr m) {
  const auto n = static_cast<Eigen::Index>(m->num_cells());
  return {std::move(m), Vector::Zero(n)};
}

NodalFunction interpolate(MeshPtr mesh, const PointFunction &f) {
  Vector v(mesh->num_dofs());
  for (std::size_t d = 0; d < mesh->num_dofs(); ++d)
    v[d] = f(mesh->vertex(mesh->vertex_of_dof(d)));
  return {std::move(mesh), std::move(v)};
}

Vector vertex_values(const NodalFunction &v) {
  Vector out = Vector::Zero(v.mesh->num_vertices());
  for (std::size_t d = 0; d < v.mesh->num_dofs(); ++d)
    out[v.mesh->vertex_of_dof(d)] = v.values[d];
  return out;
}

Eigen::Matrix<double, 4, 3> barycentric_gradients(const Mesh &mesh,
                                                   std::size_t c) {
  const int n = mesh.dim();
  const Cell &t = mesh.cell(c);
  Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
  for (int r = 0; r < n; ++r)
    for (int q = 0; q < n; ++q)
      T(r, q) = mesh.vertex(t[q + 1])[r] - mesh.vertex(t[0])[r];
  const Eigen::Matrix3d Tinv = T.inverse();
  Eigen::Matrix<double, 4, 3> G = Eigen::Matrix<double, 4, 3>::Zero();
  for (int i = 1; i <= n; ++i)
    for (int d = 0; d < n; ++d)
      G(i, d) = Tinv(i - 1, d);
  for (int d = 0; d < n; ++d)
    G(0, d) = -G.col(d).segment(1, n).sum();
  return G;
}

Point map_to_cell(const Mesh &mesh, std::size_t c,
                  const std::array<double, 4> &lambda) {
  Point x {0.0, 0.0, 0.0};
  const Cell &t = mesh.cell(c);
  for (int i = 0; i <= mesh.dim(); ++i)
    for (int d = 0; d < 3; ++d)
      x[d] += lambda[i] * mesh.vertex(t[i])[d];
  return x;
}

namespace {

template <typename LocalMatrix>
SparseSymMatrix assemble(const Mesh &mesh, LocalMatrix &&local) {
  const int nl = mesh.vertices_per_cell();
  std::vector<Triplet> triplets;
  triplets.reserve(mesh.num_cells() * nl * nl);
  Eigen::Matrix4d K;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    local(c, K);
    const Cell &t = mesh.cell(c);
    for (int i = 0; i < nl; ++i) {
      const int di = mesh.dof_of_vertex(t[i]);
      if (di < 0)
        continue;
      for (int j = 0; j < nl; ++j) {
        const int dj = mesh.dof_of_vertex(t[j]);
        if (dj >= 0)
          triplets.emplace_back(di, dj, K(i, j));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_dofs());
  SparseSymMatrix S(n, n);
  S.setFromTriplets(triplets.begin(), triplets.end());
  S.makeCompressed();
  return S;
}

} // namespace

SparseSymMatrix assemble_stiffness(const Mesh &mesh) {
  const int nl = mesh.vertices_per_cell();
  return assemble(mesh, [&](std::size_t c, Eigen::Matrix4d &K) {
    const auto G = barycentric_gradients(mesh, c);
    const double vol = mesh.cell_volume(c);
    K.setZero();
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j)
        K(i, j) = vol * G.row(i).dot(G.row(j));
  });
}

SparseSymMatrix assemble_mass(const Mesh &mesh) {
  const int nl = mesh.vertices_per_cell();
  // int_T l_i l_j = |T| (1 + delta_ij) / ((n+1)(n+2))
  const double denom = double(nl) * (nl + 1);
  return assemble(mesh, [&](std::size_t c, Eigen::Matrix4d &K) {
    const double vol = mesh.cell_volume(c);
    K.setZero();
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j)
        K(i, j) = vol * (i == j ? 2.0 : 1.0) / denom;
  });
}

Vector lump_mass(const SparseSymMatrix &mass) {
  Vector d = Vector::Zero(mass.rows());
  for (Eigen::Index r = 0; r < mass.outerSize(); ++r)
    for (SparseSymMatrix::InnerIterator it(mass, r); it; ++it)
      d[r] += it.value();
  return d;
}

Vector lumped_mass(const Mesh &mesh) {
  Vector d = Vector::Zero(static_cast<Eigen::Index>(mesh.num_dofs()));
  const int nl = mesh.vertices_per_cell();
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double share = mesh.cell_volume(c) / nl;
    for (int i = 0; i < nl; ++i) {
      const int dof = mesh.dof_of_vertex(mesh.cell(c)[i]);
      if (dof >= 0)
        d[dof] += share;
    }
  }
  return d;
}

Vector assemble_load(const NodalFunction &f) {
  return assemble_mass(*f.mesh) * f.values;
}

Vector assemble_load(const CellwiseFunction &f) {
  const Mesh &mesh = *f.mesh;
  Vector b = Vector::Zero(mesh.num_dofs());
  const int nl = mesh.vertices_per_cell();
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double share = mesh.cell_volume(c) * f.values[c] / nl;
    for (int i = 0; i < nl; ++i) {
      const int d = mesh.dof_of_vertex(mesh.cell(c)[i]);
      if (d >= 0)
        b[d] += share;
    }
  }
  return b;
}

Vector assemble_load(const Mesh &mesh, const PointFunction &f, int degree) {
  const auto &rule = simplex_quadrature(mesh.dim(), degree);
  Vector b = Vector::Zero(mesh.num_dofs());
  const int nl = mesh.vertices_per_cell();
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double vol = mesh.cell_volume(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double fq = vol * rule.weights[q] *
                        f(map_to_cell(mesh, c, rule.barycentric[q]));
      for (int i = 0; i < nl; ++i) {
        const int d = mesh.dof_of_vertex(mesh.cell(c)[i]);
        if (d >= 0)
          b[d] += fq * rule.barycentric[q][i];
      }
    }
  }
  return b;
}

CellwiseFunction project_p0(const NodalFunction &v) {
  const Mesh &mesh = *v.mesh;
  Vector out(mesh.num_cells());
  const int nl = mesh.vertices_per_cell();
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    double s = 0.0;
    for (int i = 0; i < nl; ++i)
      s += v.at_vertex(mesh.cell(c)[i]);
    out[c] = s / nl;
  }
  return {v.mesh, std::move(out)};
}

CellwiseFunction project_p0(MeshPtr mesh, const PointFunction &f, int degree) {
  const auto &rule = simplex_quadrature(mesh->dim(), degree);
  Vector out(mesh->num_cells());
  for (std::size_t c = 0; c < mesh->num_cells(); ++c) {
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q)
      s += rule.weights[q] * f(map_to_cell(*mesh, c, rule.barycentric[q]));
    out[c] = s;
  }
  return {std::move(mesh), std::move(out)};
}

double l2_inner(const NodalFunction &u, const NodalFunction &v) {
  require_same_mesh(u.mesh, v.mesh);
  return u.values.dot(assemble_mass(*u.mesh) * v.values);
}

double l2_inner(const CellwiseFunction &u, const CellwiseFunction &v) {
  require_same_mesh(u.mesh, v.mesh);
  double s = 0.0;
  for (std::size_t c = 0; c < u.mesh->num_cells(); ++c)
    s += u.mesh->cell_volume(c) * u.values[c] * v.values[c];
  return s;
}

double l2_norm(const NodalFunction &v) {
  return std::sqrt(std::max(0.0, l2_inner(v, v)));
}

double l2_norm(const CellwiseFunction &v) {
  return std::sqrt(std::max(0.0, l2_inner(v, v)));
}

double h1_seminorm(const NodalFunction &v) {
  const double e = v.values.dot(assemble_stiffness(*v.mesh) * v.values);
  return std::sqrt(std::max(0.0, e));
}

namespace {

void require_nested_refinement(const Mesh &coarse, const Mesh &fine) {
  const int mc = coarse.cells_per_side(), mf = fine.cells_per_side();
  if (coarse.dim() != fine.dim() || mf % mc != 0)
    throw std::invalid_argument("meshes are not nested");
}

} // namespace

NodalFunction prolongate(const NodalFunction &coarse, MeshPtr fine) {
  require_nested_refinement(*coarse.mesh, *fine);
  Vector v(fine->num_dofs());
  for (std::size_t d = 0; d < fine->num_dofs(); ++d)
    v[d] = coarse(fine->vertex(fine->vertex_of_dof(d)));
  return {std::move(fine), std::move(v)};
}

CellwiseFunction prolongate(const CellwiseFunction &coarse, MeshPtr fine) {
  require_nested_refinement(*coarse.mesh, *fine);
  Vector v(fine->num_cells());
  for (std::size_t c = 0; c < fine->num_cells(); ++c)
    v[c] = coarse.values[coarse.mesh->locate(fine->cell_centroid(c)).cell];
  return {std::move(fine), std::move(v)};
}

SparseSymMatrix p1_prolongation(const Mesh &coarse, const Mesh &fine) {
  const int mc = coarse.cells_per_side();
  if (coarse.dim() != fine.dim() || fine.cells_per_side() != 2 * mc)
    throw std::invalid_argument("p1_prolongation needs a factor-2 refinement");
  const int n = fine.dim();
  const int mf = fine.cells_per_side();
  std::vector<Triplet> triplets;
  for (std::size_t d = 0; d < fine.num_dofs(); ++d) {
    const Point &x = fine.vertex(fine.vertex_of_dof(d));
    std::array<int, 3> lo {0, 0, 0}, hi {0, 0, 0};
    for (int k = 0; k < n; ++k) {
      const int g = static_cast<int>(std::lround(x[k] * mf));
      lo[k] = g / 2;
      hi[k] = (g + 1) / 2;
    }
    // Kuhn edges run along {0,1}^n directions, so an odd fine node is the
    // midpoint of the coarse edge lo -> hi.
    const int a = coarse.grid_vertex(lo[0], lo[1], lo[2]);
    const int b = coarse.grid_vertex(hi[0], hi[1], hi[2]);
    const double w = a == b ? 1.0 : 0.5;
    for (int v : {a, b}) {
      const int dc = coarse.dof_of_vertex(v);
      if (dc >= 0)
        triplets.emplace_back(static_cast<int>(d), dc, w);
      if (a == b)
        break;
    }
  }
  SparseSymMatrix P(fine.num_dofs(), coarse.num_dofs());
  P.setFromTriplets(triplets.begin(), triplets.end());
  P.makeCompressed();
  return P;
}

} // namespace fracopt
