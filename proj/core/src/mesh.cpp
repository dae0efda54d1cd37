//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "fracopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fracopt {

namespace {

// Permutations of the axes in lexicographic order; permutation p defines the
// Kuhn simplex c, c+e_p0, c+e_p0+e_p1, ...
constexpr std::array<std::array<int, 3>, 6> kPerm3 {{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
constexpr std::array<std::array<int, 3>, 2> kPerm2 {{{0, 1, 0}, {1, 0, 0}}};

int factorial(int n) { return n == 2 ? 2 : 6; }

int perm_index(int dim, const std::array<int, 3> &p) {
  if (dim == 2)
    return p[0] == 0 ? 0 : 1;
  for (int i = 0; i < 6; ++i)
    if (kPerm3[i][0] == p[0] && kPerm3[i][1] == p[1])
      return i;
  return 0;
}

} // namespace

int Mesh::grid_vertex(int i, int j, int k) const noexcept {
  const int n = m_ + 1;
  return i + n * (j + n * k);
}

double Mesh::cell_volume(std::size_t c) const {
  const Cell &t = cells_[c];
  if (dim_ == 2) {
    const Point &a = vertices_[t[0]], &b = vertices_[t[1]], &d = vertices_[t[2]];
    return 0.5 * std::abs((b[0] - a[0]) * (d[1] - a[1]) -
                          (b[1] - a[1]) * (d[0] - a[0]));
  }
  Eigen::Matrix3d J;
  for (int r = 0; r < 3; ++r)
    for (int q = 0; q < 3; ++q)
      J(r, q) = vertices_[t[q + 1]][r] - vertices_[t[0]][r];
  return std::abs(J.determinant()) / 6.0;
}

Point Mesh::cell_centroid(std::size_t c) const {
  Point x {0.0, 0.0, 0.0};
  const Cell &t = cells_[c];
  for (int i = 0; i <= dim_; ++i)
    for (int d = 0; d < 3; ++d)
      x[d] += vertices_[t[i]][d];
  for (double &xd : x)
    xd /= dim_ + 1;
  return x;
}

CellLocation Mesh::locate(const Point &x) const {
  std::array<int, 3> c {0, 0, 0};
  std::array<double, 3> t {0.0, 0.0, 0.0};
  for (int d = 0; d < dim_; ++d) {
    const double xd = std::clamp(x[d], 0.0, 1.0) * m_;
    c[d] = std::min(static_cast<int>(std::floor(xd)), m_ - 1);
    t[d] = xd - c[d];
  }
  std::array<int, 3> p {0, 1, 2};
  std::stable_sort(p.begin(), p.begin() + dim_,
                   [&](int a, int b) { return t[a] > t[b]; });

  CellLocation loc;
  const int cube = c[0] + m_ * (c[1] + m_ * (dim_ == 3 ? c[2] : 0));
  loc.cell = cube * factorial(dim_) + perm_index(dim_, p);
  loc.barycentric[0] = 1.0 - t[p[0]];
  for (int j = 1; j < dim_; ++j)
    loc.barycentric[j] = t[p[j - 1]] - t[p[j]];
  loc.barycentric[dim_] = t[p[dim_ - 1]];
  return loc;
}

void Mesh::finalize() {
  const std::size_t nv = vertices_.size();
  boundary_.assign(nv, 0);
  dof_of_vertex_.assign(nv, -1);
  vertex_of_dof_.clear();
  constexpr double eps = 1e-12;
  for (std::size_t v = 0; v < nv; ++v) {
    for (int d = 0; d < dim_; ++d)
      if (vertices_[v][d] < eps || vertices_[v][d] > 1.0 - eps)
        boundary_[v] = 1;
    if (!boundary_[v]) {
      dof_of_vertex_[v] = static_cast<int>(vertex_of_dof_.size());
      vertex_of_dof_.push_back(static_cast<int>(v));
    }
  }
  double h2 = 0.0;
  for (const Cell &t : cells_)
    for (int i = 0; i <= dim_; ++i)
      for (int j = i + 1; j <= dim_; ++j) {
        double l2 = 0.0;
        for (int d = 0; d < dim_; ++d) {
          const double e = vertices_[t[i]][d] - vertices_[t[j]][d];
          l2 += e * e;
        }
        h2 = std::max(h2, l2);
      }
  h_ = std::sqrt(h2);
}

MeshPtr Mesh::from_data(int dim, int cells_per_side, int level,
                        std::vector<Point> vertices, std::vector<Cell> cells) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("mesh dimension must be 2 or 3");
  if (cells_per_side < 1)
    throw std::invalid_argument("cells_per_side must be positive");
  auto mesh = std::shared_ptr<Mesh>(new Mesh());
  mesh->dim_ = dim;
  mesh->m_ = cells_per_side;
  mesh->level_ = level;
  mesh->vertices_ = std::move(vertices);
  mesh->cells_ = std::move(cells);
  for (const Cell &t : mesh->cells_)
    for (int i = 0; i <= dim; ++i)
      if (t[i] < 0 || static_cast<std::size_t>(t[i]) >= mesh->vertices_.size())
        throw std::invalid_argument("cell references a missing vertex");
  mesh->finalize();
  return mesh;
}

MeshPtr structured_mesh(int dim, int m, int level) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("mesh dimension must be 2 or 3");
  if (m < 1)
    throw std::invalid_argument("cells_per_side must be positive");

  auto mesh = std::shared_ptr<Mesh>(new Mesh());
  mesh->dim_ = dim;
  mesh->m_ = m;
  mesh->level_ = level;

  const int n = m + 1;
  const int nz = dim == 3 ? n : 1;
  mesh->vertices_.reserve(static_cast<std::size_t>(n) * n * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        mesh->vertices_.push_back(
            {double(i) / m, double(j) / m, dim == 3 ? double(k) / m : 0.0});

  const int cz = dim == 3 ? m : 1;
  mesh->cells_.reserve(static_cast<std::size_t>(m) * m * cz * factorial(dim));
  for (int k = 0; k < cz; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const int nperm = factorial(dim);
        for (int q = 0; q < nperm; ++q) {
          const auto &p = dim == 2 ? kPerm2[q] : kPerm3[q];
          std::array<int, 3> g {i, j, k};
          Cell cell {0, 0, 0, 0};
          cell[0] = mesh->grid_vertex(g[0], g[1], g[2]);
          for (int s = 0; s < dim; ++s) {
            ++g[p[s]];
            cell[s + 1] = mesh->grid_vertex(g[0], g[1], g[2]);
          }
          mesh->cells_.push_back(cell);
        }
      }
  mesh->finalize();
  return mesh;
}

MeshPtr unit_square_mesh(int cells_per_side) {
  return structured_mesh(2, cells_per_side);
}

MeshPtr unit_cube_mesh(int cells_per_side) {
  return structured_mesh(3, cells_per_side);
}

MeshPtr refine_uniform(const Mesh &mesh) {
  return structured_mesh(mesh.dim(), 2 * mesh.cells_per_side(),
                         mesh.refinement_level() + 1);
}

bool is_nested(const Mesh &coarse, const Mesh &fine) {
  if (coarse.dim() != fine.dim())
    return false;
  const int n = fine.dim();
  for (std::size_t c = 0; c < fine.num_cells(); ++c) {
    const CellLocation loc = coarse.locate(fine.cell_centroid(c));
    const Cell &parent = coarse.cell(loc.cell);
    // Every fine vertex must have nonnegative barycentric coordinates in the
    // parent found through the centroid.
    Eigen::MatrixXd T(n, n);
    for (int r = 0; r < n; ++r)
      for (int q = 0; q < n; ++q)
        T(r, q) = coarse.vertex(parent[q + 1])[r] - coarse.vertex(parent[0])[r];
    const Eigen::MatrixXd Tinv = T.inverse();
    for (int i = 0; i <= n; ++i) {
      Eigen::VectorXd rel(n);
      for (int r = 0; r < n; ++r)
        rel[r] = fine.vertex(fine.cell(c)[i])[r] - coarse.vertex(parent[0])[r];
      const Eigen::VectorXd lam = Tinv * rel;
      if (lam.minCoeff() < -1e-10 || lam.sum() > 1.0 + 1e-10)
        return false;
    }
  }
  return true;
}

void write_mesh(std::ostream &out, const Mesh &mesh) {
  out << mesh.dim() << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells()
      << '\n';
  out.precision(17);
  for (const Point &x : mesh.vertices()) {
    for (int d = 0; d < mesh.dim(); ++d)
      out << (d ? " " : "") << x[d];
    out << '\n';
  }
  for (const Cell &t : mesh.cells()) {
    for (int i = 0; i <= mesh.dim(); ++i)
      out << (i ? " " : "") << t[i];
    out << '\n';
  }
}

MeshPtr read_mesh(std::istream &in) {
  int dim = 0;
  std::size_t nv = 0, nc = 0;
  if (!(in >> dim >> nv >> nc) || (dim != 2 && dim != 3))
    throw std::runtime_error("malformed mesh header");
  std::vector<Point> vertices(nv, Point {0.0, 0.0, 0.0});
  for (auto &x : vertices)
    for (int d = 0; d < dim; ++d)
      if (!(in >> x[d]))
        throw std::runtime_error("truncated vertex block");
  std::vector<Cell> cells(nc, Cell {0, 0, 0, 0});
  for (auto &t : cells)
    for (int i = 0; i <= dim; ++i)
      if (!(in >> t[i]))
        throw std::runtime_error("truncated cell block");
  const int m =
      static_cast<int>(std::lround(std::pow(double(nv), 1.0 / dim))) - 1;
  if (m < 1)
    throw std::runtime_error("mesh is not a structured unit-cube mesh");
  return Mesh::from_data(dim, m, 0, std::move(vertices), std::move(cells));
}

} // namespace fracopt
