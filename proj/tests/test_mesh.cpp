//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "fracopt/mesh.hpp"

using namespace fracopt;

TEST_SUITE("mesh") {

TEST_CASE("unit square sizes") {
  auto m4 = unit_square_mesh(4);
  CHECK(m4->num_vertices() == 25);
  CHECK(m4->h() == doctest::Approx(std::sqrt(2.0) / 4).epsilon(1e-15));
  CHECK(std::round(m4->h() * 1e4) / 1e4 == doctest::Approx(0.3536));

  auto m1 = unit_square_mesh(1);
  CHECK(m1->num_vertices() == 4);
  CHECK(m1->num_cells() == 2);
  CHECK(m1->num_dofs() == 0);

  auto m8 = unit_square_mesh(8);
  CHECK(m8->num_vertices() == 81);
  CHECK(std::round(m8->h() * 1e4) / 1e4 == doctest::Approx(0.1768));
  CHECK(m8->num_dofs() == 49);
}

TEST_CASE("unit cube sizes") {
  CHECK(unit_cube_mesh(4)->num_vertices() == 125);
  CHECK(unit_cube_mesh(8)->num_vertices() == 729);
  auto m1 = unit_cube_mesh(1);
  CHECK(m1->num_vertices() == 8);
  CHECK(m1->num_cells() == 6);
  CHECK(m1->num_dofs() == 0);
  CHECK(unit_cube_mesh(2)->h() == doctest::Approx(std::sqrt(3.0) / 2));
}

TEST_CASE("uniform refinement") {
  auto m = unit_square_mesh(4);
  auto r = refine_uniform(*m);
  CHECK(r->num_vertices() == 81);
  CHECK(r->h() == m->h() / 2);
  CHECK(r->refinement_level() == m->refinement_level() + 1);
  auto rr = refine_uniform(*r);
  CHECK(rr->num_cells() == 16 * m->num_cells());
  // vertex counts of the 2D sequence
  std::size_t expect[] = {25, 81, 289, 1089, 4225};
  MeshPtr cur = m;
  for (std::size_t n : expect) {
    CHECK(cur->num_vertices() == n);
    cur = refine_uniform(*cur);
  }
  auto c = refine_uniform(*unit_cube_mesh(2));
  CHECK(c->num_cells() == 8 * unit_cube_mesh(2)->num_cells());
  CHECK(is_nested(*unit_cube_mesh(2), *c));
}

TEST_CASE("volumes positive and summing to one") {
  for (int dim : {2, 3})
    for (int m : {1, 3, 4}) {
      auto mesh = structured_mesh(dim, m);
      double total = 0.0;
      for (std::size_t c = 0; c < mesh->num_cells(); ++c) {
        CHECK(mesh->cell_volume(c) > 0.0);
        total += mesh->cell_volume(c);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("boundary flags match coordinates") {
  for (int dim : {2, 3}) {
    auto mesh = structured_mesh(dim, 5);
    std::size_t interior = 0;
    for (std::size_t v = 0; v < mesh->num_vertices(); ++v) {
      const Point &x = mesh->vertex(v);
      bool bnd = false;
      for (int d = 0; d < dim; ++d)
        bnd = bnd || x[d] == 0.0 || x[d] == 1.0;
      CHECK(mesh->on_boundary(v) == bnd);
      CHECK((mesh->dof_of_vertex(v) < 0) == bnd);
      if (!bnd) {
        CHECK(mesh->vertex_of_dof(mesh->dof_of_vertex(v)) == static_cast<int>(v));
        ++interior;
      }
    }
    CHECK(interior == mesh->num_dofs());
  }
}

TEST_CASE("interior dofs are ordered lexicographically with x fastest") {
  auto mesh = unit_square_mesh(4);
  for (std::size_t d = 1; d < mesh->num_dofs(); ++d) {
    const Point &a = mesh->vertex(mesh->vertex_of_dof(d - 1));
    const Point &b = mesh->vertex(mesh->vertex_of_dof(d));
    CHECK((a[1] < b[1] || (a[1] == b[1] && a[0] < b[0])));
  }
}

TEST_CASE("conformity: interior facets are shared by exactly two cells") {
  for (int dim : {2, 3}) {
    auto mesh = structured_mesh(dim, 3);
    std::map<std::vector<int>, int> count;
    for (std::size_t c = 0; c < mesh->num_cells(); ++c) {
      const Cell &t = mesh->cell(c);
      for (int skip = 0; skip <= dim; ++skip) {
        std::vector<int> f;
        for (int i = 0; i <= dim; ++i)
          if (i != skip)
            f.push_back(t[i]);
        std::sort(f.begin(), f.end());
        ++count[f];
      }
    }
    for (const auto &[facet, n] : count) {
      bool all_bnd = true;
      for (int v : facet)
        all_bnd = all_bnd && mesh->on_boundary(v);
      CHECK(n <= 2);
      if (n == 1)
        CHECK(all_bnd);
    }
    // Euler characteristic of a disk / ball
    if (dim == 2) {
      std::map<std::pair<int, int>, int> edges;
      for (const auto &[f, n] : count)
        edges[{f[0], f[1]}] = n;
      CHECK(static_cast<long>(mesh->num_vertices()) - static_cast<long>(edges.size()) +
                static_cast<long>(mesh->num_cells()) == 1);
    }
  }
}

TEST_CASE("locate returns barycentric coordinates reproducing the point") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int dim : {2, 3}) {
    auto mesh = structured_mesh(dim, 6);
    for (int trial = 0; trial < 200; ++trial) {
      Point x {u(rng), u(rng), dim == 3 ? u(rng) : 0.0};
      const CellLocation loc = mesh->locate(x);
      REQUIRE(loc.cell >= 0);
      Point y {0.0, 0.0, 0.0};
      double sum = 0.0;
      for (int i = 0; i <= dim; ++i) {
        CHECK(loc.barycentric[i] >= -1e-12);
        sum += loc.barycentric[i];
        for (int d = 0; d < dim; ++d)
          y[d] += loc.barycentric[i] * mesh->vertex(mesh->cell(loc.cell)[i])[d];
      }
      CHECK(sum == doctest::Approx(1.0));
      for (int d = 0; d < dim; ++d)
        CHECK(y[d] == doctest::Approx(x[d]).epsilon(1e-12));
    }
  }
}

TEST_CASE("nestedness") {
  CHECK(is_nested(*unit_square_mesh(2), *unit_square_mesh(8)));
  CHECK(is_nested(*unit_square_mesh(4), *unit_square_mesh(4)));
  CHECK_FALSE(is_nested(*unit_square_mesh(3), *unit_square_mesh(8)));
  CHECK_FALSE(is_nested(*unit_square_mesh(8), *unit_square_mesh(4)));
}

TEST_CASE("mesh text round trip") {
  for (int dim : {2, 3}) {
    auto mesh = structured_mesh(dim, 3);
    std::stringstream io;
    write_mesh(io, *mesh);
    std::string header;
    std::getline(io, header);
    std::istringstream hs(header);
    int d = 0;
    std::size_t nv = 0, nc = 0;
    hs >> d >> nv >> nc;
    CHECK(d == dim);
    CHECK(nv == mesh->num_vertices());
    CHECK(nc == mesh->num_cells());
    io.seekg(0);
    auto back = read_mesh(io);
    CHECK(back->num_vertices() == mesh->num_vertices());
    CHECK(back->num_dofs() == mesh->num_dofs());
    CHECK(back->h() == doctest::Approx(mesh->h()));
    for (std::size_t c = 0; c < mesh->num_cells(); ++c)
      CHECK(back->cell(c) == mesh->cell(c));
  }
}

TEST_CASE("invalid sizes are rejected") {
  CHECK_THROWS(unit_square_mesh(0));
  CHECK_THROWS(structured_mesh(4, 2));
}

}
