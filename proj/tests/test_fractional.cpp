//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/SparseCholesky>

#include "fracopt/experiments.hpp"
#include "fracopt/fractional.hpp"
#include "support.hpp"

using namespace fracopt;
using fracopt::test::random_vector;
using fracopt::test::rel_diff;

namespace {

double mass_inner(const Vector &Mh, const Vector &u, const Vector &v) {
  return u.dot(Mh.cwiseProduct(v));
}

} // namespace

TEST_SUITE("fractional") {

TEST_CASE("zero data gives zero") {
  auto mesh = unit_square_mesh(8);
  FractionalSolver solver(mesh, {});
  const auto res = solver.solve(NodalFunction::zero(mesh));
  CHECK(res.u.values.isZero(0.0));
  CHECK(res.stats.systems() == res.quadrature.size());
}

TEST_CASE("discrete eigenvectors are scaled by lambda^-s") {
  auto mesh = unit_square_mesh(8);
  SpectralOracle oracle(mesh);
  const Eigen::MatrixXd Q = oracle.eigenfunctions();
  const Vector Mh = lumped_mass(*mesh);
  for (double s : {0.1, 0.5, 0.9}) {
    FractionalOptions opt;
    opt.s = s;
    opt.k = 0.12;
    opt.rtol = 1e-11;
    FractionalSolver solver(mesh, opt);
    for (Eigen::Index j : {Eigen::Index(0), Eigen::Index(7), Q.cols() - 1}) {
      const Vector psi = Q.col(j);
      const Vector u = solver.solve_load(Mh.cwiseProduct(psi)).u.values;
      const double lambda = oracle.eigenvalues()[j];
      CHECK(rel_diff(u, std::pow(lambda, -s) * psi) < 1e-7);
    }
  }
}

TEST_CASE("oracle endpoints") {
  auto mesh = unit_square_mesh(8);
  SpectralOracle oracle(mesh);
  std::mt19937 rng(3);
  const Vector Z = random_vector(mesh->num_dofs(), rng);
  const Vector Mh = lumped_mass(*mesh);
  const SparseSymMatrix A = assemble_stiffness(*mesh);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt {Eigen::SparseMatrix<double>(A)};
  CHECK(rel_diff(oracle.solve_load(1.0, Z).values, ldlt.solve(Z)) < 1e-11);
  CHECK(rel_diff(oracle.solve_load(0.0, Z).values, Z.cwiseQuotient(Mh)) < 1e-11);
  CHECK_THROWS_AS(oracle.solve_load(1.5, Z), std::invalid_argument);
  CHECK_THROWS_AS(SpectralOracle(unit_square_mesh(72)), std::length_error);
}

TEST_CASE("linearity") {
  auto mesh = unit_square_mesh(8);
  FractionalOptions opt;
  opt.s = 0.3;
  opt.rtol = 1e-11;
  FractionalSolver solver(mesh, opt);
  std::mt19937 rng(4);
  const Vector x = random_vector(mesh->num_dofs(), rng);
  const Vector y = random_vector(mesh->num_dofs(), rng);
  const Vector lhs = solver.solve_load(2.0 * x - 3.0 * y).u.values;
  const Vector rhs = 2.0 * solver.solve_load(x).u.values - 3.0 * solver.solve_load(y).u.values;
  CHECK(rel_diff(lhs, rhs) < 1e-9);
}

TEST_CASE("solution operator is self-adjoint in the mass inner product") {
  auto mesh = unit_square_mesh(8);
  const SparseSymMatrix M = assemble_mass(*mesh);
  std::mt19937 rng(5);
  for (double s : {0.05, 0.5, 0.95}) {
    FractionalOptions opt;
    opt.s = s;
    FractionalSolver solver(mesh, opt);
    for (int t = 0; t < 3; ++t) {
      const Vector x = random_vector(mesh->num_dofs(), rng);
      const Vector y = random_vector(mesh->num_dofs(), rng);
      const Vector sx = solver.solve(NodalFunction(mesh, x)).u.values;
      const Vector sy = solver.solve(NodalFunction(mesh, y)).u.values;
      const double a = sx.dot(M * y), b = x.dot(M * sy);
      CHECK(std::abs(a - b) <= 1e-8 * std::max(std::abs(a), std::abs(b)));
    }
  }
}

TEST_CASE("sinc error decreases with the step") {
  auto mesh = unit_square_mesh(8);
  SpectralOracle oracle(mesh);
  const Vector Mh = lumped_mass(*mesh);
  const Vector Z = assemble_load(hat_rhs(mesh));
  for (double s : {0.05, 0.5, 0.95}) {
    const Vector exact = oracle.solve_load(s, Z).values;
    double prev = std::numeric_limits<double>::infinity();
    for (double k : {1.0, 0.7, 0.5, 0.35}) {
      FractionalOptions opt;
      opt.s = s;
      opt.k = k;
      opt.rtol = 1e-12;
      const Vector u = fractional_solve(mesh, Z, opt).u.values;
      const Vector e = u - exact;
      const double err = std::sqrt(mass_inner(Mh, e, e) / mass_inner(Mh, exact, exact));
      CHECK(err < prev);
      // truncation of the sum limits the decay to exp(-pi^2 / (4k))
      CHECK(err <= 3.0 * std::exp(-std::numbers::pi * std::numbers::pi / (4 * k)));
      prev = err;
    }
  }
}

TEST_CASE("default step against the oracle") {
  auto mesh = unit_square_mesh(16);
  SpectralOracle oracle(mesh);
  const Vector Z = assemble_load(hat_rhs(mesh));
  for (double s : {0.05, 0.5, 0.95}) {
    FractionalOptions opt;
    opt.s = s;
    const auto res = fractional_solve(mesh, Z, opt);
    const double k = res.quadrature.k;
    CHECK(k == doctest::Approx(1.1 / std::log(2.0 / mesh->h())));
    CHECK(rel_diff(res.u.values, oracle.solve_load(s, Z).values) <=
          3.0 * std::exp(-std::numbers::pi * std::numbers::pi / (4 * k)));
  }
}

TEST_CASE("P0 and P1 data use exact loads") {
  auto mesh = unit_square_mesh(8);
  FractionalSolver solver(mesh, {});
  const NodalFunction v = interpolate(mesh, [](const Point &x) { return x[0] * x[1]; });
  CHECK(rel_diff(solver.solve(v).u.values,
                 solver.solve_load(assemble_mass(*mesh) * v.values).u.values) < 1e-14);
  const CellwiseFunction c = project_p0(v);
  CHECK(rel_diff(solver.solve(c).u.values,
                 solver.solve_load(assemble_load(c)).u.values) < 1e-14);
}

TEST_CASE("three-dimensional solve") {
  auto mesh = unit_cube_mesh(6);
  SpectralOracle oracle(mesh);
  const Vector Z = assemble_load(*mesh, [](const Point &x) { return x[0] * x[1] * x[2]; });
  FractionalOptions opt;
  opt.s = 0.5;
  opt.k = 0.15;
  opt.rtol = 1e-10;
  const auto res = fractional_solve(mesh, Z, opt);
  CHECK(rel_diff(res.u.values, oracle.solve_load(0.5, Z).values) < 1e-6);
}

TEST_CASE("eigenfunction data converges at second order") {
  const double s = 0.5;
  const double scale = std::pow(8.0 * std::numbers::pi * std::numbers::pi, -s);
  std::vector<double> errors, hs;
  for (int m : {8, 16, 32}) {
    auto mesh = unit_square_mesh(m);
    const NodalFunction z = interpolate(mesh, [](const Point &x) { return sine_eigenfunction(x, 2); });
    FractionalOptions opt;
    opt.s = s;
    const NodalFunction u = fractional_solve(z, opt).u;
    errors.push_back(l2_norm(NodalFunction(mesh, u.values - scale * z.values)));
    hs.push_back(mesh->h());
  }
  const auto rates = compute_rates(errors, hs);
  CHECK(*rates.back() >= 1.8);
}

TEST_CASE("invalid options") {
  auto mesh = unit_square_mesh(4);
  FractionalOptions opt;
  opt.s = 1.0;
  CHECK_THROWS_AS(FractionalSolver(mesh, opt), std::invalid_argument);
  opt.s = 0.5;
  opt.k = -1.0;
  CHECK_THROWS_AS(FractionalSolver(mesh, opt), std::invalid_argument);
}

}
