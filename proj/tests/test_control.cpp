//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "fracopt/control.hpp"
#include "fracopt/experiments.hpp"
#include "support.hpp"

using namespace fracopt;
using fracopt::test::random_vector;
using fracopt::test::rel_diff;

namespace {

ControlProblem default_problem(int m, double s, ControlMode mode) {
  auto mesh = unit_square_mesh(m);
  ControlProblem p;
  p.mesh = mesh;
  p.s = s;
  p.mode = mode;
  p.fractional.s = s;
  p.desired = interpolate(mesh, [](const Point &x) { return sine_eigenfunction(x, 2); });
  return p;
}

// Dense solution operator load -> nodal coefficients of the lumped spectral
// oracle.
Eigen::MatrixXd dense_solution_operator(const MeshPtr &mesh, double s) {
  SpectralOracle oracle(mesh);
  const auto n = static_cast<Eigen::Index>(mesh->num_dofs());
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    S.col(j) = oracle.solve_load(s, Vector::Unit(n, j)).values;
  return S;
}

} // namespace

TEST_SUITE("control") {

TEST_CASE("box projection") {
  CHECK(project_box(1.3, -0.8, 0.8) == 0.8);
  CHECK(project_box(-2.0, -0.8, 0.8) == -0.8);
  CHECK(project_box(0.25, -0.8, 0.8) == 0.25);
  CHECK(project_box(0.8, -0.8, 0.8) == 0.8);
  CHECK_THROWS_AS(project_box(0.0, 1.0, -1.0), std::invalid_argument);
  Vector v(3);
  v << -1.0, 0.0, 1.0;
  CHECK(project_box(v, -0.5, 0.5) == Vector::LinSpaced(3, -0.5, 0.5));
}

TEST_CASE("control space weights and loads") {
  for (ControlMode mode : {ControlMode::fully_discrete, ControlMode::variational}) {
    auto mesh = unit_square_mesh(4);
    ControlSpace space(mesh, mode);
    CHECK(space.weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((space.weights().array() > 0.0).all());
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(space.size()));
    CHECK(rel_diff(space.load(ones), assemble_load(*mesh, [](const Point &) { return 1.0; })) < 1e-13);
    // (B z, p) = (z, evaluate(p))_W
    std::mt19937 rng(21);
    const Vector z = random_vector(static_cast<Eigen::Index>(space.size()), rng);
    const NodalFunction p(mesh, random_vector(mesh->num_dofs(), rng));
    CHECK(space.load(z).dot(p.values) ==
          doctest::Approx(space.inner(z, space.evaluate(p))).epsilon(1e-13));
  }
  CHECK(ControlSpace(unit_square_mesh(4), ControlMode::fully_discrete).size() == 32);
}

TEST_CASE("control modes parse") {
  CHECK(parse_control_mode("p0") == ControlMode::fully_discrete);
  CHECK(parse_control_mode("fully-discrete") == ControlMode::fully_discrete);
  CHECK(parse_control_mode("variational") == ControlMode::variational);
  CHECK_THROWS_AS(parse_control_mode("p2"), std::invalid_argument);
  CHECK(std::string(to_string(ControlMode::variational)) == "variational");
}

TEST_CASE("objective at zero and nonnegativity") {
  for (ControlMode mode : {ControlMode::fully_discrete, ControlMode::variational}) {
    const ControlProblem p = default_problem(16, 0.5, mode);
    ReducedFunctional f(p);
    const auto n = static_cast<Eigen::Index>(f.space().size());
    CHECK(f.objective(Vector::Zero(n)) == doctest::Approx(0.125).epsilon(0.03));
    std::mt19937 rng(22);
    for (int t = 0; t < 3; ++t) {
      const Vector z = random_vector(n, rng);
      const double J = f.objective(z);
      CHECK(J >= 0.0);
      // J(z) - J_{mu=0}(z) = mu/2 |z|^2_W
      ControlProblem q = p;
      q.mu = 1.0;
      CHECK(ReducedFunctional(q).objective(z) - J ==
            doctest::Approx(0.5 * (1.0 - p.mu) * f.space().inner(z, z)).epsilon(1e-10));
    }
  }
}

TEST_CASE("gradient matches central differences") {
  for (ControlMode mode : {ControlMode::fully_discrete, ControlMode::variational}) {
    ControlProblem p = default_problem(8, 0.3, mode);
    p.fractional.rtol = 1e-12;
    ReducedFunctional f(p);
    const auto n = static_cast<Eigen::Index>(f.space().size());
    std::mt19937 rng(23);
    const Vector z = random_vector(n, rng, -0.5, 0.5);
    const Vector g = f.gradient(z);
    const double t = 1e-4;
    for (int i = 0; i < 5; ++i) {
      const Vector d = random_vector(n, rng);
      const double fd = (f.objective(z + t * d) - f.objective(z - t * d)) / (2 * t);
      const double an = f.space().inner(g, d);
      CHECK(std::abs(fd - an) <= 1e-5 * std::abs(an));
    }
  }
}

TEST_CASE("adjoint is linear and S S is positive") {
  const ControlProblem p = default_problem(8, 0.5, ControlMode::fully_discrete);
  ReducedFunctional f(p);
  const auto n = static_cast<Eigen::Index>(f.space().size());
  std::mt19937 rng(24);
  const Vector y = random_vector(n, rng), z = random_vector(n, rng);
  const NodalFunction uy = f.state(y), uz = f.state(z);
  const NodalFunction u = f.state(2.0 * y + z);
  CHECK(rel_diff(u.values, 2.0 * uy.values + uz.values) < 1e-8);
  // (S S z, z) = |S z|^2 >= 0 in the mass inner product
  const NodalFunction ssz = f.solver().solve(uz).u;
  CHECK(ssz.values.dot(f.space().load(z)) >= 0.0);
}

TEST_CASE("zero desired state gives the zero control") {
  ControlProblem p = default_problem(8, 0.5, ControlMode::fully_discrete);
  p.desired = NodalFunction::zero(p.mesh);
  const ControlSolution sol = solve_fully_discrete(p);
  CHECK(sol.coefficients.isZero(0.0));
  CHECK(sol.iterations == 0);
  CHECK(sol.objective == 0.0);
}

TEST_CASE("scalar problem: closed form") {
  for (double d : {0.3, 2.0, -5.0}) {
    const double sigma = 0.7, mu = 0.1;
    BoxQuadraticModel m;
    m.weights = Vector::Ones(1);
    m.mu = mu;
    m.lower = -0.8;
    m.upper = 0.8;
    m.desired = Vector::Constant(1, d);
    m.state = [&](const Vector &z) { return Vector(sigma * z); };
    m.adjoint = [&](const Vector &r) { return Vector(sigma * r); };
    m.state_inner = [](const Vector &x, const Vector &y) { return x.dot(y); };
    const OptimizerResult res = minimize_box_quadratic(m, Vector::Zero(1), 1e-13, {});
    CHECK(res.z[0] == doctest::Approx(project_box(sigma * d / (sigma * sigma + mu), -0.8, 0.8)).epsilon(1e-10));
  }
}

TEST_CASE("wide bounds: normal equations") {
  for (ControlMode mode : {ControlMode::fully_discrete, ControlMode::variational}) {
    ControlProblem p = default_problem(8, 0.5, mode);
    p.a = -100.0;
    p.b = 100.0;
    p.fractional.k = 0.1;
    p.fractional.rtol = 1e-12;
    OptimizerOptions opt;
    opt.tol = 1e-9;
    const ControlSolution sol = solve_control(ReducedFunctional(p), opt);

    const ControlSpace space(p.mesh, mode);
    const auto nz = static_cast<Eigen::Index>(space.size());
    Eigen::MatrixXd B(p.mesh->num_dofs(), nz);
    for (Eigen::Index j = 0; j < nz; ++j)
      B.col(j) = space.load(Vector::Unit(nz, j));
    const Eigen::MatrixXd S = dense_solution_operator(p.mesh, p.s);
    const Eigen::MatrixXd M(assemble_mass(*p.mesh));
    const Eigen::MatrixXd SB = S * B;
    Eigen::MatrixXd H = SB.transpose() * M * SB;
    H.diagonal() += p.mu * space.weights();
    const Vector rhs = SB.transpose() * (M * p.desired.values);
    const Vector z = H.ldlt().solve(rhs);
    CHECK(rel_diff(sol.coefficients, z) < 1e-6);
  }
}

TEST_CASE("default configuration: optimality system") {
  for (ControlMode mode : {ControlMode::fully_discrete, ControlMode::variational}) {
    for (double s : {0.05, 0.5}) {
      const ControlProblem p = default_problem(16, s, mode);
      OptimizerOptions opt;
      const ControlSolution sol = solve_control(ReducedFunctional(p), opt);
      CAPTURE(s);
      CHECK(sol.residual <= sol.stop_threshold);
      CHECK(sol.coefficients.minCoeff() >= p.a);
      CHECK(sol.coefficients.maxCoeff() <= p.b);
      CHECK((sol.coefficients.array() == p.b).any());
      for (std::size_t i = 1; i < sol.objective_history.size(); ++i)
        CHECK(sol.objective_history[i] <= sol.objective_history[i - 1] * (1 + 1e-14));
      CHECK(sol.objective == doctest::Approx(sol.objective_history.back()).epsilon(1e-8));
      if (mode == ControlMode::variational) {
        const ControlSpace space(p.mesh, mode);
        const Vector proj = project_box(Vector(-space.evaluate(sol.adjoint) / p.mu), p.a, p.b);
        CHECK((sol.coefficients - proj).cwiseAbs().maxCoeff() <= 10 * opt.tol);
        CHECK(sol.control_p1.values.minCoeff() >= p.a);
      }
    }
  }
}

TEST_CASE("solves are deterministic and optimizers agree") {
  const ControlProblem p = default_problem(8, 0.25, ControlMode::fully_discrete);
  const ControlSolution a = solve_fully_discrete(p);
  const ControlSolution b = solve_fully_discrete(p);
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.iterations == b.iterations);
  OptimizerOptions lb;
  lb.kind = OptimizerKind::projected_lbfgs;
  const ControlSolution c = solve_fully_discrete(p, lb);
  CHECK(c.residual <= c.stop_threshold);
  CHECK(rel_diff(a.coefficients, c.coefficients) < 1e-3);
}

TEST_CASE("warm start from the solution returns immediately") {
  const ControlProblem p = default_problem(8, 0.5, ControlMode::fully_discrete);
  ReducedFunctional f(p);
  const ControlSolution a = solve_control(f);
  const ControlSolution b = solve_control(f, {}, a.coefficients);
  CHECK(b.iterations <= 1);
  CHECK(b.stats.systems() > 0);
}

TEST_CASE("post-processing") {
  ControlProblem p = default_problem(4, 0.5, ControlMode::fully_discrete);
  ControlSolution sol;
  Vector adj = Vector::Zero(p.mesh->num_dofs());
  adj[0] = -0.05;
  adj[1] = -1.0;
  adj[2] = 1.0;
  sol.adjoint = NodalFunction(p.mesh, adj);
  const NodalFunction z = post_process(p, sol);
  CHECK(z.values[0] == doctest::Approx(0.5));
  CHECK(z.values[1] == 0.8);
  CHECK(z.values[2] == -0.8);
  CHECK(z.values[3] == 0.0);
}

TEST_CASE("control fields") {
  auto mesh = unit_square_mesh(4);
  auto fine = refine_uniform(*mesh);
  const NodalFunction v = interpolate(mesh, [](const Point &x) { return x[0] * (1 - x[0]) * x[1] * (1 - x[1]); });
  const ControlField f = ControlField::nodal(v);
  CHECK(l2_distance(f, f) == 0.0);
  CHECK(l2_distance(f.prolongate(fine), ControlField::nodal(prolongate(v, fine))) < 1e-15);
  const ControlField c = ControlField::cellwise(project_p0(v));
  CHECK(l2_distance(ControlField::cellwise(project_p0(v)), c) == 0.0);
  // proj(-p/mu) with wide bounds is -p/mu
  const ControlField cl = ControlField::clamped_adjoint(NodalFunction(mesh, -0.1 * v.values), 0.1, -10, 10);
  CHECK(l2_distance(cl, f) < 1e-15);
  CHECK_THROWS_AS(ControlField::clamped_adjoint(v, 0.0, -1, 1), std::invalid_argument);
}

TEST_CASE("iteration cap raises") {
  const ControlProblem p = default_problem(8, 0.5, ControlMode::fully_discrete);
  OptimizerOptions opt;
  opt.max_iterations = 1;
  opt.tol = 1e-14;
  CHECK_THROWS_AS(solve_fully_discrete(p, opt), OptimizationError);
}

TEST_CASE("invalid problems are rejected") {
  ControlProblem p = default_problem(4, 0.5, ControlMode::fully_discrete);
  p.mu = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.mu = 0.1;
  p.a = 0.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.a = -0.8;
  p.desired = NodalFunction::zero(unit_square_mesh(8));
  CHECK_THROWS(p.validate());
  ControlProblem q = default_problem(4, 0.5, ControlMode::fully_discrete);
  CHECK_THROWS_AS(solve_variational(q), std::invalid_argument);
}

}
