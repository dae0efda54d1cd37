//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "fracopt/control.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "fracopt/simplex_quadrature.hpp"

namespace fracopt {

const char *to_string(ControlMode mode) {
  return mode == ControlMode::variational ? "variational" : "p0";
}

ControlMode parse_control_mode(const std::string &name) {
  if (name == "variational" || name == "var")
    return ControlMode::variational;
  if (name == "p0" || name == "fully_discrete" || name == "fully-discrete")
    return ControlMode::fully_discrete;
  throw std::invalid_argument("unknown control mode '" + name + "'");
}

double project_box(double v, double a, double b) {
  if (a > b)
    throw std::invalid_argument("project_box: lower bound exceeds upper bound");
  return std::min(b, std::max(a, v));
}

Vector project_box(const Vector &v, double a, double b) {
  if (a > b)
    throw std::invalid_argument("project_box: lower bound exceeds upper bound");
  return v.cwiseMax(a).cwiseMin(b);
}

NodalFunction project_box(const NodalFunction &v, double a, double b) {
  return {v.mesh, project_box(v.values, a, b)};
}

CellwiseFunction project_box(const CellwiseFunction &v, double a, double b) {
  return {v.mesh, project_box(v.values, a, b)};
}

// ---------------------------------------------------------------------------
// optimizer

namespace {

double weighted_dot(const Vector &w, const Vector &x, const Vector &y) {
  return (w.array() * x.array() * y.array()).sum();
}

struct Pair {
  Vector s, y;
  double rho; // 1 / <s, y>_W
};

// -H g on the free variables by the two-loop recursion in the W inner product.
Vector lbfgs_direction(const std::deque<Pair> &pairs, const Vector &w,
                       const Vector &g, const std::vector<char> &free) {
  Vector q = -g;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (!free[i])
      q[i] = 0.0;
  std::vector<double> alpha(pairs.size());
  for (std::size_t k = pairs.size(); k-- > 0;) {
    alpha[k] = pairs[k].rho * weighted_dot(w, pairs[k].s, q);
    q -= alpha[k] * pairs[k].y;
  }
  const Pair &last = pairs.back();
  q *= 1.0 / (last.rho * weighted_dot(w, last.y, last.y));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double beta = pairs[k].rho * weighted_dot(w, pairs[k].y, q);
    q += (alpha[k] - beta) * pairs[k].s;
  }
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (!free[i])
      q[i] = 0.0;
  return q;
}

} // namespace

OptimizerResult minimize_box_quadratic(const BoxQuadraticModel &model,
                                       const Vector &z0, double stop,
                                       const OptimizerOptions &options) {
  const double lo = model.lower, hi = model.upper, mu = model.mu;
  const Vector &w = model.weights;
  if (!(mu > 0.0))
    throw std::invalid_argument("optimizer: mu must be positive");
  if (z0.size() != w.size())
    throw std::invalid_argument("optimizer: initial guess size mismatch");

  auto energy = [&](const Vector &z, const Vector &r) {
    return 0.5 * model.state_inner(r, r) + 0.5 * mu * weighted_dot(w, z, z);
  };

  OptimizerResult out;
  Vector z = project_box(z0, lo, hi);
  Vector u = z.isZero(0.0) ? Vector::Zero(model.desired.size()) : model.state(z);
  Vector r = u - model.desired;
  Vector g = model.adjoint(r) + mu * z;
  double J = energy(z, r);
  out.objective_history.push_back(J);

  double t = 1.0 / mu;
  std::deque<Pair> pairs;
  int it = 0;
  for (;; ++it) {
    const double res = (z - project_box(z - g, lo, hi)).norm();
    out.residual_history.push_back(res);
    if (res <= stop)
      break;
    if (it >= options.max_iterations) {
      std::ostringstream msg;
      msg << "optimizer: no convergence in " << options.max_iterations
          << " iterations (projected gradient " << res << " > " << stop << ")";
      throw OptimizationError(msg.str(), out.residual_history);
    }

    Vector d;
    if (options.kind == OptimizerKind::projected_lbfgs && !pairs.empty()) {
      std::vector<char> free(static_cast<std::size_t>(z.size()));
      for (Eigen::Index i = 0; i < z.size(); ++i)
        free[i] = !((z[i] <= lo && g[i] > 0.0) || (z[i] >= hi && g[i] < 0.0));
      d = project_box(z + lbfgs_direction(pairs, w, g, free), lo, hi) - z;
      if (!(weighted_dot(w, g, d) < 0.0))
        d = project_box(z - t * g, lo, hi) - z;
    } else {
      d = project_box(z - t * g, lo, hi) - z;
    }
    const double gd = weighted_dot(w, g, d);
    if (!(gd < 0.0)) {
      // d vanishes only at a stationary point, which the residual test
      // above would have caught up to rounding.
      out.residual_history.back() = res;
      break;
    }

    // With r_new = r + tau S d the change of J is the quadratic
    // tau slope + tau^2 curvature / 2, evaluated without cancelling
    // against J itself (differences of J vanish in rounding near the
    // solution on fine meshes).
    const Vector Sd = model.state(d);
    const double slope = model.state_inner(r, Sd) + mu * weighted_dot(w, z, d);
    const double curvature = model.state_inner(Sd, Sd) + mu * weighted_dot(w, d, d);
    if (!(slope < 0.0) || !(curvature > 0.0)) {
      out.residual_history.back() = res;
      break;
    }
    double tau = std::min(1.0, -slope / curvature);
    double dJ = 0.0;
    bool accepted = false;
    for (int bt = 0; bt <= options.max_backtracks; ++bt, tau *= 0.5) {
      dJ = tau * slope + 0.5 * tau * tau * curvature;
      if (dJ <= options.armijo * tau * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      break;
    const Vector z_new = z + tau * d;
    const Vector r_new = r + tau * Sd;
    const double J_new = J + dJ;

    const Vector g_new = model.adjoint(r_new) + mu * z_new;
    const Vector s = z_new - z, y = g_new - g;
    const double sy = weighted_dot(w, s, y), ss = weighted_dot(w, s, s);
    if (sy > 1e-14 * ss && sy > 0.0) {
      t = ss / sy;
      if (options.kind == OptimizerKind::projected_lbfgs) {
        pairs.push_back({s, y, 1.0 / sy});
        if (static_cast<int>(pairs.size()) > options.lbfgs_memory)
          pairs.pop_front();
      }
    }
    z = std::move(z_new);
    r = std::move(r_new);
    g = g_new;
    J = J_new;
    out.objective_history.push_back(J);
  }

  out.iterations = it;
  out.residual = out.residual_history.back();
  out.state = r + model.desired;
  out.adjoint = g - mu * z;
  out.objective = J;
  out.z = std::move(z);
  return out;
}

// ---------------------------------------------------------------------------
// control space

ControlSpace::ControlSpace(MeshPtr mesh, ControlMode mode, int degree)
    : mesh_(std::move(mesh)), mode_(mode) {
  const Mesh &m = *mesh_;
  const int nv = m.vertices_per_cell();
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> weights;
  if (mode_ == ControlMode::fully_discrete) {
    std::array<double, 4> centroid {};
    for (int i = 0; i < nv; ++i)
      centroid[i] = 1.0 / nv;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
      const double vol = m.cell_volume(c);
      weights.push_back(vol);
      cell_.push_back(c);
      lambda_.push_back(centroid);
      for (int i = 0; i < nv; ++i) {
        const int d = m.dof_of_vertex(m.cell(c)[i]);
        if (d >= 0)
          trip.emplace_back(d, static_cast<int>(c), vol / nv);
      }
    }
  } else {
    const SimplexQuadrature &rule = simplex_quadrature(m.dim(), degree);
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
      const double vol = m.cell_volume(c);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const int j = static_cast<int>(weights.size());
        const double wq = vol * rule.weights[q];
        weights.push_back(wq);
        cell_.push_back(c);
        lambda_.push_back(rule.barycentric[q]);
        for (int i = 0; i < nv; ++i) {
          const int d = m.dof_of_vertex(m.cell(c)[i]);
          if (d >= 0)
            trip.emplace_back(d, j, wq * rule.barycentric[q][i]);
        }
      }
    }
  }
  weights_ = Eigen::Map<const Vector>(weights.data(),
                                      static_cast<Eigen::Index>(weights.size()));
  load_.resize(static_cast<Eigen::Index>(m.num_dofs()), weights_.size());
  load_.setFromTriplets(trip.begin(), trip.end());
  load_t_ = load_.transpose();
}

Vector ControlSpace::load(const Vector &z) const {
  if (z.size() != weights_.size())
    throw std::invalid_argument("control vector size mismatch");
  return load_ * z;
}

Vector ControlSpace::evaluate(const NodalFunction &p) const {
  require_same_mesh(p.mesh, mesh_);
  return (load_t_ * p.values).cwiseQuotient(weights_);
}

Vector ControlSpace::sample(const PointFunction &f) const {
  Vector out(weights_.size());
  for (Eigen::Index j = 0; j < out.size(); ++j)
    out[j] = f(map_to_cell(*mesh_, cell_[j], lambda_[j]));
  return out;
}

double ControlSpace::inner(const Vector &y, const Vector &z) const {
  return weighted_dot(weights_, y, z);
}

// ---------------------------------------------------------------------------
// reduced functional

void ControlProblem::validate() const {
  if (!mesh)
    throw std::invalid_argument("control problem: null mesh");
  if (!(mu > 0.0))
    throw std::invalid_argument("control problem: mu must be positive");
  if (!(a <= 0.0 && 0.0 <= b))
    throw std::invalid_argument("control problem: bounds must satisfy a <= 0 <= b");
  require_same_mesh(desired.mesh, mesh);
  if (fractional.s != s)
    throw std::invalid_argument("control problem: fractional options use a different s");
}

namespace {

ControlProblem validated(ControlProblem p) {
  p.fractional.s = p.s;
  p.validate();
  return p;
}

} // namespace

ReducedFunctional::ReducedFunctional(ControlProblem problem)
    : ReducedFunctional(validated(std::move(problem)), nullptr) {}

ReducedFunctional::ReducedFunctional(
    ControlProblem problem, std::shared_ptr<const FractionalSolver> solver)
    : problem_(validated(std::move(problem))),
      solver_(solver ? std::move(solver)
                     : std::make_shared<FractionalSolver>(problem_.mesh,
                                                          problem_.fractional)),
      space_(problem_.mesh, problem_.mode),
      stats_(std::make_shared<SolveStats>()) {
  require_same_mesh(solver_->mesh(), problem_.mesh);
  if (solver_->options().s != problem_.s)
    throw std::invalid_argument("reduced functional: solver built for another s");
}

NodalFunction ReducedFunctional::state(const Vector &z) const {
  FractionalSolveResult res = solver_->solve_load(space_.load(z));
  stats_->accumulate(res.stats);
  return std::move(res.u);
}

NodalFunction ReducedFunctional::adjoint(const NodalFunction &u) const {
  require_same_mesh(u.mesh, problem_.mesh);
  FractionalSolveResult res =
      solver_->solve_load(solver_->mass() * (u.values - problem_.desired.values));
  stats_->accumulate(res.stats);
  return std::move(res.u);
}

double ReducedFunctional::objective(const Vector &z) const {
  const Vector r = state(z).values - problem_.desired.values;
  return 0.5 * r.dot(solver_->mass() * r) + 0.5 * problem_.mu * space_.inner(z, z);
}

Vector ReducedFunctional::gradient(const Vector &z) const {
  return space_.evaluate(adjoint(state(z))) + problem_.mu * z;
}

BoxQuadraticModel ReducedFunctional::model() const {
  BoxQuadraticModel m;
  m.weights = space_.weights();
  m.mu = problem_.mu;
  m.lower = problem_.a;
  m.upper = problem_.b;
  m.desired = problem_.desired.values;
  m.state = [this](const Vector &z) { return state(z).values; };
  m.adjoint = [this](const Vector &r) {
    FractionalSolveResult res = solver_->solve_load(solver_->mass() * r);
    stats_->accumulate(res.stats);
    return space_.evaluate(res.u);
  };
  m.state_inner = [this](const Vector &x, const Vector &y) {
    return x.dot(solver_->mass() * y);
  };
  return m;
}

double objective(const ControlProblem &problem, const Vector &z) {
  return ReducedFunctional(problem).objective(z);
}

Vector reduced_gradient(const ControlProblem &problem, const Vector &z) {
  return ReducedFunctional(problem).gradient(z);
}

ControlSolution solve_control(const ReducedFunctional &functional,
                              const OptimizerOptions &options,
                              const std::optional<Vector> &initial) {
  const ControlProblem &problem = functional.problem();
  const ControlSpace &space = functional.space();
  const Mesh &mesh = *problem.mesh;
  const SolveStats before = functional.stats();

  ControlSolution sol;
  sol.mode = problem.mode;
  sol.stop_threshold = options.tol * std::pow(mesh.h(), 0.5 * mesh.dim());
  const Vector z0 = initial ? *initial : Vector::Zero(static_cast<Eigen::Index>(space.size()));
  OptimizerResult opt = minimize_box_quadratic(functional.model(), z0,
                                               sol.stop_threshold, options);

  sol.state = options.recompute_final ? functional.state(opt.z)
                                      : NodalFunction(problem.mesh, opt.state);
  sol.adjoint = functional.adjoint(sol.state);
  const Vector r = sol.state.values - problem.desired.values;
  sol.objective = options.recompute_final
                      ? 0.5 * r.dot(functional.solver().mass() * r) +
                            0.5 * problem.mu * space.inner(opt.z, opt.z)
                      : opt.objective;
  sol.iterations = opt.iterations;
  sol.residual = opt.residual;
  sol.objective_history = std::move(opt.objective_history);
  sol.residual_history = std::move(opt.residual_history);
  sol.coefficients = std::move(opt.z);
  if (problem.mode == ControlMode::fully_discrete) {
    sol.control_p0 = CellwiseFunction(problem.mesh, sol.coefficients);
  } else {
    Vector nodal = -sol.adjoint.values / problem.mu;
    sol.control_p1 = NodalFunction(problem.mesh, project_box(nodal, problem.a, problem.b));
  }

  // Stats of this solve only.
  const SolveStats &after = functional.stats();
  sol.stats = after;
  sol.stats.n_alg1 -= before.n_alg1;
  sol.stats.n_alg2 -= before.n_alg2;
  sol.stats.preconditioner_setups -= before.preconditioner_setups;
  sol.stats.matvecs -= before.matvecs;
  sol.stats.alg1_matvecs -= before.alg1_matvecs;
  return sol;
}

ControlSolution solve_variational(const ControlProblem &problem,
                                  const OptimizerOptions &options) {
  if (problem.mode != ControlMode::variational)
    throw std::invalid_argument("solve_variational: problem is not in variational mode");
  return solve_control(ReducedFunctional(problem), options);
}

ControlSolution solve_fully_discrete(const ControlProblem &problem,
                                     const OptimizerOptions &options) {
  if (problem.mode != ControlMode::fully_discrete)
    throw std::invalid_argument("solve_fully_discrete: problem is not in fully discrete mode");
  return solve_control(ReducedFunctional(problem), options);
}

NodalFunction post_process(const ControlProblem &problem,
                           const ControlSolution &solution) {
  require_same_mesh(solution.adjoint.mesh, problem.mesh);
  return {problem.mesh,
          project_box(Vector(-solution.adjoint.values / problem.mu), problem.a,
                      problem.b)};
}

// ---------------------------------------------------------------------------
// control fields

ControlField ControlField::nodal(NodalFunction z) {
  ControlField f;
  f.kind_ = Kind::nodal;
  f.p1_ = std::move(z);
  return f;
}

ControlField ControlField::cellwise(CellwiseFunction z) {
  ControlField f;
  f.kind_ = Kind::cellwise;
  f.p0_ = std::move(z);
  return f;
}

ControlField ControlField::clamped_adjoint(NodalFunction p, double mu, double a,
                                           double b) {
  if (!(mu > 0.0) || a > b)
    throw std::invalid_argument("clamped adjoint: need mu > 0 and a <= b");
  ControlField f;
  f.kind_ = Kind::clamped;
  f.p1_ = std::move(p);
  f.mu_ = mu;
  f.a_ = a;
  f.b_ = b;
  return f;
}

const MeshPtr &ControlField::mesh() const noexcept {
  return kind_ == Kind::cellwise ? p0_.mesh : p1_.mesh;
}

double ControlField::value(std::size_t cell,
                           const std::array<double, 4> &lambda) const {
  if (kind_ == Kind::cellwise)
    return p0_.values[static_cast<Eigen::Index>(cell)];
  const Mesh &m = *p1_.mesh;
  const Cell &t = m.cell(cell);
  double v = 0.0;
  for (int i = 0; i <= m.dim(); ++i)
    v += lambda[i] * p1_.at_vertex(t[i]);
  if (kind_ == Kind::clamped)
    v = std::min(b_, std::max(a_, -v / mu_));
  return v;
}

ControlField ControlField::prolongate(const MeshPtr &fine) const {
  ControlField f = *this;
  if (kind_ == Kind::cellwise)
    f.p0_ = fracopt::prolongate(p0_, fine);
  else
    f.p1_ = fracopt::prolongate(p1_, fine);
  return f;
}

double l2_distance(const ControlField &f, const ControlField &g, int degree) {
  require_same_mesh(f.mesh(), g.mesh());
  const Mesh &m = *f.mesh();
  const SimplexQuadrature &rule = simplex_quadrature(m.dim(), degree);
  double sum = 0.0;
  for (std::size_t c = 0; c < m.num_cells(); ++c) {
    double cs = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double d = f.value(c, rule.barycentric[q]) - g.value(c, rule.barycentric[q]);
      cs += rule.weights[q] * d * d;
    }
    sum += m.cell_volume(c) * cs;
  }
  return std::sqrt(sum);
}

} // namespace fracopt
