//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracopt/fe_space.hpp"
#include "fracopt/fractional.hpp"

namespace fracopt {

/// variational: the control is not discretized; it is carried at the points
/// of a degree-4 cell quadrature and ends up as proj(-p_h/mu).
/// fully_discrete: piecewise constant controls.
enum class ControlMode { variational, fully_discrete };

const char *to_string(ControlMode mode);
ControlMode parse_control_mode(const std::string &name);

enum class OptimizerKind { projected_gradient, projected_lbfgs };

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::projected_gradient;
  double tol = 1e-5;         // stop at ||z - proj(z - g)||_l2 <= tol * sqrt(h^n)
  int max_iterations = 5000;
  double armijo = 1e-4;
  int max_backtracks = 30;
  int lbfgs_memory = 10;
  /// Recompute state and adjoint from the final control instead of keeping
  /// the incrementally updated ones.
  bool recompute_final = true;
};

/// min 1/2 |u - u_d|^2 + mu/2 z^T W z over min <= z <= max, J(u) with
/// u = S z linear. Describes the problem through the three maps below.
struct BoxQuadraticModel {
  Vector weights;  // W, diagonal Gram matrix of the control space
  double mu = 1.0;
  double lower = 0.0, upper = 0.0;
  /// u = S z (any state representation)
  std::function<Vector(const Vector &z)> state;
  /// Riesz representative of d/dz 1/2 |S z - u_d|^2 given r = S z - u_d
  std::function<Vector(const Vector &r)> adjoint;
  /// State inner product (x, y)
  std::function<double(const Vector &x, const Vector &y)> state_inner;
  Vector desired;  // u_d
};

struct OptimizerResult {
  Vector z;
  Vector state;          // S z
  Vector adjoint;        // S^*(S z - u_d), Riesz form
  double objective = 0.0;
  int iterations = 0;
  double residual = 0.0; // final ||z - proj(z - g)||_l2
  std::vector<double> objective_history; // J at every accepted iterate
  std::vector<double> residual_history;
};

/// Raised when the optimizer does not reach its tolerance.
class OptimizationError : public std::runtime_error {
public:
  OptimizationError(const std::string &what, std::vector<double> residuals)
      : std::runtime_error(what), residual_history(std::move(residuals)) {}
  std::vector<double> residual_history;
};

/// Projected gradient (Barzilai-Borwein steps) or projected L-BFGS with an
/// Armijo search along the feasible segment. Two applications of S per
/// iteration. `stop` is the absolute l2 threshold on the projected gradient.
OptimizerResult minimize_box_quadratic(const BoxQuadraticModel &model,
                                       const Vector &z0, double stop,
                                       const OptimizerOptions &options);

struct ControlProblem {
  MeshPtr mesh;
  double s = 0.5;
  double mu = 0.1;
  double a = -0.8, b = 0.8;
  NodalFunction desired;  // u_d
  ControlMode mode = ControlMode::fully_discrete;
  FractionalOptions fractional;

  /// Throws std::invalid_argument unless mu > 0, a <= 0 <= b and u_d lives
  /// on `mesh`.
  void validate() const;
};

/// Control coefficients with a diagonal Gram matrix W: cell values (P0) or
/// values at cell quadrature points (variational). load() maps a control to
/// its load vector (z, phi_i); evaluate() samples a P1 function at the
/// control points, which is the Riesz map of (p, .) for the control space.
class ControlSpace {
public:
  ControlSpace(MeshPtr mesh, ControlMode mode, int degree = 4);

  ControlMode mode() const noexcept { return mode_; }
  const MeshPtr &mesh() const noexcept { return mesh_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  const Vector &weights() const noexcept { return weights_; }
  std::size_t cell_of(std::size_t j) const { return cell_[j]; }
  /// Barycentric coordinates of control point j (cell centroid for P0).
  const std::array<double, 4> &barycentric(std::size_t j) const { return lambda_[j]; }

  Vector load(const Vector &z) const;
  Vector evaluate(const NodalFunction &p) const;
  Vector sample(const PointFunction &f) const;
  double inner(const Vector &y, const Vector &z) const;

private:
  MeshPtr mesh_;
  ControlMode mode_;
  Vector weights_;
  std::vector<std::size_t> cell_;
  std::vector<std::array<double, 4>> lambda_;
  SparseSymMatrix load_; // dofs x controls
  Eigen::SparseMatrix<double> load_t_;
};

/// Box projection min{b, max{a, v}}; rejects a > b.
double project_box(double v, double a, double b);
Vector project_box(const Vector &v, double a, double b);
NodalFunction project_box(const NodalFunction &v, double a, double b);
CellwiseFunction project_box(const CellwiseFunction &v, double a, double b);

/// J_h(z) = 1/2 |S_h z - u_d|^2_M + mu/2 |z|^2_W and its gradient
/// p_h(z) + mu z (Q_h p_h + mu z for P0 controls).
class ReducedFunctional {
public:
  explicit ReducedFunctional(ControlProblem problem);
  ReducedFunctional(ControlProblem problem,
                    std::shared_ptr<const FractionalSolver> solver);

  const ControlProblem &problem() const noexcept { return problem_; }
  const ControlSpace &space() const noexcept { return space_; }
  const FractionalSolver &solver() const noexcept { return *solver_; }
  const std::shared_ptr<const FractionalSolver> &solver_ptr() const noexcept {
    return solver_;
  }
  const SolveStats &stats() const noexcept { return *stats_; }

  /// u = S_h z
  NodalFunction state(const Vector &z) const;
  /// p = S_h (u - u_d)
  NodalFunction adjoint(const NodalFunction &u) const;
  double objective(const Vector &z) const;
  Vector gradient(const Vector &z) const;

  BoxQuadraticModel model() const;

private:
  ControlProblem problem_;
  std::shared_ptr<const FractionalSolver> solver_;
  ControlSpace space_;
  std::shared_ptr<SolveStats> stats_;
};

double objective(const ControlProblem &problem, const Vector &z);
Vector reduced_gradient(const ControlProblem &problem, const Vector &z);

struct ControlSolution {
  ControlMode mode = ControlMode::fully_discrete;
  Vector coefficients;       // optimizer variables, ControlSpace layout
  CellwiseFunction control_p0;  // fully discrete mode
  NodalFunction control_p1;  // variational mode: nodal values of proj(-p/mu)
  NodalFunction state;
  NodalFunction adjoint;
  double objective = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double stop_threshold = 0.0;
  std::vector<double> objective_history;
  std::vector<double> residual_history;
  SolveStats stats;
};

ControlSolution solve_control(const ReducedFunctional &functional,
                              const OptimizerOptions &options = {},
                              const std::optional<Vector> &initial = {});
ControlSolution solve_variational(const ControlProblem &problem,
                                  const OptimizerOptions &options = {});
ControlSolution solve_fully_discrete(const ControlProblem &problem,
                                     const OptimizerOptions &options = {});

/// proj_[a,b](-p/mu) at the nodes of the P1 adjoint.
NodalFunction post_process(const ControlProblem &problem,
                           const ControlSolution &solution);

/// Pointwise description of a control for error measurement: a P1 or P0
/// function, or the clamped adjoint proj(-p/mu) evaluated at every point.
class ControlField {
public:
  static ControlField nodal(NodalFunction z);
  static ControlField cellwise(CellwiseFunction z);
  static ControlField clamped_adjoint(NodalFunction p, double mu, double a,
                                      double b);

  const MeshPtr &mesh() const noexcept;
  double value(std::size_t cell, const std::array<double, 4> &lambda) const;
  /// Same field on a nested finer mesh.
  ControlField prolongate(const MeshPtr &fine) const;

private:
  enum class Kind { nodal, cellwise, clamped } kind_ = Kind::nodal;
  NodalFunction p1_;
  CellwiseFunction p0_;
  double mu_ = 1.0, a_ = 0.0, b_ = 0.0;
};

/// ||f - g||_L2 with a per-cell rule of the given degree; both fields must
/// live on the same mesh.
double l2_distance(const ControlField &f, const ControlField &g, int degree = 4);

} // namespace fracopt
