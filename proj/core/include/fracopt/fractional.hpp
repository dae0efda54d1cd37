//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "fracopt/fe_space.hpp"
#include "fracopt/preconditioner.hpp"
#include "fracopt/shifted_solver.hpp"
#include "fracopt/sinc_quadrature.hpp"

namespace fracopt {

enum class PreconditionerKind { multigrid, incomplete_cholesky };

/// Options of the discrete fractional solve u = S_h z.
struct FractionalOptions {
  double s = 0.5;
  double c_k = 1.1;               // k = c_k / ln(2/h)
  StepRule step_rule = StepRule::log_two_over_h;
  std::optional<double> k;        // explicit sinc step, overrides c_k
  double rtol = 1e-8;
  std::optional<int> max_krylov;  // N_max; 500 in 2D, 250 in 3D when unset
  int iter_cap = 20;
  PreconditionerKind preconditioner = PreconditionerKind::multigrid;
  MultigridOptions multigrid;

  ShiftedSolverOptions solver_options(int dim) const;
};

struct FractionalSolveResult {
  NodalFunction u;
  SolveStats stats;
  SincQuadrature quadrature;
};

/// Discrete solution operator S_h of the spectral fractional Laplacian on one
/// mesh: u = sum_l w_l V^l with (A + alpha_l M_h) V^l = Z, where Z is the load
/// vector of the data. Holds the assembled matrices, the scaled operator and
/// the multigrid hierarchy; solve() is const and reentrant.
class FractionalSolver {
public:
  FractionalSolver(MeshPtr mesh, FractionalOptions options);

  FractionalSolveResult solve_load(const Vector &load) const;
  FractionalSolveResult solve(const NodalFunction &z) const;
  FractionalSolveResult solve(const CellwiseFunction &z) const;

  const MeshPtr &mesh() const noexcept { return mesh_; }
  const FractionalOptions &options() const noexcept { return options_; }
  const SincQuadrature &quadrature() const noexcept { return quadrature_; }
  const SparseSymMatrix &stiffness() const noexcept { return stiffness_; }
  const SparseSymMatrix &mass() const noexcept { return mass_; }
  const Vector &lumped_mass() const noexcept { return lumped_; }
  const std::shared_ptr<const ScaledOperator> &scaled_operator() const noexcept {
    return scaled_;
  }
  const ShiftedSolverOptions &solver_options() const noexcept { return solver_options_; }

private:
  MeshPtr mesh_;
  FractionalOptions options_;
  SincQuadrature quadrature_;
  SparseSymMatrix stiffness_, mass_;
  Vector lumped_;
  std::shared_ptr<const ScaledOperator> scaled_;
  ShiftedSolverOptions solver_options_;
};

FractionalSolveResult fractional_solve(const MeshPtr &mesh, const Vector &load,
                                       const FractionalOptions &options);
FractionalSolveResult fractional_solve(const NodalFunction &z,
                                       const FractionalOptions &options);
FractionalSolveResult fractional_solve(const CellwiseFunction &z,
                                       const FractionalOptions &options);

/// Exact fractional powers of the lumped-mass discrete Laplacian
/// L_h = M_h^{-1} A through a dense eigendecomposition of
/// M_h^{-1/2} A M_h^{-1/2}. Validation only.
class SpectralOracle {
public:
  static constexpr std::size_t max_dofs = 5000;

  /// Throws std::length_error above max_dofs.
  explicit SpectralOracle(MeshPtr mesh);

  /// u = M_h^{-1/2} Q Lambda^{-s} Q^T M_h^{-1/2} Z for s in [0, 1].
  NodalFunction solve_load(double s, const Vector &load) const;
  NodalFunction solve(double s, const NodalFunction &z) const;

  const Vector &eigenvalues() const noexcept { return eigenvalues_; }
  /// Eigenvectors of L_h normalized in the M_h inner product (columns).
  Eigen::MatrixXd eigenfunctions() const;

private:
  MeshPtr mesh_;
  Vector inv_sqrt_mass_;
  Vector eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

NodalFunction spectral_oracle_solve(const MeshPtr &mesh, double s,
                                    const Vector &load);

} // namespace fracopt
