//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "fracopt/fractional.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace fracopt {

ShiftedSolverOptions FractionalOptions::solver_options(int dim) const {
  ShiftedSolverOptions o;
  o.max_krylov = max_krylov.value_or(dim == 3 ? 250 : 500);
  o.rtol = rtol;
  o.iter_cap = iter_cap;
  return o;
}

FractionalSolver::FractionalSolver(MeshPtr mesh, FractionalOptions options)
    : mesh_(std::move(mesh)), options_(std::move(options)) {
  if (!mesh_)
    throw std::invalid_argument("FractionalSolver: null mesh");
  quadrature_ = options_.k ? make_sinc_quadrature(options_.s, *options_.k)
                           : quadrature_for_mesh(options_.s, mesh_->h(),
                                                 options_.c_k, options_.step_rule);
  stiffness_ = assemble_stiffness(*mesh_);
  mass_ = assemble_mass(*mesh_);
  lumped_ = fracopt::lumped_mass(*mesh_);
  solver_options_ = options_.solver_options(mesh_->dim());
  scaled_ = scale_operator(stiffness_, lumped_, quadrature_.shifts(),
                           solver_options_.lanczos_steps);
  if (options_.preconditioner == PreconditionerKind::multigrid &&
      mesh_->num_dofs() > 0)
    solver_options_.preconditioner = multigrid_factory(
        std::make_shared<MultigridHierarchy>(*mesh_), options_.multigrid);
}

FractionalSolveResult FractionalSolver::solve_load(const Vector &load) const {
  if (load.size() != static_cast<Eigen::Index>(mesh_->num_dofs()))
    throw std::invalid_argument("fractional solve: load vector size mismatch");
  Vector u;
  const ShiftedFamily family = make_family(scaled_, load);
  SolveStats stats = solve_family_sum(
      family, solver_options_, [&](int l) { return quadrature_.weight(l); }, u);
  return {NodalFunction(mesh_, std::move(u)), std::move(stats), quadrature_};
}

FractionalSolveResult FractionalSolver::solve(const NodalFunction &z) const {
  require_same_mesh(z.mesh, mesh_);
  return solve_load(mass_ * z.values);
}

FractionalSolveResult FractionalSolver::solve(const CellwiseFunction &z) const {
  require_same_mesh(z.mesh, mesh_);
  return solve_load(assemble_load(z));
}

FractionalSolveResult fractional_solve(const MeshPtr &mesh, const Vector &load,
                                       const FractionalOptions &options) {
  return FractionalSolver(mesh, options).solve_load(load);
}

FractionalSolveResult fractional_solve(const NodalFunction &z,
                                       const FractionalOptions &options) {
  return FractionalSolver(z.mesh, options).solve(z);
}

FractionalSolveResult fractional_solve(const CellwiseFunction &z,
                                       const FractionalOptions &options) {
  return FractionalSolver(z.mesh, options).solve(z);
}

SpectralOracle::SpectralOracle(MeshPtr mesh) : mesh_(std::move(mesh)) {
  const std::size_t n = mesh_->num_dofs();
  if (n > max_dofs)
    throw std::length_error("spectral oracle refuses " + std::to_string(n) +
                            " dofs (limit " + std::to_string(max_dofs) + ")");
  const SparseSymMatrix A = assemble_stiffness(*mesh_);
  const Vector lumped = lumped_mass(*mesh_);
  inv_sqrt_mass_ = lumped.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled =
      inv_sqrt_mass_.asDiagonal() * Eigen::MatrixXd(A) *
      inv_sqrt_mass_.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("spectral oracle: eigendecomposition failed");
  eigenvalues_ = eig.eigenvalues();
  eigenvectors_ = eig.eigenvectors();
}

NodalFunction SpectralOracle::solve_load(double s, const Vector &load) const {
  if (!(s >= 0.0 && s <= 1.0))
    throw std::invalid_argument("spectral oracle: s must lie in [0, 1]");
  const Vector coeff = eigenvectors_.transpose() *
                       inv_sqrt_mass_.cwiseProduct(load);
  const Vector scaled =
      coeff.cwiseProduct(eigenvalues_.array().pow(-s).matrix());
  Vector u = inv_sqrt_mass_.cwiseProduct(eigenvectors_ * scaled);
  return {mesh_, std::move(u)};
}

NodalFunction SpectralOracle::solve(double s, const NodalFunction &z) const {
  require_same_mesh(z.mesh, mesh_);
  return solve_load(s, assemble_mass(*mesh_) * z.values);
}

Eigen::MatrixXd SpectralOracle::eigenfunctions() const {
  return inv_sqrt_mass_.asDiagonal() * eigenvectors_;
}

NodalFunction spectral_oracle_solve(const MeshPtr &mesh, double s,
                                    const Vector &load) {
  return SpectralOracle(mesh).solve_load(s, load);
}

} // namespace fracopt
