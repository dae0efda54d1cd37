//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fracopt/fe_space.hpp"
#include "fracopt/mesh.hpp"

namespace fracopt {

/// Symmetric positive definite approximate inverse. apply() may use internal
/// scratch space, so an instance must not be shared between threads.
class Preconditioner {
public:
  virtual ~Preconditioner() = default;
  /// z = P r
  virtual void apply(const Vector &r, Vector &z) = 0;
};

/// Builds a preconditioner for A + alpha * M_h.
using PreconditionerFactory =
    std::function<std::unique_ptr<Preconditioner>(double alpha)>;

class IdentityPreconditioner final : public Preconditioner {
public:
  void apply(const Vector &r, Vector &z) override { z = r; }
};

/// Incomplete Cholesky factorization with the sparsity pattern of the lower
/// triangle of the matrix (no fill-in).
class IncompleteCholesky0 final : public Preconditioner {
public:
  explicit IncompleteCholesky0(const SparseSymMatrix &matrix);
  void apply(const Vector &r, Vector &z) override;

private:
  SparseSymMatrix lower_; // row-major, diagonal stored last in each row
};

/// Geometric data of a nested structured mesh sequence: P1 prolongations and
/// Galerkin coarse stiffness/mass operators. Independent of the shift, so one
/// hierarchy serves every preconditioner setup for a mesh.
class MultigridHierarchy {
public:
  /// Coarsens by factors of two while the grid stays even and the level has
  /// more than `coarse_dofs` unknowns.
  explicit MultigridHierarchy(const Mesh &fine, std::size_t coarse_dofs = 64);

  std::size_t num_levels() const noexcept { return stiffness_.size(); }
  std::size_t dofs(std::size_t level) const {
    return static_cast<std::size_t>(stiffness_[level].rows());
  }

private:
  friend class GeometricMultigrid;
  // Index 0 is the coarsest level.
  std::vector<SparseSymMatrix> stiffness_;
  std::vector<SparseSymMatrix> mass_;
  std::vector<SparseSymMatrix> prolongation_; // level i -> i+1
};

struct MultigridOptions {
  int cycles = 2;
  int pre_smooth = 2;
  int post_smooth = 2;
  double jacobi_weight = 2.0 / 3.0;
};

/// V-cycle preconditioner for A + alpha M_h with damped Jacobi smoothing and
/// an exact dense solve on the coarsest level. Symmetric pre/post smoothing
/// keeps the operator symmetric.
class GeometricMultigrid final : public Preconditioner {
public:
  GeometricMultigrid(std::shared_ptr<const MultigridHierarchy> hierarchy,
                     double alpha, MultigridOptions options = {});
  void apply(const Vector &r, Vector &z) override;

private:
  void vcycle(std::size_t level, const Vector &b, Vector &x);

  std::shared_ptr<const MultigridHierarchy> hierarchy_;
  MultigridOptions options_;
  std::vector<SparseSymMatrix> ops_;
  std::vector<Vector> inv_diag_;
  Eigen::LLT<Eigen::MatrixXd> coarse_;
  std::vector<Vector> res_, rc_, ec_;
};

/// Factory for GeometricMultigrid on a fixed mesh hierarchy.
PreconditionerFactory multigrid_factory(
    std::shared_ptr<const MultigridHierarchy> hierarchy,
    MultigridOptions options = {});

} // namespace fracopt
