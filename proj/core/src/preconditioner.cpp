//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "fracopt/preconditioner.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fracopt {

IncompleteCholesky0::IncompleteCholesky0(const SparseSymMatrix &matrix) {
  const Eigen::Index n = matrix.rows();
  // Lower triangle, sorted columns, diagonal last in each row.
  SparseSymMatrix L = matrix.triangularView<Eigen::Lower>();
  L.makeCompressed();
  const int *outer = L.outerIndexPtr();
  const int *inner = L.innerIndexPtr();
  double *val = L.valuePtr();

  for (Eigen::Index i = 0; i < n; ++i) {
    const int row_begin = outer[i], row_end = outer[i + 1];
    if (row_end == row_begin || inner[row_end - 1] != i)
      throw std::runtime_error("IC(0): missing diagonal entry in row " +
                               std::to_string(i));
    for (int p = row_begin; p < row_end; ++p) {
      const int k = inner[p];
      // dot(L(i, 0:k-1), L(k, 0:k-1)) by merging the two sorted rows
      double dot = 0.0;
      int a = row_begin, b = outer[k];
      const int b_end = outer[k + 1] - 1; // skip L(k,k)
      while (a < p && b < b_end) {
        if (inner[a] == inner[b])
          dot += val[a++] * val[b++];
        else if (inner[a] < inner[b])
          ++a;
        else
          ++b;
      }
      if (k < i) {
        val[p] = (val[p] - dot) / val[outer[k + 1] - 1];
      } else {
        const double pivot = val[p] - dot;
        if (!(pivot > 0.0))
          throw std::runtime_error("IC(0): nonpositive pivot in row " +
                                   std::to_string(i));
        val[p] = std::sqrt(pivot);
      }
    }
  }
  lower_ = std::move(L);
}

void IncompleteCholesky0::apply(const Vector &r, Vector &z) {
  const Eigen::Index n = lower_.rows();
  const int *outer = lower_.outerIndexPtr();
  const int *inner = lower_.innerIndexPtr();
  const double *val = lower_.valuePtr();
  z = r;
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = z[i];
    for (int p = outer[i]; p < outer[i + 1] - 1; ++p)
      s -= val[p] * z[inner[p]];
    z[i] = s / val[outer[i + 1] - 1];
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    z[i] /= val[outer[i + 1] - 1];
    for (int p = outer[i]; p < outer[i + 1] - 1; ++p)
      z[inner[p]] -= val[p] * z[i];
  }
}

MultigridHierarchy::MultigridHierarchy(const Mesh &fine,
                                       std::size_t coarse_dofs) {
  std::vector<MeshPtr> meshes;
  int m = fine.cells_per_side();
  meshes.push_back(structured_mesh(fine.dim(), m));
  while (m % 2 == 0 && m >= 4 && meshes.back()->num_dofs() > coarse_dofs) {
    m /= 2;
    meshes.push_back(structured_mesh(fine.dim(), m));
  }
  const std::size_t nl = meshes.size();
  stiffness_.resize(nl);
  mass_.resize(nl);
  prolongation_.resize(nl - 1);

  // Finest level at the back.
  stiffness_[nl - 1] = assemble_stiffness(fine);
  const Vector lumped = fracopt::lumped_mass(fine);
  SparseSymMatrix Mh(lumped.size(), lumped.size());
  Mh.reserve(Eigen::VectorXi::Constant(lumped.size(), 1));
  for (Eigen::Index i = 0; i < lumped.size(); ++i)
    Mh.insert(i, i) = lumped[i];
  Mh.makeCompressed();
  mass_[nl - 1] = std::move(Mh);

  for (std::size_t j = nl - 1; j > 0; --j) {
    // meshes[] is ordered fine -> coarse
    const Mesh &fm = *meshes[nl - 1 - j];
    const Mesh &cm = *meshes[nl - j];
    SparseSymMatrix P = p1_prolongation(cm, fm);
    SparseSymMatrix Pt = P.transpose();
    stiffness_[j - 1] = Pt * stiffness_[j] * P;
    stiffness_[j - 1].prune(0.0);
    mass_[j - 1] = Pt * mass_[j] * P;
    mass_[j - 1].prune(0.0);
    prolongation_[j - 1] = std::move(P);
  }
}

GeometricMultigrid::GeometricMultigrid(
    std::shared_ptr<const MultigridHierarchy> hierarchy, double alpha,
    MultigridOptions options)
    : hierarchy_(std::move(hierarchy)), options_(options) {
  const std::size_t nl = hierarchy_->num_levels();
  ops_.resize(nl);
  inv_diag_.resize(nl);
  res_.resize(nl);
  rc_.resize(nl);
  ec_.resize(nl);
  for (std::size_t j = 0; j < nl; ++j) {
    ops_[j] = hierarchy_->stiffness_[j] + alpha * hierarchy_->mass_[j];
    inv_diag_[j] = ops_[j].diagonal().cwiseInverse();
    res_[j].resize(ops_[j].rows());
    if (j > 0) {
      rc_[j].resize(ops_[j - 1].rows());
      ec_[j].resize(ops_[j - 1].rows());
    }
  }
  coarse_.compute(Eigen::MatrixXd(ops_[0]));
  if (coarse_.info() != Eigen::Success)
    throw std::runtime_error("multigrid: coarse operator not SPD");
}

void GeometricMultigrid::vcycle(std::size_t level, const Vector &b, Vector &x) {
  if (level == 0) {
    x = coarse_.solve(b);
    return;
  }
  const SparseSymMatrix &B = ops_[level];
  const Vector &dinv = inv_diag_[level];
  Vector &r = res_[level];
  const double w = options_.jacobi_weight;
  for (int it = 0; it < options_.pre_smooth; ++it) {
    r.noalias() = b - B * x;
    x.array() += w * dinv.array() * r.array();
  }
  r.noalias() = b - B * x;
  const SparseSymMatrix &P = hierarchy_->prolongation_[level - 1];
  rc_[level].noalias() = P.transpose() * r;
  ec_[level].setZero();
  vcycle(level - 1, rc_[level], ec_[level]);
  x.noalias() += P * ec_[level];
  for (int it = 0; it < options_.post_smooth; ++it) {
    r.noalias() = b - B * x;
    x.array() += w * dinv.array() * r.array();
  }
}

void GeometricMultigrid::apply(const Vector &r, Vector &z) {
  const std::size_t top = ops_.size() - 1;
  z = Vector::Zero(r.size());
  for (int c = 0; c < options_.cycles; ++c)
    vcycle(top, r, z);
}

PreconditionerFactory
multigrid_factory(std::shared_ptr<const MultigridHierarchy> hierarchy,
                  MultigridOptions options) {
  return [hierarchy = std::move(hierarchy), options](double alpha) {
    return std::make_unique<GeometricMultigrid>(hierarchy, alpha, options);
  };
}

} // namespace fracopt
