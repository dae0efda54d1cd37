//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "fracopt/shifted_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace fracopt {

namespace {

/// Preconditioner for the scaled system built from one for A + alpha M_h:
/// (A~ + alpha~ I)^{-1} = rho M_h^{1/2} (A + alpha M_h)^{-1} M_h^{1/2}.
class ScaledPreconditioner final : public Preconditioner {
public:
  ScaledPreconditioner(std::unique_ptr<Preconditioner> inner,
                       const ScaledOperator &op)
      : inner_(std::move(inner)),
        sqrt_mass_(op.lumped_mass.cwiseSqrt()), rho_(op.rho) {}

  void apply(const Vector &r, Vector &z) override {
    tmp_ = sqrt_mass_.cwiseProduct(r);
    inner_->apply(tmp_, out_);
    z = rho_ * sqrt_mass_.cwiseProduct(out_);
  }

private:
  std::unique_ptr<Preconditioner> inner_;
  Vector sqrt_mass_;
  double rho_;
  Vector tmp_, out_;
};

std::unique_ptr<Preconditioner>
build_preconditioner(const ScaledOperator &op, double scaled_shift,
                     const ShiftedSolverOptions &options) {
  if (options.preconditioner)
    return std::make_unique<ScaledPreconditioner>(
        options.preconditioner(op.rho * scaled_shift), op);
  SparseSymMatrix shifted = op.matrix;
  for (Eigen::Index i = 0; i < shifted.rows(); ++i)
    shifted.coeffRef(i, i) += scaled_shift;
  return std::make_unique<IncompleteCholesky0>(shifted);
}

double lanczos_condition_estimate(const SparseSymMatrix &A, int steps) {
  const Eigen::Index n = A.rows();
  if (n == 0)
    return 1.0;
  steps = static_cast<int>(std::min<Eigen::Index>(steps, n));
  Vector v = Vector::Ones(n) / std::sqrt(double(n));
  Vector v_prev = Vector::Zero(n), w(n);
  std::vector<double> diag, offdiag;
  double beta = 0.0;
  for (int j = 0; j < steps; ++j) {
    w.noalias() = A * v;
    w -= beta * v_prev;
    const double a = v.dot(w);
    w -= a * v;
    diag.push_back(a);
    beta = w.norm();
    if (beta < 1e-14 || j + 1 == steps)
      break;
    offdiag.push_back(beta);
    v_prev = v;
    v = w / beta;
  }
  const Eigen::Index k = static_cast<Eigen::Index>(diag.size());
  Vector d = Eigen::Map<Vector>(diag.data(), k);
  Vector e = offdiag.empty() ? Vector(0)
                             : Vector(Eigen::Map<Vector>(offdiag.data(), k - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

} // namespace

void SolveStats::accumulate(const SolveStats &other) {
  n_alg1 += other.n_alg1;
  n_alg2 += other.n_alg2;
  preconditioner_setups += other.preconditioner_setups;
  matvecs += other.matvecs;
  alg1_matvecs += other.alg1_matvecs;
}

Vector ShiftedFamily::unnormalize(const Vector &scaled_solution) const {
  return op->inv_sqrt_mass.cwiseProduct(scaled_solution);
}

std::shared_ptr<const ScaledOperator>
scale_operator(const SparseSymMatrix &A, const Vector &lumped_mass,
               const ShiftList &shifts, int lanczos_steps) {
  if (A.rows() != A.cols() || A.rows() != lumped_mass.size())
    throw std::invalid_argument("scale_operator: dimension mismatch");
  if (lumped_mass.size() > 0 && !(lumped_mass.minCoeff() > 0.0))
    throw std::invalid_argument("scale_operator: nonpositive lumped mass entry");
  for (std::size_t i = 1; i < shifts.size(); ++i)
    if (!(shifts.alpha[i] > shifts.alpha[i - 1]))
      throw std::invalid_argument("scale_operator: shifts must increase with l");

  auto op = std::make_shared<ScaledOperator>();
  op->lumped_mass = lumped_mass;
  op->inv_sqrt_mass = lumped_mass.cwiseSqrt().cwiseInverse();
  const Vector &d = op->inv_sqrt_mass;
  op->matrix = d.asDiagonal() * A * d.asDiagonal();

  double rho = 0.0;
  for (Eigen::Index r = 0; r < op->matrix.outerSize(); ++r) {
    double row = 0.0;
    for (SparseSymMatrix::InnerIterator it(op->matrix, r); it; ++it)
      row += std::abs(it.value());
    rho = std::max(rho, row);
  }
  op->rho = rho > 0.0 ? rho : 1.0;
  op->matrix /= op->rho;

  op->scaled_shifts.l_min = shifts.l_min;
  op->scaled_shifts.alpha.reserve(shifts.size());
  for (double a : shifts.alpha)
    op->scaled_shifts.alpha.push_back(a / op->rho);
  op->kappa = lanczos_condition_estimate(op->matrix, lanczos_steps);
  return op;
}

ShiftedFamily make_family(std::shared_ptr<const ScaledOperator> op,
                          const Vector &rhs) {
  if (rhs.size() != op->matrix.rows())
    throw std::invalid_argument("make_family: rhs dimension mismatch");
  ShiftedFamily f;
  f.scaled_rhs = op->inv_sqrt_mass.cwiseProduct(rhs) / op->rho;
  f.op = std::move(op);
  return f;
}

ShiftedFamily normalize(const SparseSymMatrix &A, const Vector &lumped_mass,
                        const ShiftList &shifts, const Vector &rhs) {
  return make_family(scale_operator(A, lumped_mass, shifts), rhs);
}

double condition_bound(const ShiftedFamily &family, int l) {
  const double shift = family.op->scaled_shifts.at(l);
  const double by_shift = shift > 0.0 ? 1.0 / shift
                                      : std::numeric_limits<double>::infinity();
  return 1.0 + std::min(by_shift, family.op->kappa);
}

namespace {

// Shared-basis loop. `take(l, y, basis)` receives the Krylov coefficients of
// the scaled solution of system l, x = sum_i y_i basis[i]; `finish(basis)`
// runs once before the basis is released.
using CoefficientSink = std::function<void(int l, const std::vector<double> &y,
                                           const std::vector<Vector> &basis)>;
using BasisHook = std::function<void(const std::vector<Vector> &basis)>;

WellConditionedResult shared_basis_solve(const ShiftedFamily &family,
                                         const ShiftedSolverOptions &options,
                                         const CoefficientSink &take,
                                         const SolutionSink &zero_sink,
                                         const BasisHook &finish) {
  if (options.max_krylov < 1)
    throw std::invalid_argument("max_krylov must be at least 1");
  const ScaledOperator &op = *family.op;
  const int l_min = family.l_min(), l_max = family.l_max();
  const Eigen::Index n = op.matrix.rows();

  WellConditionedResult result;
  SolveStats &stats = result.stats;
  stats.l_min = l_min;
  stats.iterations.assign(family.size(), 0);

  const double beta0 = family.scaled_rhs.norm();
  if (beta0 == 0.0 || n == 0) {
    for (int l = l_max; l >= l_min; --l) {
      zero_sink(l, Vector::Zero(n));
      ++stats.n_alg1;
    }
    result.crossover = l_min - 1;
    stats.crossover = result.crossover;
    return result;
  }

  // Lanczos basis v_1..v_{k+1}, T_k = tridiag(beta, alpha, beta).
  std::vector<Vector> basis;
  basis.reserve(static_cast<std::size_t>(options.max_krylov) + 1);
  basis.push_back(family.scaled_rhs / beta0);
  std::vector<double> alpha, beta;
  bool exhausted = false;
  Vector w(n);

  auto extend = [&]() {
    const std::size_t j = alpha.size();
    w.noalias() = op.matrix * basis[j];
    ++stats.matvecs;
    ++stats.alg1_matvecs;
    if (j > 0)
      w -= beta[j - 1] * basis[j - 1];
    const double a = basis[j].dot(w);
    w -= a * basis[j];
    const double b = w.norm();
    alpha.push_back(a);
    beta.push_back(b);
    if (b <= 1e-13 * (std::abs(a) + (j > 0 ? beta[j - 1] : 0.0)) || b == 0.0) {
      exhausted = true;
      basis.emplace_back(Vector::Zero(n));
    } else {
      basis.emplace_back(w / b);
    }
  };

  const double tol = options.rtol * options.recursive_residual_safety * beta0;
  const auto cap = static_cast<std::size_t>(options.max_krylov);
  std::vector<double> D;
  D.reserve(cap);
  int l = l_max;
  for (; l >= l_min; --l) {
    const double sigma = op.scaled_shifts.at(l);
    D.clear();
    double res = beta0;
    std::size_t k = 0;
    bool converged = false;
    while (!converged) {
      if (k == alpha.size()) {
        if (exhausted || alpha.size() >= cap)
          break;
        extend();
      }
      const double Dk = alpha[k] + sigma -
                        (k > 0 ? beta[k - 1] * beta[k - 1] / D[k - 1] : 0.0);
      if (!(Dk > 0.0)) {
        std::ostringstream msg;
        msg << "shifted CG breakdown (nonpositive curvature " << Dk
            << ") at system l=" << l << ", step " << k + 1
            << "; the operator is not SPD";
        throw SolverError(msg.str());
      }
      D.push_back(Dk);
      res *= beta[k] / Dk;
      ++k;
      converged = res <= tol || (exhausted && k == alpha.size());
    }
    if (!converged)
      break;

    // (T_k + sigma I) y = beta0 e_1 through the LDL^T factors above.
    std::vector<double> y(k);
    y[0] = beta0;
    for (std::size_t i = 1; i < k; ++i)
      y[i] = -(beta[i - 1] / D[i - 1]) * y[i - 1];
    y[k - 1] /= D[k - 1];
    for (std::size_t i = k - 1; i-- > 0;)
      y[i] = y[i] / D[i] - (beta[i] / D[i]) * y[i + 1];

    stats.iterations[static_cast<std::size_t>(l - l_min)] = static_cast<int>(k);
    ++stats.n_alg1;
    take(l, y, basis);
    if (alpha.size() >= cap && !exhausted) {
      --l;
      break;
    }
  }
  if (finish)
    finish(basis);
  result.crossover = l;
  stats.crossover = l;
  return result;
}

} // namespace

WellConditionedResult solve_well_conditioned(const ShiftedFamily &family,
                                             const ShiftedSolverOptions &options,
                                             const SolutionSink &sink) {
  const Eigen::Index n = family.op->matrix.rows();
  return shared_basis_solve(
      family, options,
      [&](int l, const std::vector<double> &y, const std::vector<Vector> &basis) {
        Vector x = Vector::Zero(n);
        for (std::size_t i = 0; i < y.size(); ++i)
          x.noalias() += y[i] * basis[i];
        sink(l, x);
      },
      sink, nullptr);
}

WellConditionedResult solve_well_conditioned_sum(const ShiftedFamily &family,
                                                 const ShiftedSolverOptions &options,
                                                 const std::function<double(int)> &weight,
                                                 Vector &sum) {
  const Eigen::Index n = family.op->matrix.rows();
  sum = Vector::Zero(n);
  std::vector<double> coef;
  return shared_basis_solve(
      family, options,
      [&](int l, const std::vector<double> &y, const std::vector<Vector> &) {
        if (coef.size() < y.size())
          coef.resize(y.size(), 0.0);
        const double w = weight(l);
        for (std::size_t i = 0; i < y.size(); ++i)
          coef[i] += w * y[i];
      },
      [](int, const Vector &) {},
      [&](const std::vector<Vector> &basis) {
        for (std::size_t i = 0; i < coef.size(); ++i)
          sum.noalias() += coef[i] * basis[i];
      });
}

int conjugate_gradient(const std::function<void(const Vector &, Vector &)> &apply,
                       const Vector &b, Vector &x, double rtol,
                       int max_iterations, Preconditioner *preconditioner,
                       long *matvecs) {
  const Eigen::Index n = b.size();
  if (x.size() != n)
    x = Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    return 0;
  }
  const double tol = rtol * bnorm;
  Vector r(n), z(n), p(n), q(n);
  auto count = [&] {
    if (matvecs)
      ++*matvecs;
  };
  apply(x, q);
  count();
  r = b - q;
  int it = 0;
  while (true) {
    // (re)start from the current residual
    if (r.norm() <= tol)
      return it;
    if (preconditioner)
      preconditioner->apply(r, z);
    else
      z = r;
    p = z;
    double rz = r.dot(z);
    bool recursive_converged = false;
    while (it < max_iterations) {
      apply(p, q);
      count();
      const double curvature = p.dot(q);
      if (!(curvature > 0.0))
        throw SolverError("CG breakdown: nonpositive curvature");
      const double step = rz / curvature;
      x.noalias() += step * p;
      r.noalias() -= step * q;
      ++it;
      if (r.norm() <= tol) {
        recursive_converged = true;
        break;
      }
      if (preconditioner)
        preconditioner->apply(r, z);
      else
        z = r;
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    // Confirm with the true residual.
    apply(x, q);
    count();
    r = b - q;
    if (r.norm() <= tol)
      return it;
    if (!recursive_converged || it >= max_iterations) {
      std::ostringstream msg;
      msg << "CG did not converge in " << max_iterations
          << " iterations (relative residual " << r.norm() / bnorm << ")";
      throw SolverError(msg.str());
    }
  }
}

SolveStats solve_preconditioned(const ShiftedFamily &family, int crossover,
                                const ShiftedSolverOptions &options,
                                const SolutionSink &sink) {
  const ScaledOperator &op = *family.op;
  const int l_min = family.l_min();
  const Eigen::Index n = op.matrix.rows();

  SolveStats stats;
  stats.l_min = l_min;
  stats.crossover = crossover;
  stats.iterations.assign(family.size(), 0);

  std::unique_ptr<Preconditioner> precond;
  int last_iterations = options.iter_cap + 1;
  Vector x = Vector::Zero(n);
  const int max_iterations = options.stagnation_factor * std::max(1, options.iter_cap);

  for (int l = l_min; l <= crossover; ++l) {
    const double sigma = op.scaled_shifts.at(l);
    auto apply = [&](const Vector &v, Vector &out) {
      out.noalias() = op.matrix * v;
      out += sigma * v;
    };
    bool fresh = false;
    if (last_iterations > options.iter_cap) {
      precond = build_preconditioner(op, sigma, options);
      ++stats.preconditioner_setups;
      fresh = true;
    }
    int total = 0;
    while (true) {
      try {
        total += conjugate_gradient(apply, family.scaled_rhs, x, options.rtol,
                                    max_iterations, precond.get(),
                                    &stats.matvecs);
        break;
      } catch (const SolverError &e) {
        total += max_iterations;
        if (fresh) {
          std::ostringstream msg;
          msg << "preconditioned CG stagnated at system l=" << l
              << " (scaled shift " << sigma << ", condition bound "
              << condition_bound(family, l) << ") after rebuilding the "
              << "preconditioner: " << e.what();
          throw SolverError(msg.str());
        }
        precond = build_preconditioner(op, sigma, options);
        ++stats.preconditioner_setups;
        fresh = true;
      }
    }
    last_iterations = total;
    stats.iterations[static_cast<std::size_t>(l - l_min)] = total;
    ++stats.n_alg2;
    sink(l, x);
  }
  return stats;
}

SolveStats solve_family(const ShiftedFamily &family,
                        const ShiftedSolverOptions &options,
                        const SolutionSink &sink) {
  auto unscaled = [&](int l, const Vector &v) { sink(l, family.unnormalize(v)); };
  WellConditionedResult well = solve_well_conditioned(family, options, unscaled);
  SolveStats stats = well.stats;
  if (well.crossover >= family.l_min()) {
    SolveStats pre =
        solve_preconditioned(family, well.crossover, options, unscaled);
    stats.accumulate(pre);
    for (std::size_t i = 0; i < stats.iterations.size(); ++i)
      stats.iterations[i] += pre.iterations[i];
  }
  stats.crossover = well.crossover;
  return stats;
}

SolveStats solve_family_sum(const ShiftedFamily &family,
                            const ShiftedSolverOptions &options,
                            const std::function<double(int)> &weight,
                            Vector &sum) {
  Vector scaled;
  WellConditionedResult well =
      solve_well_conditioned_sum(family, options, weight, scaled);
  SolveStats stats = well.stats;
  if (well.crossover >= family.l_min()) {
    SolveStats pre = solve_preconditioned(
        family, well.crossover, options,
        [&](int l, const Vector &v) { scaled.noalias() += weight(l) * v; });
    stats.accumulate(pre);
    for (std::size_t i = 0; i < stats.iterations.size(); ++i)
      stats.iterations[i] += pre.iterations[i];
  }
  stats.crossover = well.crossover;
  sum = family.unnormalize(scaled);
  return stats;
}

FamilySolution solve_family(const SparseSymMatrix &A, const Vector &lumped_mass,
                            const ShiftList &shifts, const Vector &rhs,
                            const ShiftedSolverOptions &options) {
  const ShiftedFamily family =
      make_family(scale_operator(A, lumped_mass, shifts, options.lanczos_steps),
                  rhs);
  FamilySolution out;
  out.l_min = shifts.l_min;
  out.solutions.resize(shifts.size());
  out.stats = solve_family(family, options, [&](int l, const Vector &v) {
    out.solutions[static_cast<std::size_t>(l - shifts.l_min)] = v;
  });
  return out;
}

void write_stats_csv_header(std::ostream &out) {
  out << "N_omega,s,N_alpha,n_alg1,n_alg2,n_amg_setups\n";
}

void write_stats_csv_row(std::ostream &out, std::size_t n_omega, double s,
                         const SolveStats &stats) {
  out << n_omega << ',' << s << ',' << stats.systems() << ',' << stats.n_alg1
      << ',' << stats.n_alg2 << ',' << stats.preconditioner_setups << '\n';
}

} // namespace fracopt
