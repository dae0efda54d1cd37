//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracopt/fe_space.hpp"
#include "fracopt/preconditioner.hpp"

namespace fracopt {

/// Shifts alpha_l for l = l_min .. l_min + size - 1, strictly increasing.
struct ShiftList {
  int l_min = 0;
  std::vector<double> alpha;

  int l_max() const noexcept { return l_min + static_cast<int>(alpha.size()) - 1; }
  std::size_t size() const noexcept { return alpha.size(); }
  double at(int l) const { return alpha.at(static_cast<std::size_t>(l - l_min)); }
};

/// Raised when a Krylov recurrence breaks down or stagnates.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Symmetrically scaled operator A~ = (1/rho) M_h^{-1/2} A M_h^{-1/2} with
/// rho = ||M_h^{-1/2} A M_h^{-1/2}||_inf and scaled shifts alpha_l / rho.
/// Right-hand side independent; shared by all solves on one mesh.
struct ScaledOperator {
  SparseSymMatrix matrix;  // A~
  Vector lumped_mass;      // M_h
  Vector inv_sqrt_mass;    // M_h^{-1/2}
  double rho = 1.0;
  ShiftList scaled_shifts; // alpha~_l
  double kappa = 1.0;      // Lanczos estimate of cond(A~)

  double unscaled_shift(int l) const { return rho * scaled_shifts.at(l); }
};

/// Normalized family (A~ + alpha~_l I) V~^l = Z~ with Z~ = (1/rho) M_h^{-1/2} Z.
struct ShiftedFamily {
  std::shared_ptr<const ScaledOperator> op;
  Vector scaled_rhs;

  int l_min() const noexcept { return op->scaled_shifts.l_min; }
  int l_max() const noexcept { return op->scaled_shifts.l_max(); }
  std::size_t size() const noexcept { return op->scaled_shifts.size(); }
  /// V = M_h^{-1/2} V~
  Vector unnormalize(const Vector &scaled_solution) const;
};

struct SolveStats {
  int l_min = 0;
  std::vector<int> iterations; // per system, index l - l_min
  int n_alg1 = 0;              // systems solved in the shared Krylov basis
  int n_alg2 = 0;              // systems solved by preconditioned CG
  int crossover = 0;           // N_0: largest l left to the preconditioned solver
  int preconditioner_setups = 0;
  long matvecs = 0;
  long alg1_matvecs = 0;

  int systems() const noexcept { return n_alg1 + n_alg2; }
  /// Accumulates counters of another solve (iterations are kept per-solve).
  void accumulate(const SolveStats &other);
};

struct ShiftedSolverOptions {
  int max_krylov = 500;     // N_max, basis dimension cap of the shared solver
  double rtol = 1e-8;
  int iter_cap = 20;        // PCG iterations before a preconditioner rebuild
  int stagnation_factor = 10;
  /// Shared-basis convergence is decided on the recursively updated residual;
  /// it is required to fall below safety * rtol.
  double recursive_residual_safety = 0.5;
  int lanczos_steps = 20;   // for the condition estimate only
  /// Preconditioner for A + alpha M_h; IC(0) on the scaled system if empty.
  PreconditionerFactory preconditioner;
};

/// Receives the solution of system l; scaled or unscaled depending on caller.
using SolutionSink = std::function<void(int l, const Vector &solution)>;

std::shared_ptr<const ScaledOperator>
scale_operator(const SparseSymMatrix &A, const Vector &lumped_mass,
               const ShiftList &shifts, int lanczos_steps = 20);

ShiftedFamily make_family(std::shared_ptr<const ScaledOperator> op,
                          const Vector &rhs);

/// normalize(A, M_h, alpha, Z)
ShiftedFamily normalize(const SparseSymMatrix &A, const Vector &lumped_mass,
                        const ShiftList &shifts, const Vector &rhs);

/// Upper bound 1 + min(lambda_max(A~)/alpha~_l, kappa(A~)) with lambda_max
/// bounded by 1 after scaling.
double condition_bound(const ShiftedFamily &family, int l);

struct WellConditionedResult {
  int crossover = 0;
  SolveStats stats;
};

/// Shared Krylov basis shifted CG. Solves l = l_max, l_max - 1, ... inside a
/// single Lanczos basis of (A~, Z~) grown on demand and capped at max_krylov
/// vectors; stops at the first system that needs a larger basis, or once the
/// basis is full. The scaled solutions are passed to `sink`.
WellConditionedResult solve_well_conditioned(const ShiftedFamily &family,
                                             const ShiftedSolverOptions &options,
                                             const SolutionSink &sink);

/// Same solves as solve_well_conditioned, returning only the weighted sum
/// sum_l weight(l) V~^l of the scaled solutions. The sum is formed on the
/// Krylov coefficients, so the basis is combined once instead of per system.
WellConditionedResult solve_well_conditioned_sum(const ShiftedFamily &family,
                                                 const ShiftedSolverOptions &options,
                                                 const std::function<double(int)> &weight,
                                                 Vector &sum);

/// Sequential preconditioned CG for l = l_min .. crossover. A preconditioner
/// is built for the current system whenever the previous solve needed more
/// than iter_cap iterations (and for the first system); each solve starts
/// from the solution of system l - 1. Scaled solutions go to `sink`.
SolveStats solve_preconditioned(const ShiftedFamily &family, int crossover,
                                const ShiftedSolverOptions &options,
                                const SolutionSink &sink);

/// All systems (A + alpha_l M_h) V^l = Z. Unscaled solutions are streamed to
/// `sink` in solver order.
SolveStats solve_family(const ShiftedFamily &family,
                        const ShiftedSolverOptions &options,
                        const SolutionSink &sink);

/// sum_l weight(l) V^l over all systems, unscaled.
SolveStats solve_family_sum(const ShiftedFamily &family,
                            const ShiftedSolverOptions &options,
                            const std::function<double(int)> &weight,
                            Vector &sum);

struct FamilySolution {
  int l_min = 0;
  std::vector<Vector> solutions; // index l - l_min, unscaled
  SolveStats stats;

  const Vector &at(int l) const { return solutions.at(static_cast<std::size_t>(l - l_min)); }
};

FamilySolution solve_family(const SparseSymMatrix &A, const Vector &lumped_mass,
                            const ShiftList &shifts, const Vector &rhs,
                            const ShiftedSolverOptions &options = {});

/// Plain (or preconditioned) CG on one SPD system; returns iterations.
/// Throws SolverError if max_iterations is exceeded.
int conjugate_gradient(const std::function<void(const Vector &, Vector &)> &apply,
                       const Vector &b, Vector &x, double rtol,
                       int max_iterations, Preconditioner *preconditioner = nullptr,
                       long *matvecs = nullptr);

/// CSV header and row: N_omega,s,N_alpha,n_alg1,n_alg2,n_amg_setups
void write_stats_csv_header(std::ostream &out);
void write_stats_csv_row(std::ostream &out, std::size_t n_omega, double s,
                         const SolveStats &stats);

} // namespace fracopt
