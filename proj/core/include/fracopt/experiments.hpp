//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fracopt/control.hpp"
#include "fracopt/fractional.hpp"

namespace fracopt {

enum class ExperimentKind { state_convergence, control_convergence, solver_stats };

/// Mesh levels are given by cells per side m; a study runs m = level_min,
/// 2 level_min, ..., level_max against a solution on m = reference.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::state_convergence;
  int dim = 2;
  std::vector<double> s_values {0.25};
  int level_min = 8;
  int level_max = 128;
  int reference = 512;
  double mu = 0.1;
  double a = -0.8, b = 0.8;
  double c_k = 1.1;
  StepRule step_rule = StepRule::log_two_over_h;
  double rtol = 1e-8;       // shifted-system tolerance
  double opt_tol = 1e-5;    // optimizer stopping tolerance
  bool fully_discrete = true;
  bool post_process = true;
  bool variational = false;
  OptimizerKind optimizer = OptimizerKind::projected_gradient;
  std::filesystem::path output_dir;  // empty: no files
  std::filesystem::path cache_dir;   // empty: references are not cached
  int threads = 1;
  bool verbose = false;

  std::vector<int> levels() const;
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  FractionalOptions fractional(double s) const;
};

struct RateRow {
  std::size_t n_omega = 0;  // vertex count
  double h = 0.0;
  double error = 0.0;
  std::optional<double> rate;
};

struct RateSeries {
  std::string name;
  double s = 0.0;
  std::vector<RateRow> rows;

  /// Last rate, or nullopt.
  std::optional<double> asymptotic_rate() const;
};

struct RateTable {
  std::vector<RateSeries> series;

  const RateSeries &find(const std::string &name, double s) const;
  /// series,s,N_omega,h,error,rate
  void write_csv(std::ostream &out) const;
  /// One table per s, rows N_omega followed by error/rate column pairs.
  void write_text(std::ostream &out) const;
  /// One "h error" data file per series for gnuplot.
  void write_plot_data(const std::filesystem::path &dir,
                       const std::string &prefix) const;
};

/// r_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i); the first rate is 0 and a
/// rate involving a zero error is undefined.
std::vector<std::optional<double>> compute_rates(const std::vector<double> &errors,
                                                 const std::vector<double> &hs);

/// e_L2^{1-s} e_H1^s
double hs_error_surrogate(double e_l2, double e_h1, double s);

/// Interpolant of min(0.25, f0), f0 = 0.5 times the hat function of the
/// center vertex of the m = 2 mesh. The mesh must be nested with it.
NodalFunction hat_rhs(const MeshPtr &mesh);

/// sin(2 pi x) sin(2 pi y) [sin(2 pi z)]
double sine_eigenfunction(const Point &x, int dim);

RateTable run_state_convergence(const ExperimentConfig &config);
RateTable run_control_convergence(const ExperimentConfig &config);

struct SolverStatsRow {
  std::size_t n_omega = 0;
  int cells_per_side = 0;
  double s = 0.0;
  SincQuadrature quadrature;
  SolveStats stats;
  double seconds = 0.0;
};

std::vector<SolverStatsRow> run_solver_stats(const ExperimentConfig &config);
void write_solver_stats_csv(std::ostream &out, const std::vector<SolverStatsRow> &rows);

} // namespace fracopt
