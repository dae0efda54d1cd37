//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//
// Command line driver: convergence studies, solver statistics and single
// solves. Options may also be given in a key = value config file.
//

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fracopt/control.hpp"
#include "fracopt/experiments.hpp"
#include "fracopt/fractional.hpp"
#include "fracopt/io.hpp"

using namespace fracopt;

namespace {

struct Settings {
  ExperimentConfig cfg;
  std::string levels = "8..128";
  std::string mode = "p0";
  std::string optimizer = "pg";
  std::string problem = "state";
  std::string k_rule = "2/h";
};

void parse_levels(const std::string &text, ExperimentConfig &cfg) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      cfg.level_min = cfg.level_max = std::stoi(text);
    } else {
      cfg.level_min = std::stoi(text.substr(0, dots));
      cfg.level_max = std::stoi(text.substr(dots + 2));
    }
  } catch (const std::exception &) {
    throw std::invalid_argument("--levels expects A..B, got '" + text + "'");
  }
}

void finish(Settings &st) {
  parse_levels(st.levels, st.cfg);
  if (st.mode == "both") {
    st.cfg.fully_discrete = st.cfg.variational = true;
  } else {
    const ControlMode m = parse_control_mode(st.mode);
    st.cfg.fully_discrete = m == ControlMode::fully_discrete;
    st.cfg.variational = m == ControlMode::variational;
  }
  st.cfg.step_rule = st.k_rule == "1/h" ? StepRule::log_one_over_h
                                         : StepRule::log_two_over_h;
  if (st.optimizer == "lbfgs")
    st.cfg.optimizer = OptimizerKind::projected_lbfgs;
  else if (st.optimizer == "pg")
    st.cfg.optimizer = OptimizerKind::projected_gradient;
  else
    throw std::invalid_argument("--optimizer expects pg or lbfgs");
}

void print_table(const RateTable &t) { t.write_text(std::cout); }

int run_solve(Settings &st) {
  ExperimentConfig &cfg = st.cfg;
  const MeshPtr mesh = structured_mesh(cfg.dim, cfg.level_max);
  const double s = cfg.s_values.front();
  std::filesystem::path out = cfg.output_dir.empty() ? "." : cfg.output_dir;
  std::filesystem::create_directories(out);
  if (st.problem == "state") {
    FractionalSolveResult res = fractional_solve(hat_rhs(mesh), cfg.fractional(s));
    save_nodal(out / "solution.txt", res.u);
    std::ofstream(out / "stats.json") << stats_json(res.stats) << '\n';
    write_stats_csv_header(std::cout);
    write_stats_csv_row(std::cout, mesh->num_vertices(), s, res.stats);
    return 0;
  }
  if (st.problem != "control")
    throw std::invalid_argument("--problem expects state or control");
  ControlProblem p;
  p.mesh = mesh;
  p.s = s;
  p.mu = cfg.mu;
  p.a = cfg.a;
  p.b = cfg.b;
  p.mode = cfg.variational && !cfg.fully_discrete ? ControlMode::variational
                                                  : ControlMode::fully_discrete;
  p.fractional = cfg.fractional(s);
  p.desired = interpolate(mesh, [&](const Point &x) { return sine_eigenfunction(x, cfg.dim); });
  OptimizerOptions opt;
  opt.tol = cfg.opt_tol;
  opt.kind = cfg.optimizer;
  const ControlSolution sol = solve_control(ReducedFunctional(p), opt);
  dump_control_solution(out, p, sol);
  std::cout << control_summary_json(p, sol) << '\n';
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app {"Fractional Poisson solver and optimal control driver"};
  app.set_config("--config", "", "Read options from a key = value file");
  app.require_subcommand(1);
  app.fallthrough();

  Settings st;
  ExperimentConfig &cfg = st.cfg;
  app.add_option("--s", cfg.s_values, "Fractional order(s), comma separated")
      ->delimiter(',')->capture_default_str();
  app.add_option("--dim", cfg.dim, "Space dimension (2 or 3)")->capture_default_str();
  app.add_option("--levels", st.levels, "Cells per side, A..B (doubling)")->capture_default_str();
  app.add_option("--ref-level", cfg.reference, "Cells per side of the reference mesh")
      ->capture_default_str();
  app.add_option("--mu", cfg.mu, "Regularization parameter")->capture_default_str();
  app.add_option("--a", cfg.a, "Lower control bound")->capture_default_str();
  app.add_option("--b", cfg.b, "Upper control bound")->capture_default_str();
  app.add_option("--ck", cfg.c_k, "Sinc step constant, k = ck / ln(2/h)")->capture_default_str();
  app.add_option("--k-rule", st.k_rule, "Sinc step k = ck / ln(2/h) or ck / ln(1/h)")
      ->check(CLI::IsMember({"2/h", "1/h"}))->capture_default_str();
  app.add_option("--rtol", cfg.rtol, "Shifted system tolerance")->capture_default_str();
  app.add_option("--tol", cfg.opt_tol, "Optimizer tolerance")->capture_default_str();
  app.add_option("--mode", st.mode, "Control discretization")
      ->check(CLI::IsMember({"variational", "p0", "both"}))->capture_default_str();
  app.add_flag("--post-process,!--no-post-process", cfg.post_process,
               "Report the post-processed control (p0 mode)");
  app.add_option("--optimizer", st.optimizer, "pg or lbfgs")
      ->check(CLI::IsMember({"pg", "lbfgs"}))->capture_default_str();
  app.add_option("--out", cfg.output_dir, "Output directory");
  app.add_option("--cache", cfg.cache_dir, "Reference solution cache directory");
  app.add_option("--threads", cfg.threads, "Concurrent independent runs")->capture_default_str();
  app.add_flag("-v,--verbose", cfg.verbose, "Progress on stderr");

  auto *state = app.add_subcommand("state-conv", "State equation convergence study");
  auto *control = app.add_subcommand("control-conv", "Optimal control convergence study");
  auto *stats = app.add_subcommand("solver-stats", "Shifted solver statistics");
  auto *solve = app.add_subcommand("solve", "Single solve on the finest level");
  solve->add_option("--problem", st.problem, "state or control")
      ->check(CLI::IsMember({"state", "control"}))->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    finish(st);
    if (*state) {
      cfg.kind = ExperimentKind::state_convergence;
      print_table(run_state_convergence(cfg));
    } else if (*control) {
      cfg.kind = ExperimentKind::control_convergence;
      print_table(run_control_convergence(cfg));
    } else if (*stats) {
      cfg.kind = ExperimentKind::solver_stats;
      write_solver_stats_csv(std::cout, run_solver_stats(cfg));
    } else if (*solve) {
      cfg.kind = ExperimentKind::solver_stats;
      cfg.validate();
      return run_solve(st);
    }
  } catch (const SolverError &e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const OptimizationError &e) {
    std::cerr << "optimizer failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
