//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "fracopt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fracopt/io.hpp"

namespace fracopt {

namespace {

// Runs fn(0..n-1) on up to `threads` workers; rethrows the first failure.
template <class Fn> void parallel_for(std::size_t n, int threads, Fn fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next {0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error)
            error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto &t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

std::string format_g(double v, int digits = 6) {
  std::ostringstream o;
  o << std::setprecision(digits) << v;
  return o.str();
}

std::mutex log_mutex;

void log(const ExperimentConfig &cfg, const std::string &msg) {
  if (!cfg.verbose)
    return;
  std::lock_guard lock(log_mutex);
  std::clog << msg << std::endl;
}

double energy_norm(const SparseSymMatrix &G, const Vector &e) {
  return std::sqrt(std::max(0.0, e.dot(G * e)));
}

std::filesystem::path cache_file(const ExperimentConfig &cfg,
                                 const std::string &tag, double s) {
  std::ostringstream name;
  name << tag << "_d" << cfg.dim << "_m" << cfg.reference << "_s"
       << format_g(s, 17) << "_ck" << format_g(cfg.c_k, 17)
       << (cfg.step_rule == StepRule::log_two_over_h ? "_ln2h" : "_ln1h") << "_rtol"
       << format_g(cfg.rtol, 17);
  if (cfg.kind == ExperimentKind::control_convergence)
    name << "_mu" << format_g(cfg.mu, 17) << "_a" << format_g(cfg.a, 17)
         << "_b" << format_g(cfg.b, 17) << "_tol" << format_g(cfg.opt_tol, 17);
  name << ".txt";
  return cfg.cache_dir / name.str();
}

std::optional<NodalFunction> load_cached(const std::filesystem::path &path,
                                         const MeshPtr &mesh) {
  if (path.empty() || !std::filesystem::exists(path))
    return std::nullopt;
  NodalFunction f = load_nodal(path, mesh);
  return f;
}

RateSeries make_series(std::string name, double s,
                       const std::vector<MeshPtr> &meshes,
                       const std::vector<double> &errors) {
  RateSeries series;
  series.name = std::move(name);
  series.s = s;
  std::vector<double> hs;
  for (const auto &m : meshes)
    hs.push_back(m->h());
  const auto rates = compute_rates(errors, hs);
  for (std::size_t i = 0; i < meshes.size(); ++i)
    series.rows.push_back({meshes[i]->num_vertices(), hs[i], errors[i], rates[i]});
  return series;
}

void write_outputs(const ExperimentConfig &cfg, const RateTable &table,
                   const std::string &stem) {
  if (cfg.output_dir.empty())
    return;
  std::filesystem::create_directories(cfg.output_dir);
  {
    std::ofstream out(cfg.output_dir / (stem + ".csv"));
    table.write_csv(out);
  }
  {
    std::ofstream out(cfg.output_dir / (stem + ".txt"));
    table.write_text(out);
  }
  table.write_plot_data(cfg.output_dir, stem);
}

} // namespace

// ---------------------------------------------------------------------------

std::vector<int> ExperimentConfig::levels() const {
  std::vector<int> out;
  for (int m = level_min; m <= level_max; m *= 2)
    out.push_back(m);
  return out;
}

void ExperimentConfig::validate() const {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("experiment: dimension must be 2 or 3");
  if (s_values.empty())
    throw std::invalid_argument("experiment: no s values");
  for (double s : s_values)
    if (!(s > 0.0 && s < 1.0))
      throw std::invalid_argument("experiment: s must lie in (0, 1)");
  if (level_min < 2 || level_min % 2 != 0)
    throw std::invalid_argument("experiment: levels must be even and >= 2");
  if (level_max < level_min)
    throw std::invalid_argument("experiment: empty level range");
  int m = level_min;
  while (m < level_max)
    m *= 2;
  if (m != level_max)
    throw std::invalid_argument("experiment: level range must be a doubling sequence");
  if (kind != ExperimentKind::solver_stats) {
    if (levels().size() < 2)
      throw std::invalid_argument("experiment: rates need at least two levels");
    if (reference <= level_max)
      throw std::invalid_argument("experiment: reference level must exceed the finest level");
    if (reference % level_max != 0 ||
        ((reference / level_max) & (reference / level_max - 1)) != 0)
      throw std::invalid_argument("experiment: reference mesh must be nested with the levels");
  }
  if (!(mu > 0.0))
    throw std::invalid_argument("experiment: mu must be positive");
  if (!(a <= 0.0 && 0.0 <= b))
    throw std::invalid_argument("experiment: bounds must satisfy a <= 0 <= b");
  if (!(c_k > 0.0) || !(rtol > 0.0) || !(opt_tol > 0.0))
    throw std::invalid_argument("experiment: c_k and tolerances must be positive");
  if (threads < 1)
    throw std::invalid_argument("experiment: threads must be >= 1");
  if (kind == ExperimentKind::control_convergence && !fully_discrete && !variational)
    throw std::invalid_argument("experiment: no control discretization selected");
}

FractionalOptions ExperimentConfig::fractional(double s) const {
  FractionalOptions o;
  o.s = s;
  o.c_k = c_k;
  o.step_rule = step_rule;
  o.rtol = rtol;
  return o;
}

std::optional<double> RateSeries::asymptotic_rate() const {
  if (rows.size() < 2)
    return std::nullopt;
  return rows.back().rate;
}

const RateSeries &RateTable::find(const std::string &name, double s) const {
  for (const auto &ser : series)
    if (ser.name == name && ser.s == s)
      return ser;
  throw std::out_of_range("rate table has no series " + name + " for s=" +
                          format_g(s));
}

void RateTable::write_csv(std::ostream &out) const {
  out << "series,s,N_omega,h,error,rate\n";
  for (const auto &ser : series)
    for (const auto &r : ser.rows) {
      out << ser.name << ',' << format_g(ser.s, 17) << ',' << r.n_omega << ','
          << format_g(r.h, 17) << ',' << format_g(r.error, 17) << ',';
      if (r.rate)
        out << format_g(*r.rate, 17);
      out << '\n';
    }
}

void RateTable::write_text(std::ostream &out) const {
  std::vector<double> s_list;
  for (const auto &ser : series)
    if (std::find(s_list.begin(), s_list.end(), ser.s) == s_list.end())
      s_list.push_back(ser.s);
  for (double s : s_list) {
    std::vector<const RateSeries *> cols;
    for (const auto &ser : series)
      if (ser.s == s)
        cols.push_back(&ser);
    out << "s = " << format_g(s) << '\n' << std::setw(10) << "N_omega";
    for (const auto *c : cols)
      out << std::setw(16) << c->name << std::setw(7) << "rate";
    out << '\n';
    for (std::size_t i = 0; i < cols.front()->rows.size(); ++i) {
      out << std::setw(10) << cols.front()->rows[i].n_omega;
      for (const auto *c : cols) {
        const RateRow &r = c->rows[i];
        char buf[64];
        std::snprintf(buf, sizeof buf, "%16.6e", r.error);
        out << buf;
        if (r.rate)
          std::snprintf(buf, sizeof buf, "%7.2f", *r.rate);
        else
          std::snprintf(buf, sizeof buf, "%7s", "");
        out << buf;
      }
      out << '\n';
    }
    out << '\n';
  }
}

void RateTable::write_plot_data(const std::filesystem::path &dir,
                                const std::string &prefix) const {
  std::filesystem::create_directories(dir);
  for (const auto &ser : series) {
    std::ofstream out(dir / (prefix + "_" + ser.name + "_s" + format_g(ser.s) + ".dat"));
    out << "# h error  (" << ser.name << ", s = " << format_g(ser.s) << ")\n";
    for (const auto &r : ser.rows)
      out << format_g(r.h, 17) << ' ' << format_g(r.error, 17) << '\n';
  }
}

std::vector<std::optional<double>> compute_rates(const std::vector<double> &errors,
                                                 const std::vector<double> &hs) {
  if (errors.size() != hs.size())
    throw std::invalid_argument("compute_rates: size mismatch");
  if (errors.size() < 2)
    throw std::invalid_argument("compute_rates: need at least two rows");
  std::vector<std::optional<double>> rates(errors.size());
  rates[0] = 0.0;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i - 1] > 0.0 && errors[i] > 0.0 && hs[i - 1] != hs[i])
      rates[i] = std::log(errors[i - 1] / errors[i]) / std::log(hs[i - 1] / hs[i]);
  }
  return rates;
}

double hs_error_surrogate(double e_l2, double e_h1, double s) {
  if (e_l2 < 0.0 || e_h1 < 0.0)
    throw std::invalid_argument("hs_error_surrogate: negative error");
  return std::pow(e_l2, 1.0 - s) * std::pow(e_h1, s);
}

NodalFunction hat_rhs(const MeshPtr &mesh) {
  const MeshPtr coarse = structured_mesh(mesh->dim(), 2);
  if (!is_nested(*coarse, *mesh))
    throw std::invalid_argument("hat_rhs: mesh is not nested with the m = 2 mesh");
  const NodalFunction hat(coarse, Vector::Ones(1));
  return interpolate(mesh, [&](const Point &x) {
    return std::min(0.25, 0.5 * hat(x));
  });
}

double sine_eigenfunction(const Point &x, int dim) {
  constexpr double tp = 2.0 * std::numbers::pi;
  double v = std::sin(tp * x[0]) * std::sin(tp * x[1]);
  if (dim == 3)
    v *= std::sin(tp * x[2]);
  return v;
}

// ---------------------------------------------------------------------------

RateTable run_state_convergence(const ExperimentConfig &cfg) {
  cfg.validate();
  const std::vector<int> levels = cfg.levels();
  std::vector<MeshPtr> meshes;
  for (int m : levels)
    meshes.push_back(structured_mesh(cfg.dim, m));
  const MeshPtr ref_mesh = structured_mesh(cfg.dim, cfg.reference);

  // One task per (s, mesh); the reference mesh is the last mesh of each s.
  const std::size_t nm = meshes.size() + 1;
  std::vector<NodalFunction> sol(cfg.s_values.size() * nm);
  parallel_for(sol.size(), cfg.threads, [&](std::size_t t) {
    const double s = cfg.s_values[t / nm];
    const std::size_t j = t % nm;
    const MeshPtr &mesh = j < meshes.size() ? meshes[j] : ref_mesh;
    const bool is_ref = j == meshes.size();
    std::filesystem::path cache;
    if (is_ref && !cfg.cache_dir.empty()) {
      cache = cache_file(cfg, "state", s);
      if (auto hit = load_cached(cache, mesh)) {
        sol[t] = std::move(*hit);
        log(cfg, "[state] s=" + format_g(s) + " reference loaded from cache");
        return;
      }
    }
    const auto t0 = std::chrono::steady_clock::now();
    FractionalSolveResult res = fractional_solve(hat_rhs(mesh), cfg.fractional(s));
    sol[t] = std::move(res.u);
    if (!cache.empty())
      save_nodal(cache, sol[t]);
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log(cfg, "[state] s=" + format_g(s) + " m=" + std::to_string(mesh->cells_per_side()) +
                 " N_alpha=" + std::to_string(res.stats.systems()) + " " +
                 format_g(sec, 3) + "s");
  });

  const SparseSymMatrix M = assemble_mass(*ref_mesh);
  RateTable table;
  for (std::size_t si = 0; si < cfg.s_values.size(); ++si) {
    const NodalFunction &ref = sol[si * nm + meshes.size()];
    std::vector<double> errors;
    for (std::size_t j = 0; j < meshes.size(); ++j) {
      const NodalFunction fine = prolongate(sol[si * nm + j], ref_mesh);
      errors.push_back(energy_norm(M, fine.values - ref.values));
    }
    table.series.push_back(make_series("L2", cfg.s_values[si], meshes, errors));
  }
  write_outputs(cfg, table, "state_convergence");
  return table;
}

namespace {

struct ControlLevel {
  NodalFunction state;
  NodalFunction adjoint;        // of the primary (fully discrete if enabled) solve
  CellwiseFunction control_p0;  // fully discrete mode
  NodalFunction adjoint_var;    // variational mode
};

ControlProblem make_problem(const ExperimentConfig &cfg, const MeshPtr &mesh,
                            double s, ControlMode mode) {
  ControlProblem p;
  p.mesh = mesh;
  p.s = s;
  p.mu = cfg.mu;
  p.a = cfg.a;
  p.b = cfg.b;
  p.mode = mode;
  p.fractional = cfg.fractional(s);
  p.desired = interpolate(mesh, [&](const Point &x) {
    return sine_eigenfunction(x, cfg.dim);
  });
  return p;
}

Vector warm_start(const ControlSpace &space, const std::optional<ControlField> &prev) {
  Vector z = Vector::Zero(static_cast<Eigen::Index>(space.size()));
  if (!prev)
    return z;
  const ControlField fine = prev->prolongate(space.mesh());
  for (std::size_t j = 0; j < space.size(); ++j)
    z[static_cast<Eigen::Index>(j)] = fine.value(space.cell_of(j), space.barycentric(j));
  return z;
}

} // namespace

RateTable run_control_convergence(const ExperimentConfig &cfg) {
  cfg.validate();
  const std::vector<int> levels = cfg.levels();
  std::vector<MeshPtr> meshes;
  for (int m : levels)
    meshes.push_back(structured_mesh(cfg.dim, m));
  const MeshPtr ref_mesh = structured_mesh(cfg.dim, cfg.reference);
  const ControlMode ref_mode =
      cfg.fully_discrete ? ControlMode::fully_discrete : ControlMode::variational;
  OptimizerOptions opt;
  opt.tol = cfg.opt_tol;
  opt.kind = cfg.optimizer;

  struct PerS {
    std::vector<ControlLevel> levels;
    NodalFunction ref_state, ref_adjoint;
  };
  std::vector<PerS> results(cfg.s_values.size());

  parallel_for(cfg.s_values.size(), cfg.threads, [&](std::size_t si) {
    const double s = cfg.s_values[si];
    PerS &out = results[si];
    std::optional<ControlField> prev_fd, prev_var;
    for (const MeshPtr &mesh : meshes) {
      ControlLevel lv;
      const auto t0 = std::chrono::steady_clock::now();
      std::shared_ptr<const FractionalSolver> solver =
          std::make_shared<FractionalSolver>(mesh, cfg.fractional(s));
      std::string info;
      if (cfg.fully_discrete) {
        ReducedFunctional f(make_problem(cfg, mesh, s, ControlMode::fully_discrete), solver);
        ControlSolution sol = solve_control(f, opt, warm_start(f.space(), prev_fd));
        prev_fd = ControlField::cellwise(sol.control_p0);
        lv.state = sol.state;
        lv.adjoint = sol.adjoint;
        lv.control_p0 = sol.control_p0;
        info += " p0_it=" + std::to_string(sol.iterations);
      }
      if (cfg.variational) {
        ReducedFunctional f(make_problem(cfg, mesh, s, ControlMode::variational), solver);
        ControlSolution sol = solve_control(f, opt, warm_start(f.space(), prev_var));
        prev_var = ControlField::clamped_adjoint(sol.adjoint, cfg.mu, cfg.a, cfg.b);
        lv.adjoint_var = sol.adjoint;
        if (!cfg.fully_discrete) {
          lv.state = sol.state;
          lv.adjoint = sol.adjoint;
        }
        info += " var_it=" + std::to_string(sol.iterations);
      }
      const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log(cfg, "[control] s=" + format_g(s) + " m=" + std::to_string(mesh->cells_per_side()) +
                   info + " " + format_g(sec, 3) + "s");
      out.levels.push_back(std::move(lv));
    }

    std::filesystem::path state_cache, adjoint_cache;
    if (!cfg.cache_dir.empty()) {
      const std::string tag = ref_mode == ControlMode::fully_discrete ? "p0" : "var";
      state_cache = cache_file(cfg, "control_" + tag + "_state", s);
      adjoint_cache = cache_file(cfg, "control_" + tag + "_adjoint", s);
      auto u = load_cached(state_cache, ref_mesh);
      auto p = load_cached(adjoint_cache, ref_mesh);
      if (u && p) {
        out.ref_state = std::move(*u);
        out.ref_adjoint = std::move(*p);
        log(cfg, "[control] s=" + format_g(s) + " reference loaded from cache");
        return;
      }
    }
    const auto t0 = std::chrono::steady_clock::now();
    ReducedFunctional f(make_problem(cfg, ref_mesh, s, ref_mode));
    const std::optional<ControlField> &prev =
        ref_mode == ControlMode::fully_discrete ? prev_fd : prev_var;
    ControlSolution ref = solve_control(f, opt, warm_start(f.space(), prev));
    out.ref_state = ref.state;
    out.ref_adjoint = ref.adjoint;
    if (!state_cache.empty()) {
      save_nodal(state_cache, out.ref_state);
      save_nodal(adjoint_cache, out.ref_adjoint);
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log(cfg, "[control] s=" + format_g(s) + " reference m=" + std::to_string(cfg.reference) +
                 " it=" + std::to_string(ref.iterations) + " " + format_g(sec, 3) + "s");
  });

  const SparseSymMatrix M = assemble_mass(*ref_mesh);
  const SparseSymMatrix A = assemble_stiffness(*ref_mesh);
  RateTable table;
  for (std::size_t si = 0; si < cfg.s_values.size(); ++si) {
    const double s = cfg.s_values[si];
    const PerS &r = results[si];
    const ControlField ref_control =
        ControlField::clamped_adjoint(r.ref_adjoint, cfg.mu, cfg.a, cfg.b);
    std::vector<double> e_p0, e_pp, e_var, e_l2, e_hs;
    for (const ControlLevel &lv : r.levels) {
      if (cfg.fully_discrete) {
        e_p0.push_back(l2_distance(ControlField::cellwise(lv.control_p0).prolongate(ref_mesh),
                                   ref_control));
        if (cfg.post_process)
          e_pp.push_back(l2_distance(
              ControlField::clamped_adjoint(lv.adjoint, cfg.mu, cfg.a, cfg.b).prolongate(ref_mesh),
              ref_control));
      }
      if (cfg.variational)
        e_var.push_back(l2_distance(
            ControlField::clamped_adjoint(lv.adjoint_var, cfg.mu, cfg.a, cfg.b).prolongate(ref_mesh),
            ref_control));
      const Vector e = prolongate(lv.state, ref_mesh).values - r.ref_state.values;
      e_l2.push_back(energy_norm(M, e));
      e_hs.push_back(hs_error_surrogate(e_l2.back(), energy_norm(A, e), s));
    }
    if (!e_p0.empty())
      table.series.push_back(make_series("control_p0", s, meshes, e_p0));
    if (!e_pp.empty())
      table.series.push_back(make_series("control_pp", s, meshes, e_pp));
    if (!e_var.empty())
      table.series.push_back(make_series("control_var", s, meshes, e_var));
    table.series.push_back(make_series("state_L2", s, meshes, e_l2));
    table.series.push_back(make_series("state_Hs", s, meshes, e_hs));
  }
  write_outputs(cfg, table, "control_convergence");
  return table;
}

std::vector<SolverStatsRow> run_solver_stats(const ExperimentConfig &cfg) {
  cfg.validate();
  const std::vector<int> levels = cfg.levels();
  const std::size_t ns = cfg.s_values.size();
  std::vector<SolverStatsRow> rows(levels.size() * ns);
  parallel_for(rows.size(), cfg.threads, [&](std::size_t t) {
    const MeshPtr mesh = structured_mesh(cfg.dim, levels[t / ns]);
    const double s = cfg.s_values[t % ns];
    const auto t0 = std::chrono::steady_clock::now();
    FractionalSolveResult res = fractional_solve(hat_rhs(mesh), cfg.fractional(s));
    SolverStatsRow &row = rows[t];
    row.n_omega = mesh->num_vertices();
    row.cells_per_side = mesh->cells_per_side();
    row.s = s;
    row.quadrature = res.quadrature;
    row.stats = std::move(res.stats);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log(cfg, "[stats] s=" + format_g(s) + " m=" + std::to_string(row.cells_per_side) +
                 " N_alpha=" + std::to_string(row.stats.systems()) + " alg1=" +
                 std::to_string(row.stats.n_alg1) + " alg2=" + std::to_string(row.stats.n_alg2) +
                 " setups=" + std::to_string(row.stats.preconditioner_setups));
  });
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(cfg.output_dir / "solver_stats.csv");
    write_solver_stats_csv(out, rows);
  }
  return rows;
}

void write_solver_stats_csv(std::ostream &out, const std::vector<SolverStatsRow> &rows) {
  write_stats_csv_header(out);
  for (const auto &r : rows)
    write_stats_csv_row(out, r.n_omega, r.s, r.stats);
}

} // namespace fracopt
