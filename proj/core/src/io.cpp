//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "fracopt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace fracopt {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

void write_coefficients(std::ostream &out, const Vector &values,
                        const std::string &kind) {
  out << "# " << kind << ' ' << values.size() << '\n';
  for (Eigen::Index i = 0; i < values.size(); ++i)
    out << format_double(values[i]) << '\n';
}

Vector read_coefficients(std::istream &in, const std::string &kind) {
  std::string hash, tag;
  long n = -1;
  if (!(in >> hash >> tag >> n) || hash != "#" || tag != kind || n < 0)
    throw std::runtime_error("coefficient file: expected header '# " + kind + " N'");
  Vector v(n);
  for (long i = 0; i < n; ++i)
    if (!(in >> v[i]))
      throw std::runtime_error("coefficient file: truncated data");
  return v;
}

void write_nodal(std::ostream &out, const NodalFunction &f) {
  write_coefficients(out, f.values, "nodal");
}

NodalFunction read_nodal(std::istream &in, MeshPtr mesh) {
  return {std::move(mesh), read_coefficients(in, "nodal")};
}

void write_cellwise(std::ostream &out, const CellwiseFunction &f) {
  write_coefficients(out, f.values, "cellwise");
}

CellwiseFunction read_cellwise(std::istream &in, MeshPtr mesh) {
  return {std::move(mesh), read_coefficients(in, "cellwise")};
}

void save_nodal(const std::filesystem::path &path, const NodalFunction &f) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  write_nodal(out, f);
}

NodalFunction load_nodal(const std::filesystem::path &path, MeshPtr mesh) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read " + path.string());
  return read_nodal(in, std::move(mesh));
}

namespace {

nlohmann::json stats_record(const SolveStats &s) {
  return {{"n_alpha", s.systems()},
          {"n_alg1", s.n_alg1},
          {"n_alg2", s.n_alg2},
          {"preconditioner_setups", s.preconditioner_setups},
          {"matvecs", s.matvecs},
          {"alg1_matvecs", s.alg1_matvecs}};
}

} // namespace

std::string stats_json(const SolveStats &stats) {
  return stats_record(stats).dump();
}

std::string control_summary_json(const ControlProblem &problem,
                                 const ControlSolution &solution) {
  nlohmann::json j;
  j["mode"] = to_string(solution.mode);
  j["dim"] = problem.mesh->dim();
  j["cells_per_side"] = problem.mesh->cells_per_side();
  j["h"] = problem.mesh->h();
  j["s"] = problem.s;
  j["mu"] = problem.mu;
  j["a"] = problem.a;
  j["b"] = problem.b;
  j["iterations"] = solution.iterations;
  j["objective"] = solution.objective;
  j["residual"] = solution.residual;
  j["stop_threshold"] = solution.stop_threshold;
  j["solver"] = stats_record(solution.stats);
  return j.dump(2);
}

void dump_control_solution(const std::filesystem::path &dir,
                           const ControlProblem &problem,
                           const ControlSolution &solution) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char *name) {
    std::ofstream out(dir / name);
    if (!out)
      throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("control.txt");
    if (solution.mode == ControlMode::fully_discrete)
      write_cellwise(out, solution.control_p0);
    else
      write_nodal(out, solution.control_p1);
  }
  {
    auto out = open("state.txt");
    write_nodal(out, solution.state);
  }
  {
    auto out = open("adjoint.txt");
    write_nodal(out, solution.adjoint);
  }
  if (solution.mode == ControlMode::fully_discrete) {
    auto out = open("post_processed.txt");
    write_nodal(out, post_process(problem, solution));
  }
  auto out = open("summary.json");
  out << control_summary_json(problem, solution) << '\n';
}

} // namespace fracopt
