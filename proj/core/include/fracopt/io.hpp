//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fracopt/control.hpp"
#include "fracopt/fe_space.hpp"
#include "fracopt/shifted_solver.hpp"

namespace fracopt {

/// Plain text coefficient dumps, one value per line in dof (or cell) order,
/// printed with 17 significant digits so that a round trip is exact.
void write_coefficients(std::ostream &out, const Vector &values,
                        const std::string &kind);
Vector read_coefficients(std::istream &in, const std::string &kind);

void write_nodal(std::ostream &out, const NodalFunction &f);
NodalFunction read_nodal(std::istream &in, MeshPtr mesh);
void write_cellwise(std::ostream &out, const CellwiseFunction &f);
CellwiseFunction read_cellwise(std::istream &in, MeshPtr mesh);

void save_nodal(const std::filesystem::path &path, const NodalFunction &f);
NodalFunction load_nodal(const std::filesystem::path &path, MeshPtr mesh);

/// JSON record of a solve: iterations, objective, residual and solver counts.
std::string stats_json(const SolveStats &stats);
std::string control_summary_json(const ControlProblem &problem,
                                 const ControlSolution &solution);

/// Writes control.txt, state.txt, adjoint.txt (and post_processed.txt for
/// P0 controls) plus summary.json into `dir`.
void dump_control_solution(const std::filesystem::path &dir,
                           const ControlProblem &problem,
                           const ControlSolution &solution);

} // namespace fracopt
