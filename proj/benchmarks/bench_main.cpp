//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <benchmark/benchmark.h>

#include "fracopt/control.hpp"
#include "fracopt/experiments.hpp"
#include "fracopt/fractional.hpp"

using namespace fracopt;

static void BM_AssembleStiffness(benchmark::State &state) {
  auto mesh = unit_square_mesh(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_stiffness(*mesh));
  state.counters["dofs"] = static_cast<double>(mesh->num_dofs());
}
BENCHMARK(BM_AssembleStiffness)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_AssembleMass3D(benchmark::State &state) {
  auto mesh = unit_cube_mesh(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_mass(*mesh));
}
BENCHMARK(BM_AssembleMass3D)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

// Shared-basis solver only (every system well conditioned enough).
static void BM_ShiftedFamily(benchmark::State &state) {
  auto mesh = unit_square_mesh(static_cast<int>(state.range(0)));
  FractionalOptions opt;
  opt.s = 0.5;
  FractionalSolver solver(mesh, opt);
  const Vector Z = assemble_load(hat_rhs(mesh));
  const ShiftedFamily fam = make_family(solver.scaled_operator(), Z);
  for (auto _ : state) {
    const SolveStats st = solve_family(fam, solver.solver_options(), [](int, const Vector &v) {
      benchmark::DoNotOptimize(v.data());
    });
    state.counters["systems"] = st.systems();
    state.counters["alg2"] = st.n_alg2;
  }
}
BENCHMARK(BM_ShiftedFamily)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

// Small basis cap: most systems go through multigrid preconditioned CG.
static void BM_ShiftedFamilyPreconditioned(benchmark::State &state) {
  auto mesh = unit_square_mesh(static_cast<int>(state.range(0)));
  FractionalOptions opt;
  opt.s = 0.5;
  opt.max_krylov = 40;
  FractionalSolver solver(mesh, opt);
  const Vector Z = assemble_load(hat_rhs(mesh));
  for (auto _ : state) {
    const auto res = solver.solve_load(Z);
    state.counters["alg2"] = res.stats.n_alg2;
    state.counters["setups"] = res.stats.preconditioner_setups;
  }
}
BENCHMARK(BM_ShiftedFamilyPreconditioned)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_FractionalSolve(benchmark::State &state) {
  auto mesh = unit_square_mesh(static_cast<int>(state.range(0)));
  const NodalFunction f = hat_rhs(mesh);
  FractionalOptions opt;
  opt.s = 0.05;
  for (auto _ : state)
    benchmark::DoNotOptimize(fractional_solve(f, opt));
}
BENCHMARK(BM_FractionalSolve)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_ControlSolve(benchmark::State &state) {
  ControlProblem p;
  p.mesh = unit_square_mesh(static_cast<int>(state.range(0)));
  p.desired = interpolate(p.mesh, [](const Point &x) { return sine_eigenfunction(x, 2); });
  ReducedFunctional f(p);
  for (auto _ : state) {
    const ControlSolution sol = solve_control(f);
    state.counters["iterations"] = sol.iterations;
  }
}
BENCHMARK(BM_ControlSolve)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
