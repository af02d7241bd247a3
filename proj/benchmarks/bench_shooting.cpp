#include <benchmark/benchmark.h>

#include "arcshoot/builtin_problems.hpp"
#include "arcshoot/direct_init.hpp"
#include "arcshoot/second_order.hpp"
#include "arcshoot/shooting.hpp"

namespace {

using namespace arcshoot;

const BuiltinProblem& regulator() { return find_problem("regulator"); }

void BM_ShootingFunction(benchmark::State& state) {
  const BuiltinProblem& b = regulator();
  const ShootingVector w = b.analytic();
  const int steps = steps_per_arc_for(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(shooting_function(b.problem, *b.structure, w, steps));
}
BENCHMARK(BM_ShootingFunction)->Arg(300)->Arg(1000)->Arg(3000);

void BM_ShootingJacobian(benchmark::State& state) {
  const BuiltinProblem& b = regulator();
  const ShootingVector w = b.analytic();
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(shooting_jacobian(b.problem, *b.structure, w, 333, parallel));
  }
}
BENCHMARK(BM_ShootingJacobian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SolveRegulator(benchmark::State& state) {
  const BuiltinProblem& b = regulator();
  ShootingOptions o;
  o.steps_per_arc = 333;
  Vector y = b.analytic().pack();
  y *= 1.03;
  const ShootingVector w0 = ShootingVector::unpack(y, ShootingLayout::of(b.problem, *b.structure));
  for (auto _ : state) benchmark::DoNotOptimize(solve_shooting(b.problem, *b.structure, w0, o));
}
BENCHMARK(BM_SolveRegulator)->Unit(benchmark::kMillisecond);

void BM_AssembleOmega(benchmark::State& state) {
  const BuiltinProblem& b = regulator();
  const ShootingVector w = b.analytic();
  SecondOrderOptions o;
  o.intervals = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const SecondOrderModel model = build_model(b.problem, *b.structure, w, o);
    benchmark::DoNotOptimize(check_positivity(assemble_omega(model), o));
  }
}
BENCHMARK(BM_AssembleOmega)->Arg(99)->Arg(199)->Unit(benchmark::kMillisecond);

void BM_DirectSolve(benchmark::State& state) {
  DirectSolveConfig cfg;
  cfg.grid_size = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(direct_solve(regulator().problem, cfg));
}
BENCHMARK(BM_DirectSolve)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
