#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "exhaust/branch_and_bound.hpp"
#include "exhaust/moderate_solver.hpp"
#include "exhaust/oracle.hpp"
#include "exhaust/simulator.hpp"
#include "exhaust/strict_solver.hpp"

namespace {

using namespace exhaust;

std::vector<WorkerParams> population(std::size_t n, double ps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mu(0.2, 3.0), ratio(1.0, 5.0);
  std::vector<WorkerParams> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = mu(rng);
    out.emplace_back(m * ratio(rng), m, ps);
  }
  return out;
}

void BM_StationaryGeneric(benchmark::State& state) {
  const WorkerParams w(3.0, 1.0, 0.5);
  const auto q = build_generator(w, 2.0, 0.7, AssignmentMode::kModerate);
  for (auto _ : state) benchmark::DoNotOptimize(stationary_generic(q));
}
BENCHMARK(BM_StationaryGeneric);

void BM_StationaryClosedForm(benchmark::State& state) {
  const WorkerParams w(3.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(stationary_strict_closed_form(w, 2.0));
}
BENCHMARK(BM_StationaryClosedForm);

void BM_SolveStrict(benchmark::State& state) {
  const auto ws = population(static_cast<std::size_t>(state.range(0)), 0.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_strict(ws, 10.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveStrict)->RangeMultiplier(10)->Range(10, 10000)->Complexity();

void BM_BranchAndBound(benchmark::State& state) {
  const auto ws = population(static_cast<std::size_t>(state.range(0)), 0.7, 2);
  const std::vector<double> p(ws.size(), 1.0);
  const auto problem = alpha_block_problem(ws, p, 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(branch_and_bound(problem));
}
BENCHMARK(BM_BranchAndBound)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_AlternatingSolve(benchmark::State& state) {
  const std::vector<WorkerParams> ws = {WorkerParams(2.5, 1.0, 0.7), WorkerParams(3.0, 1.0, 0.7),
                                        WorkerParams(3.5, 1.0, 0.7)};
  for (auto _ : state) benchmark::DoNotOptimize(alternating_solve(ws, 10.0));
}
BENCHMARK(BM_AlternatingSolve)->Unit(benchmark::kMillisecond);

void BM_OracleStrict(benchmark::State& state) {
  const auto ws = population(3, 0.0, 3);
  const GridSpec grid{static_cast<std::size_t>(state.range(0)), 2};
  for (auto _ : state) benchmark::DoNotOptimize(oracle_strict(ws, 10.0, grid));
}
BENCHMARK(BM_OracleStrict)->Arg(401)->Arg(2001)->Unit(benchmark::kMillisecond);

void BM_SimulateWorker(benchmark::State& state) {
  const WorkerParams w(3.0, 1.0, 0.5);
  SimConfig config;
  config.horizon = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_worker(w, 2.0, 0.7, AssignmentMode::kModerate, config));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateWorker)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
