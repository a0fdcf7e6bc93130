#include <benchmark/benchmark.h>

#include "morozov/lagrange.hpp"
#include "morozov/problems.hpp"

namespace {

morozov::Lagrangian blur_lagrangian(Eigen::Index n, bool matrix_free) {
  using namespace morozov;
  const LinearOperator a = matrix_free ? make_deconvolution_matrix_free(n, 2.0) : make_deconvolution(n, 2.0);
  const InverseProblem p = synthesize(a, smooth_signal(n), 0.02, 1.0, 42);
  return Lagrangian(p.a, p.g, p.j, 1.02 * 1.02 * p.tau * p.tau);
}

void BM_SolveDirect(benchmark::State& state) {
  const auto lag = blur_lagrangian(state.range(0), false);
  for (auto _ : state) {
    benchmark::DoNotOptimize(morozov::solve_lagrange(lag, 50.0).f_lambda.data());
  }
}
BENCHMARK(BM_SolveDirect)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMicrosecond);

void BM_SolveIterative(benchmark::State& state) {
  const auto lag = blur_lagrangian(state.range(0), state.range(1) != 0);
  morozov::SolveOptions opts;
  opts.solver = morozov::SolverKind::iterative;
  opts.jacobi = true;
  for (auto _ : state) {
    benchmark::DoNotOptimize(morozov::solve_lagrange(lag, 50.0, opts).f_lambda.data());
  }
}
BENCHMARK(BM_SolveIterative)
    ->ArgsProduct({{32, 64, 128, 256}, {0, 1}})
    ->ArgNames({"n", "matrix_free"})
    ->Unit(benchmark::kMicrosecond);

}  // namespace
