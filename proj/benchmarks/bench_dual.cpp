#include <benchmark/benchmark.h>

#include "morozov/dual.hpp"
#include "morozov/problems.hpp"

namespace {

morozov::Lagrangian interior(Eigen::Index n) {
  using namespace morozov;
  const InverseProblem p = synthesize(make_deconvolution(n, 2.0), smooth_signal(n), 0.02, 1.0, 7);
  return Lagrangian(p.a, p.g, p.j, 1.02 * 1.02 * p.tau * p.tau);
}

void BM_MaximizeDual(benchmark::State& state) {
  const auto lag = interior(state.range(0));
  const auto method = static_cast<morozov::Method>(state.range(1));
  for (auto _ : state) {
    const auto r = morozov::maximize_dual(lag, method);
    state.counters["evaluations"] = static_cast<double>(r.iterations.size());
    benchmark::DoNotOptimize(r.lambda_star);
  }
}
BENCHMARK(BM_MaximizeDual)
    ->ArgsProduct({{32, 64, 128}, {static_cast<long>(morozov::Method::bisection),
                                   static_cast<long>(morozov::Method::secant)}})
    ->ArgNames({"n", "method"})
    ->Unit(benchmark::kMillisecond);

// Thread count 1 against the default pool.
void BM_Sweep(benchmark::State& state) {
  const auto lag = interior(64);
  const auto grid = morozov::log_grid(1e-6, 1e9, 200);
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(morozov::sweep_dual(lag, grid, {}, threads).data());
  }
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(0)->ArgName("threads")->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
