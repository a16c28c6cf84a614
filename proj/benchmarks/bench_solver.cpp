#include <benchmark/benchmark.h>

#include <filesystem>

#include "pcdsm/io.hpp"
#include "pcdsm/optimize.hpp"
#include "pcdsm/oracle.hpp"
#include "pcdsm/sweep.hpp"

namespace {

using namespace pcdsm;

Instance sample_day(double alpha) {
  io::RunConfig cfg;
  cfg.load_path = std::filesystem::path(PCDSM_DATA_DIR) / "sample_day.csv";
  cfg.alpha = alpha;
  return io::build_instance(cfg);
}

Instance small_example() {
  Instance in;
  in.load.demand_kw = {1, 4, 2, 5};
  in.tariff = {{0, 2, 4}, {1, 3}};
  in.battery = {4, 2, 2};
  return in;
}

void BM_SmallExample(benchmark::State& state) {
  const Instance in = small_example();
  for (auto _ : state) benchmark::DoNotOptimize(optimize(in));
}
BENCHMARK(BM_SmallExample);

void BM_SampleDay(benchmark::State& state) {
  const Instance in = sample_day(static_cast<double>(state.range(0)) / 10.0);
  int iterations = 0;
  for (auto _ : state) {
    const Solution s = optimize(in);
    iterations = s.iterations;
    benchmark::DoNotOptimize(s);
  }
  state.counters["admm_iterations"] = iterations;
}
BENCHMARK(BM_SampleDay)->Arg(0)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_BuildQp(benchmark::State& state) {
  const Instance in = sample_day(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(qp::build(in));
}
BENCHMARK(BM_BuildQp)->Unit(benchmark::kMillisecond);

void BM_AlphaSweep(benchmark::State& state) {
  const Instance in = sample_day(0.5);
  const std::vector<double> alphas = {0.1, 0.3, 0.5, 0.7, 0.9};
  sweep::SweepOptions opts;
  opts.mode = state.range(0) == 0 ? sweep::Mode::Sequential : sweep::Mode::Concurrent;
  for (auto _ : state) benchmark::DoNotOptimize(sweep::alpha_sweep(in, alphas, opts));
}
BENCHMARK(BM_AlphaSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& state) {
  Instance in;
  in.load.demand_kw = {1, 4, 2, 5, 0.5, 3};
  in.tariff = {{0, 3, 6}, {1, 3}};
  in.battery = {4, 2, 2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle::brute_force(
        in, {.step = 0.25, .threads = static_cast<unsigned>(state.range(0))}));
  }
}
BENCHMARK(BM_Oracle)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
