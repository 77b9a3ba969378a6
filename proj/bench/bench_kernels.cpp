// Serial against OpenMP timings for the parallel kernels: swarm fitness
// evaluation, the kernel Gram matrix and independent benchmark seeds.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "apsosvm/apso.hpp"
#include "apsosvm/cobb_douglas.hpp"
#include "apsosvm/objectives.hpp"
#include "apsosvm/rcpsp.hpp"
#include "apsosvm/svm.hpp"

using namespace apsosvm;

namespace {

std::vector<double> random_positions(std::size_t n, std::size_t d) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> x(n * d);
  for (auto& v : x) v = u(gen);
  return x;
}

Dataset random_dataset(std::size_t n, std::size_t d) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset data;
  data.dim = d;
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) v = g(gen);
    data.add(row, i % 2 ? 1 : -1);
  }
  return data;
}

void swarm_eval(benchmark::State& state, bool parallel) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 2000;
  const auto spec = make_objective("rastrigin", d, -5.0, 5.0);
  const auto x = random_positions(n, d);
  std::vector<double> f(n);
  for (auto _ : state) {
    if (parallel) evaluate_swarm_parallel(spec, x, n, f);
    else evaluate_swarm_serial(spec, x, n, f);
    benchmark::DoNotOptimize(f.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void gram(benchmark::State& state, bool parallel) {
  const auto data = random_dataset(static_cast<std::size_t>(state.range(0)), 18);
  const auto k = KernelSpec::rbf(0.05);
  for (auto _ : state) {
    auto g = parallel ? gram_matrix_parallel(data, k) : gram_matrix_serial(data, k);
    benchmark::DoNotOptimize(g.data());
  }
}

void cobb_seeds(benchmark::State& state, bool parallel) {
  for (auto _ : state) {
    auto row = deviation_row(10, 500, 8, 0.01, parallel ? ExecPolicy::parallel : ExecPolicy::serial);
    benchmark::DoNotOptimize(row.mean_deviation);
  }
}

void rcpsp_seeds(benchmark::State& state, bool parallel) {
  GeneratorParams params;
  std::vector<ProjectInstance> instances;
  std::map<std::string, int> bounds;
  for (std::uint64_t s = 0; s < 4; ++s) {
    instances.push_back(generate_instance(params, s));
    bounds[instances.back().name] = instances.back().critical_path_bound();
  }
  for (auto _ : state) {
    auto row = deviation_table_row(instances, bounds, 500, 4,
                                   parallel ? ExecPolicy::parallel : ExecPolicy::serial);
    benchmark::DoNotOptimize(row.mean_deviation_percent);
  }
}

}  // namespace

BENCHMARK_CAPTURE(swarm_eval, serial, false)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(swarm_eval, parallel, true)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(gram, serial, false)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(gram, parallel, true)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(cobb_seeds, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(cobb_seeds, parallel, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(rcpsp_seeds, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(rcpsp_seeds, parallel, true)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
