#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "capmod/capacity.hpp"
#include "capmod/modulus.hpp"

namespace {

using namespace capmod;

Condenser unit_square(double h) {
  return Condenser(GroupSpec::abelian(2), MetricSpec::euclidean(2), Region::box({-h, 0}, {1 + h, 1}),
                   Region::box({-1, -1}, {0, 2}), Region::box({1, -1}, {2, 2}));
}

void BM_GroupMultiply(benchmark::State& state) {
  const GroupSpec g = GroupSpec::heisenberg(static_cast<int>(state.range(0)));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  FlatVector a(g.dim()), b(g.dim());
  for (int i = 0; i < g.dim(); ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
  }
  Point x = g.from_flat(a);
  const Point y = g.from_flat(b);
  for (auto _ : state) {
    x = multiply(g, x, y);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_GroupMultiply)->Arg(1)->Arg(2)->Arg(4);

void BM_ShortestPaths(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const auto graph = build_horizontal_graph(build_grid(unit_square(h), h), 2);
  const std::vector<double> rho(static_cast<std::size_t>(graph->grid().size()), 1.0);
  for (auto _ : state) {
    const SearchResult r = shortest_paths(*graph, rho, false);
    benchmark::DoNotOptimize(r);
  }
  state.counters["nodes"] = static_cast<double>(graph->grid().size());
}
BENCHMARK(BM_ShortestPaths)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_CapacityEnergyGradient(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const CapacityProblem prob(build_grid(unit_square(h), h), 2.0);
  std::vector<double> x(prob.unknowns(), 0.5), grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(prob.energy(x, &grad));
  }
  state.counters["unknowns"] = static_cast<double>(prob.unknowns());
}
BENCHMARK(BM_CapacityEnergyGradient)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_ModulusSquare(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const Condenser c = unit_square(h);
  ModulusOptions opt;
  opt.tol = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_modulus(c, h, opt).value);
  }
}
BENCHMARK(BM_ModulusSquare)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_CapacitySquare(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const Condenser c = unit_square(h);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_capacity(c, h).report.value);
  }
}
BENCHMARK(BM_CapacitySquare)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
