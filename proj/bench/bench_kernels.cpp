// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <random>

#include "distpert/grid.hpp"
#include "distpert/kernels.hpp"

namespace {

using namespace distpert;

Grid grid_for(int n) {
  // roughly a million unknowns in each dimension
  if (n == 1) return build_grid(1, 500.0, 0.0005);
  if (n == 2) return build_grid(2, 50.0, 0.1);
  return build_grid(3, 5.0, 0.1);
}

std::vector<double> random_vector(std::size_t n) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

template <void (*Laplacian)(const Grid&, std::span<const double>, std::span<double>)>
void bm_laplacian(benchmark::State& state) {
  const auto g = grid_for(static_cast<int>(state.range(0)));
  const auto u = random_vector(g.size());
  std::vector<double> out(g.size());
  for (auto _ : state) {
    Laplacian(g, u, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.size()));
}

template <double (*Dot)(std::span<const double>, std::span<const double>)>
void bm_dot(benchmark::State& state) {
  const auto a = random_vector(static_cast<std::size_t>(state.range(0)));
  const auto b = random_vector(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Dot(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <void (*Axpy)(double, std::span<const double>, std::span<double>)>
void bm_axpy(benchmark::State& state) {
  const auto x = random_vector(static_cast<std::size_t>(state.range(0)));
  auto y = random_vector(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Axpy(1e-3, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(bm_laplacian<kernels::serial::laplacian>)->Arg(1)->Arg(2)->Arg(3)->Name("laplacian/serial");
BENCHMARK(bm_laplacian<kernels::omp::laplacian>)->Arg(1)->Arg(2)->Arg(3)->Name("laplacian/omp");
BENCHMARK(bm_dot<kernels::serial::dot>)->Arg(1 << 20)->Name("dot/serial");
BENCHMARK(bm_dot<kernels::omp::dot>)->Arg(1 << 20)->Name("dot/omp");
BENCHMARK(bm_axpy<kernels::serial::axpy>)->Arg(1 << 20)->Name("axpy/serial");
BENCHMARK(bm_axpy<kernels::omp::axpy>)->Arg(1 << 20)->Name("axpy/omp");

BENCHMARK_MAIN();
