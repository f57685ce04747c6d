// Serial vs OpenMP kernels at training-sized shapes.
//   fib_bench --benchmark_filter=gemm

#include <vector>

#include <benchmark/benchmark.h>

#include "fib/kernels.hpp"
#include "fib/rng.hpp"

namespace k = fib::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  fib::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

template <auto Gemm>
void bm_gemm_nn(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto kk = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  const auto a = random_values(m * kk, 1), b = random_values(kk * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    Gemm(a, b, c, m, kk, n, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(m * kk * n));
}

template <auto Moments>
void bm_column_moments(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  const auto x = random_values(rows * cols, 3);
  std::vector<double> mean(cols), var(cols);
  for (auto _ : state) {
    Moments(x, rows, cols, {}, k::Moments{mean, var});
    benchmark::DoNotOptimize(var.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows * cols));
}

// batch x (d_w + d_h) times (d_w + d_h) x 4 d_h, then a wide output layer
void gemm_shapes(benchmark::internal::Benchmark* b) {
  b->Args({32, 600, 1200})->Args({32, 512, 6000})->Args({256, 256, 256});
}

void moment_shapes(benchmark::internal::Benchmark* b) { b->Args({32, 1200})->Args({1024, 1024}); }

}  // namespace

BENCHMARK(bm_gemm_nn<k::serial::gemm_nn>)->Name("gemm_nn/serial")->Apply(gemm_shapes);
BENCHMARK(bm_gemm_nn<k::parallel::gemm_nn>)->Name("gemm_nn/parallel")->Apply(gemm_shapes)->UseRealTime();
BENCHMARK(bm_column_moments<k::serial::column_moments>)->Name("column_moments/serial")->Apply(moment_shapes);
BENCHMARK(bm_column_moments<k::parallel::column_moments>)
    ->Name("column_moments/parallel")
    ->Apply(moment_shapes)
    ->UseRealTime();

BENCHMARK_MAIN();
