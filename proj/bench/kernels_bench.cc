// Serial reference kernels against their OpenMP counterparts.
//   ./kernels_bench --benchmark_filter=MatMul
// Set OMP_NUM_THREADS to vary the parallel side.

#include <benchmark/benchmark.h>

#include <vector>

#include "eelmo/netcore/kernels.h"
#include "eelmo/netcore/rng.h"

namespace {

namespace k = eelmo::net::kernels;

using Kernel = void (*)(std::span<const double>, std::span<const double>, std::span<double>,
                        std::size_t, std::size_t, std::size_t);

std::vector<double> Random(std::size_t n, std::uint64_t seed) {
  eelmo::net::SeededRng rng(seed);
  std::vector<double> v(n);
  for (double &x : v) x = rng.Uniform(-1.0, 1.0);
  return v;
}

// Square-ish shapes: n rows of a batch against a k x m weight.
template <Kernel kernel, int kind>
void Run(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t kk = n, m = n;
  std::vector<double> a, b, out;
  if (kind == 0) {  // MatMul: a[n x k], b[k x m], out[n x m]
    a = Random(n * kk, 1), b = Random(kk * m, 2), out.assign(n * m, 0.0);
  } else if (kind == 1) {  // ATB: a[n x k], g[n x m], out[k x m]
    a = Random(n * kk, 1), b = Random(n * m, 2), out.assign(kk * m, 0.0);
  } else {  // ABT: g[n x m], b[k x m], out[n x k]
    a = Random(n * m, 1), b = Random(kk * m, 2), out.assign(n * kk, 0.0);
  }
  for (auto _ : state) {
    kernel(a, b, out, n, kk, m);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * kk * m));
  state.counters["threads"] = k::MaxThreads();
}

#define EELMO_BENCH(name, kind)                                                        \
  BENCHMARK(Run<k::serial::name, kind>)->Name(#name "/serial")->RangeMultiplier(2)->Range(32, 512); \
  BENCHMARK(Run<k::parallel::name, kind>)->Name(#name "/openmp")->RangeMultiplier(2)->Range(32, 512);

EELMO_BENCH(MatMul, 0)
EELMO_BENCH(AccumulateATB, 1)
EELMO_BENCH(AccumulateABT, 2)

}  // namespace

BENCHMARK_MAIN();
