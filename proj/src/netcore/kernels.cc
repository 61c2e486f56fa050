#include "eelmo/netcore/kernels.h"

#include <algorithm>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace eelmo::net::kernels {

namespace {

constexpr std::size_t kColumnTile = 64;

}  // namespace

namespace serial {

void MatMul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t n, std::size_t k,
            std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double *o = out.data() + i * m;
    std::fill(o, o + m, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double *brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += aip * brow[j];
    }
  }
}

void AccumulateATB(std::span<const double> a, std::span<const double> g,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double *grow = g.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      double *o = out.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += aip * grow[j];
    }
  }
}

void AccumulateABT(std::span<const double> g, std::span<const double> b,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double *grow = g.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double *brow = b.data() + p * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += grow[j] * brow[j];
      out[i * k + p] += s;
    }
  }
}

}  // namespace serial

namespace parallel {

// Column tiles are independent; within a tile the loop nest matches the
// serial kernel so each element sees the same sequence of additions.
void MatMul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t n, std::size_t k,
            std::size_t m) {
  const std::ptrdiff_t tiles =
      static_cast<std::ptrdiff_t>((m + kColumnTile - 1) / kColumnTile);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < tiles; ++t) {
    const std::size_t j0 = static_cast<std::size_t>(t) * kColumnTile;
    const std::size_t j1 = std::min(m, j0 + kColumnTile);
    for (std::size_t i = 0; i < n; ++i) {
      double *o = out.data() + i * m;
      for (std::size_t j = j0; j < j1; ++j) o[j] = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = a[i * k + p];
        const double *brow = b.data() + p * m;
        for (std::size_t j = j0; j < j1; ++j) o[j] += aip * brow[j];
      }
    }
  }
}

void AccumulateATB(std::span<const double> a, std::span<const double> g,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < static_cast<std::ptrdiff_t>(k); ++pp) {
    const std::size_t p = static_cast<std::size_t>(pp);
    double *o = out.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double aip = a[i * k + p];
      const double *grow = g.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += aip * grow[j];
    }
  }
}

void AccumulateABT(std::span<const double> g, std::span<const double> b,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m) {
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(n * k);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / k;
    const std::size_t p = static_cast<std::size_t>(idx) % k;
    const double *grow = g.data() + i * m;
    const double *brow = b.data() + p * m;
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += grow[j] * brow[j];
    out[i * k + p] += s;
  }
}

}  // namespace parallel

namespace {

bool UseParallel(std::size_t n, std::size_t k, std::size_t m) {
  return MaxThreads() > 1 && n * k * m >= kParallelThreshold;
}

}  // namespace

void MatMul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t n, std::size_t k,
            std::size_t m) {
  if (UseParallel(n, k, m)) {
    parallel::MatMul(a, b, out, n, k, m);
  } else {
    serial::MatMul(a, b, out, n, k, m);
  }
}

void AccumulateATB(std::span<const double> a, std::span<const double> g,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m) {
  if (UseParallel(n, k, m)) {
    parallel::AccumulateATB(a, g, out, n, k, m);
  } else {
    serial::AccumulateATB(a, g, out, n, k, m);
  }
}

void AccumulateABT(std::span<const double> g, std::span<const double> b,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m) {
  if (UseParallel(n, k, m)) {
    parallel::AccumulateABT(g, b, out, n, k, m);
  } else {
    serial::AccumulateABT(g, b, out, n, k, m);
  }
}

void ParallelFor(std::size_t n, const std::function<void(std::size_t)> &body) {
  // The failure with the lowest index wins, independent of scheduling.
  std::exception_ptr failure;
  std::size_t failed_at = n;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (static_cast<std::size_t>(i) < failed_at) {
        failed_at = static_cast<std::size_t>(i);
        failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

int MaxThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace eelmo::net::kernels
