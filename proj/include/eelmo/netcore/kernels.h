#ifndef EELMO_NETCORE_KERNELS_H_
#define EELMO_NETCORE_KERNELS_H_

#include <cstddef>
#include <functional>
#include <span>

// Dense row-major kernels. Every kernel exists twice: a serial reference and
// an OpenMP version. Both accumulate each output element in the same order,
// so their results are bitwise identical; tests hold them to that.
namespace eelmo::net::kernels {

namespace serial {

// out[n x m] = a[n x k] * b[k x m]
void MatMul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t n, std::size_t k,
            std::size_t m);
// out[k x m] += a[n x k]^T * g[n x m]
void AccumulateATB(std::span<const double> a, std::span<const double> g,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m);
// out[n x k] += g[n x m] * b[k x m]^T
void AccumulateABT(std::span<const double> g, std::span<const double> b,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m);

}  // namespace serial

namespace parallel {

void MatMul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t n, std::size_t k,
            std::size_t m);
void AccumulateATB(std::span<const double> a, std::span<const double> g,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m);
void AccumulateABT(std::span<const double> g, std::span<const double> b,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m);

}  // namespace parallel

// Dispatchers: parallel above a work threshold, serial below.
void MatMul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t n, std::size_t k,
            std::size_t m);
void AccumulateATB(std::span<const double> a, std::span<const double> g,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m);
void AccumulateABT(std::span<const double> g, std::span<const double> b,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m);

// Multiply-add count at which the dispatchers switch to OpenMP.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 16;

// Runs body(i) for i in [0, n) across OpenMP threads. The body must write
// only to slots owned by index i.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)> &body);

int MaxThreads();

}  // namespace eelmo::net::kernels

#endif  // EELMO_NETCORE_KERNELS_H_
