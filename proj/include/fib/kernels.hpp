#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Dense row-major kernels used by the tensor ops.
//
// Every kernel exists twice: a serial reference in `serial` and an OpenMP
// version in `parallel`. The parallel versions split work only across
// independent output elements and keep the per-element summation order of
// the serial version, so both produce bit-identical results. The unqualified
// entry points pick one based on problem size and the active thread count.
namespace fib::kernels {

struct Moments {
  std::span<double> mean;
  std::span<double> var;
};

namespace serial {

// C[m x n] (+)= A[m x k] * B[k x n]
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// C[k x n] (+)= A[m x k]^T * B[m x n]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// C[m x k] (+)= A[m x n] * B[k x n]^T
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate);

// Per-column biased mean/variance over the rows with mask[r] != 0 (all rows
// when mask is empty). The mean is shifted by the first active row so a
// constant column yields exactly zero deviation.
void column_moments(std::span<const double> x, std::size_t rows, std::size_t cols,
                    std::span<const std::uint8_t> mask, Moments out);

}  // namespace serial

namespace parallel {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate);
void column_moments(std::span<const double> x, std::size_t rows, std::size_t cols,
                    std::span<const std::uint8_t> mask, Moments out);

}  // namespace parallel

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate);
void column_moments(std::span<const double> x, std::size_t rows, std::size_t cols,
                    std::span<const std::uint8_t> mask, Moments out);

// Thread count used by the parallel kernels and evaluation loops.
void set_num_threads(int n);
int num_threads();

}  // namespace fib::kernels
