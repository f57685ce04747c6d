#include "fib/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>

namespace fib::kernels {

namespace {

std::atomic<int> g_threads{1};

constexpr std::size_t kParallelWork = 1u << 15;

bool use_parallel(std::size_t work) { return g_threads.load() > 1 && work >= kParallelWork; }

inline void column_moments_one(std::span<const double> x, std::size_t rows, std::size_t cols,
                               std::span<const std::uint8_t> mask, std::size_t j, Moments out) {
  std::size_t first = rows;
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask.empty() || mask[r]) {
      first = r;
      break;
    }
  }
  if (first == rows) {
    out.mean[j] = 0.0;
    out.var[j] = 0.0;
    return;
  }
  const double shift = x[first * cols + j];
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t r = first; r < rows; ++r) {
    if (!mask.empty() && !mask[r]) continue;
    s += x[r * cols + j] - shift;
    ++n;
  }
  const double mean = shift + s / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t r = first; r < rows; ++r) {
    if (!mask.empty() && !mask[r]) continue;
    const double d = x[r * cols + j] - mean;
    ss += d * d;
  }
  // A constant column gives s == 0 and therefore mean == shift exactly.
  out.mean[j] = mean;
  out.var[j] = ss / static_cast<double>(n);
}

}  // namespace

namespace serial {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c.begin(), c.begin() + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c.begin(), c.begin() + k * n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double* brow = b.data() + r * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[r * k + p];
      double* crow = c.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.data() + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
      if (accumulate)
        c[i * k + p] += s;
      else
        c[i * k + p] = s;
    }
  }
}

void column_moments(std::span<const double> x, std::size_t rows, std::size_t cols,
                    std::span<const std::uint8_t> mask, Moments out) {
  for (std::size_t j = 0; j < cols; ++j) column_moments_one(x, rows, cols, mask, j, out);
}

}  // namespace serial

namespace parallel {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = c.data() + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  // Output rows are independent; each keeps the ascending-r accumulation order.
  const auto out_rows = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < out_rows; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    double* crow = c.data() + p * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const double av = a[r * k + p];
      const double* brow = b.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* arow = a.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.data() + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
      if (accumulate)
        c[i * k + p] += s;
      else
        c[i * k + p] = s;
    }
  }
}

void column_moments(std::span<const double> x, std::size_t rows, std::size_t cols,
                    std::span<const std::uint8_t> mask, Moments out) {
  const auto ncols = static_cast<std::ptrdiff_t>(cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 0; jj < ncols; ++jj)
    column_moments_one(x, rows, cols, mask, static_cast<std::size_t>(jj), out);
}

}  // namespace parallel

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (use_parallel(m * k * n))
    parallel::gemm_nn(a, b, c, m, k, n, accumulate);
  else
    serial::gemm_nn(a, b, c, m, k, n, accumulate);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (use_parallel(m * k * n))
    parallel::gemm_tn(a, b, c, m, k, n, accumulate);
  else
    serial::gemm_tn(a, b, c, m, k, n, accumulate);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  if (use_parallel(m * k * n))
    parallel::gemm_nt(a, b, c, m, n, k, accumulate);
  else
    serial::gemm_nt(a, b, c, m, n, k, accumulate);
}

void column_moments(std::span<const double> x, std::size_t rows, std::size_t cols,
                    std::span<const std::uint8_t> mask, Moments out) {
  if (use_parallel(rows * cols * 8))
    parallel::column_moments(x, rows, cols, mask, out);
  else
    serial::column_moments(x, rows, cols, mask, out);
}

void set_num_threads(int n) {
  n = std::max(1, n);
  g_threads.store(n);
  omp_set_num_threads(n);
}

int num_threads() { return g_threads.load(); }

}  // namespace fib::kernels
