// AVX2+FMA variants. Compiled with -mavx2 -mfma; only reached after the
// runtime CPUID check in kernels.cpp.

#include "mf/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace mf::kernels::detail {

namespace {
inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}
}  // namespace

void matvec_acc_avx2(const double* w, const double* x, double* y,
                     std::size_t rows, std::size_t cols) {
  const std::size_t c4 = cols & ~std::size_t{3};
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wi = w + i * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j < c4; j += 4) {
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(wi + j), _mm256_loadu_pd(x + j), acc);
    }
    double s = hsum(acc);
    for (; j < cols; ++j) s += wi[j] * x[j];
    y[i] += s;
  }
}

void matvec_t_acc_avx2(const double* w, const double* a, double* x,
                       std::size_t rows, std::size_t cols) {
  const std::size_t c4 = cols & ~std::size_t{3};
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wi = w + i * cols;
    const __m256d ai = _mm256_set1_pd(a[i]);
    std::size_t j = 0;
    for (; j < c4; j += 4) {
      __m256d xv = _mm256_loadu_pd(x + j);
      xv = _mm256_fmadd_pd(ai, _mm256_loadu_pd(wi + j), xv);
      _mm256_storeu_pd(x + j, xv);
    }
    for (; j < cols; ++j) x[j] += a[i] * wi[j];
  }
}

void outer_acc_avx2(double* w, const double* a, const double* x,
                    std::size_t rows, std::size_t cols) {
  const std::size_t c4 = cols & ~std::size_t{3};
  for (std::size_t i = 0; i < rows; ++i) {
    double* wi = w + i * cols;
    const __m256d ai = _mm256_set1_pd(a[i]);
    std::size_t j = 0;
    for (; j < c4; j += 4) {
      __m256d wv = _mm256_loadu_pd(wi + j);
      wv = _mm256_fmadd_pd(ai, _mm256_loadu_pd(x + j), wv);
      _mm256_storeu_pd(wi + j, wv);
    }
    for (; j < cols; ++j) wi[j] += a[i] * x[j];
  }
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  const std::size_t n4 = n & ~std::size_t{3};
  std::size_t i = 0;
  for (; i < n4; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n & ~std::size_t{3};
  std::size_t i = 0;
  for (; i < n4; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace mf::kernels::detail

#else

namespace mf::kernels::detail {

void matvec_acc_avx2(const double* w, const double* x, double* y,
                     std::size_t rows, std::size_t cols) {
  matvec_acc_scalar(w, x, y, rows, cols);
}
void matvec_t_acc_avx2(const double* w, const double* a, double* x,
                       std::size_t rows, std::size_t cols) {
  matvec_t_acc_scalar(w, a, x, rows, cols);
}
void outer_acc_avx2(double* w, const double* a, const double* x,
                    std::size_t rows, std::size_t cols) {
  outer_acc_scalar(w, a, x, rows, cols);
}
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  axpy_scalar(alpha, x, y, n);
}
double dot_avx2(const double* a, const double* b, std::size_t n) {
  return dot_scalar(a, b, n);
}

}  // namespace mf::kernels::detail

#endif
