#include "mf/kernels.hpp"

#include <stdexcept>

namespace mf::kernels {

namespace detail {

void matvec_acc_scalar(const double* w, const double* x, double* y,
                       std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wi = w + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += wi[j] * x[j];
    y[i] += acc;
  }
}

void matvec_t_acc_scalar(const double* w, const double* a, double* x,
                         std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wi = w + i * cols;
    const double ai = a[i];
    for (std::size_t j = 0; j < cols; ++j) x[j] += ai * wi[j];
  }
}

void outer_acc_scalar(double* w, const double* a, const double* x,
                      std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* wi = w + i * cols;
    const double ai = a[i];
    for (std::size_t j = 0; j < cols; ++j) wi[j] += ai * x[j];
  }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

}  // namespace detail

namespace {
Backend g_backend = detail::cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !detail::cpu_has_avx2())
    throw std::runtime_error("AVX2 backend requested but CPU lacks AVX2/FMA");
  g_backend = b;
}

const char* backend_name(Backend b) {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

void matvec_acc(const double* w, const double* x, double* y, std::size_t rows,
                std::size_t cols) {
  if (g_backend == Backend::Avx2)
    detail::matvec_acc_avx2(w, x, y, rows, cols);
  else
    detail::matvec_acc_scalar(w, x, y, rows, cols);
}

void matvec_t_acc(const double* w, const double* a, double* x, std::size_t rows,
                  std::size_t cols) {
  if (g_backend == Backend::Avx2)
    detail::matvec_t_acc_avx2(w, a, x, rows, cols);
  else
    detail::matvec_t_acc_scalar(w, a, x, rows, cols);
}

void outer_acc(double* w, const double* a, const double* x, std::size_t rows,
               std::size_t cols) {
  if (g_backend == Backend::Avx2)
    detail::outer_acc_avx2(w, a, x, rows, cols);
  else
    detail::outer_acc_scalar(w, a, x, rows, cols);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  if (g_backend == Backend::Avx2)
    detail::axpy_avx2(alpha, x, y, n);
  else
    detail::axpy_scalar(alpha, x, y, n);
}

double dot(const double* a, const double* b, std::size_t n) {
  if (g_backend == Backend::Avx2) return detail::dot_avx2(a, b, n);
  return detail::dot_scalar(a, b, n);
}

}  // namespace mf::kernels
