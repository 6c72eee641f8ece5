#pragma once

#include <cstddef>

// Dense inner loops used by the tensor/autograd layer. Each kernel has a
// scalar reference implementation and an AVX2+FMA variant; the backend is
// picked once at startup from CPUID and can be pinned for equivalence tests.
namespace mf::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
// Pin the backend (tests). Requesting Avx2 on a machine without it throws.
void set_backend(Backend b);
const char* backend_name(Backend b);

// y += W x, W row-major (rows x cols)
void matvec_acc(const double* w, const double* x, double* y, std::size_t rows,
                std::size_t cols);
// x += W^T a, W row-major (rows x cols), a has length rows
void matvec_t_acc(const double* w, const double* a, double* x, std::size_t rows,
                  std::size_t cols);
// W += a x^T (outer product), a length rows, x length cols
void outer_acc(double* w, const double* a, const double* x, std::size_t rows,
               std::size_t cols);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);

namespace detail {
void matvec_acc_scalar(const double*, const double*, double*, std::size_t, std::size_t);
void matvec_t_acc_scalar(const double*, const double*, double*, std::size_t, std::size_t);
void outer_acc_scalar(double*, const double*, const double*, std::size_t, std::size_t);
void axpy_scalar(double, const double*, double*, std::size_t);
double dot_scalar(const double*, const double*, std::size_t);

void matvec_acc_avx2(const double*, const double*, double*, std::size_t, std::size_t);
void matvec_t_acc_avx2(const double*, const double*, double*, std::size_t, std::size_t);
void outer_acc_avx2(double*, const double*, const double*, std::size_t, std::size_t);
void axpy_avx2(double, const double*, double*, std::size_t);
double dot_avx2(const double*, const double*, std::size_t);

bool cpu_has_avx2();
}  // namespace detail

}  // namespace mf::kernels
