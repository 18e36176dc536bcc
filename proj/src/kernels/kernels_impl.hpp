#pragma once

#include <cstddef>

// Scalar reference kernels, shared with the SIMD translation units for
// remainder handling.

namespace ivp::kern::detail {

void sc_gemm_nn(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void sc_gemm_nt(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void sc_gemm_tn(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n, bool accumulate);

void sc_add(const double* x, const double* y, double* out, std::size_t n);
void sc_sub(const double* x, const double* y, double* out, std::size_t n);
void sc_mul(const double* x, const double* y, double* out, std::size_t n);
void sc_fmadd(const double* x, const double* y, double* acc, std::size_t n);
void sc_axpy(double s, const double* x, double* acc, std::size_t n);
void sc_scale(const double* x, double s, double* out, std::size_t n);

void sc_relu(const double* x, double* out, std::size_t n);
void sc_relu_grad(const double* x, const double* dy, double* acc, std::size_t n);
void sc_abs(const double* x, double* out, std::size_t n);
void sc_max_scalar(const double* x, double c, double* out, std::size_t n);
void sc_min_scalar(const double* x, double c, double* out, std::size_t n);
void sc_vmin(const double* x, const double* y, double* out, std::size_t n);
void sc_vmax(const double* x, const double* y, double* out, std::size_t n);

double sc_sum(const double* x, std::size_t n);
double sc_dot(const double* x, const double* y, std::size_t n);
void sc_colsum_acc(const double* m, double* acc, std::size_t rows, std::size_t cols);

void sc_interval_mul(const double* alo, const double* ahi,
                     const double* blo, const double* bhi,
                     double* clo, double* chi, std::size_t n);

}  // namespace ivp::kern::detail
