#pragma once

#include <cstddef>

// Dense numeric kernels used by the tensor/autodiff layer and the interval
// layers. Every kernel has a scalar reference implementation; on x86 an AVX2
// variant is selected at runtime (NEON on aarch64). Scalar and SIMD variants
// are equivalence-tested against each other.
//
// All matrices are row-major doubles.

namespace ivp::kern {

struct Backend {
    const char* name;

    // c(m x n) = a(m x k) * b(k x n), c += ... when accumulate
    void (*gemm_nn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);
    // c(m x n) = a(m x k) * b(n x k)^T
    void (*gemm_nt)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);
    // c(m x n) = a(k x m)^T * b(k x n)
    void (*gemm_tn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);

    void (*add)(const double* x, const double* y, double* out, std::size_t n);
    void (*sub)(const double* x, const double* y, double* out, std::size_t n);
    void (*mul)(const double* x, const double* y, double* out, std::size_t n);
    // acc += x .* y
    void (*fmadd)(const double* x, const double* y, double* acc, std::size_t n);
    // acc += s * x
    void (*axpy)(double s, const double* x, double* acc, std::size_t n);
    void (*scale)(const double* x, double s, double* out, std::size_t n);

    void (*relu)(const double* x, double* out, std::size_t n);
    // acc += dy where x > 0 (subgradient 0 at the kink)
    void (*relu_grad)(const double* x, const double* dy, double* acc, std::size_t n);
    void (*abs_v)(const double* x, double* out, std::size_t n);
    void (*max_scalar)(const double* x, double c, double* out, std::size_t n);
    void (*min_scalar)(const double* x, double c, double* out, std::size_t n);
    void (*vmin)(const double* x, const double* y, double* out, std::size_t n);
    void (*vmax)(const double* x, const double* y, double* out, std::size_t n);

    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    // acc[j] += sum_i m[i, j]
    void (*colsum_acc)(const double* m, double* acc, std::size_t rows, std::size_t cols);

    // Exact interval product: [clo, chi] = [alo, ahi] * [blo, bhi] elementwise,
    // endpoints from the four endpoint products.
    void (*interval_mul)(const double* alo, const double* ahi,
                         const double* blo, const double* bhi,
                         double* clo, double* chi, std::size_t n);
};

extern const Backend scalar_backend;
#if defined(__x86_64__) || defined(_M_X64)
extern const Backend avx2_backend;
#endif
#if defined(__aarch64__)
extern const Backend neon_backend;
#endif

// Active backend. Chosen once at startup from CPU features, overridable via
// the IVPROP_KERNELS env var ("scalar", "avx2", "neon", "auto") or force_backend().
const Backend& active();
void force_backend(const char* name);

// Transcendentals are shared scalar code in both backends so results are
// bit-identical across them.
void tanh_v(const double* x, double* out, std::size_t n);
void exp_v(const double* x, double* out, std::size_t n);
void softplus_v(const double* x, double* out, std::size_t n);
void sigmoid_v(const double* x, double* out, std::size_t n);

}  // namespace ivp::kern
