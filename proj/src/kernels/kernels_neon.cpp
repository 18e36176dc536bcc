#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstring>

#include "ivprop/kernels.hpp"
#include "kernels_impl.hpp"

// NEON (2-lane double) variants of the hot kernels, mirroring the AVX2
// translation unit. Remainders fall back to the scalar reference loops.

namespace ivp::kern {
namespace {

using namespace detail;

void n_gemm_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        if (!accumulate) std::memset(crow, 0, n * sizeof(double));
        const double* arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const float64x2_t va = vdupq_n_f64(arow[kk]);
            const double* brow = b + kk * n;
            std::size_t j = 0;
            for (; j < n4; j += 4) {
                float64x2_t c0 = vld1q_f64(crow + j);
                float64x2_t c1 = vld1q_f64(crow + j + 2);
                c0 = vfmaq_f64(c0, va, vld1q_f64(brow + j));
                c1 = vfmaq_f64(c1, va, vld1q_f64(brow + j + 2));
                vst1q_f64(crow + j, c0);
                vst1q_f64(crow + j + 2, c1);
            }
            for (; j < n; ++j) crow[j] += arow[kk] * brow[j];
        }
    }
}

void n_add(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void n_sub(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) out[i] = x[i] - y[i];
}

void n_mul(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void n_fmadd(const double* x, const double* y, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) acc[i] += x[i] * y[i];
}

void n_axpy(double s, const double* x, double* acc, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), vs, vld1q_f64(x + i)));
    for (; i < n; ++i) acc[i] += s * x[i];
}

void n_scale(const double* x, double s, double* out, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vs, vld1q_f64(x + i)));
    for (; i < n; ++i) out[i] = s * x[i];
}

void n_relu(const double* x, double* out, std::size_t n) {
    const float64x2_t z = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmaxq_f64(vld1q_f64(x + i), z));
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void n_vmin(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vminq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) out[i] = x[i] < y[i] ? x[i] : y[i];
}

void n_vmax(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vmaxq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) out[i] = x[i] > y[i] ? x[i] : y[i];
}

double n_dot(const double* x, const double* y, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double n_sum(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void n_interval_mul(const double* alo, const double* ahi,
                    const double* blo, const double* bhi,
                    double* clo, double* chi, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t al = vld1q_f64(alo + i), ah = vld1q_f64(ahi + i);
        const float64x2_t bl = vld1q_f64(blo + i), bh = vld1q_f64(bhi + i);
        const float64x2_t p1 = vmulq_f64(al, bl), p2 = vmulq_f64(al, bh);
        const float64x2_t p3 = vmulq_f64(ah, bl), p4 = vmulq_f64(ah, bh);
        vst1q_f64(clo + i, vminq_f64(vminq_f64(p1, p2), vminq_f64(p3, p4)));
        vst1q_f64(chi + i, vmaxq_f64(vmaxq_f64(p1, p2), vmaxq_f64(p3, p4)));
    }
    if (i < n)
        sc_interval_mul(alo + i, ahi + i, blo + i, bhi + i, clo + i, chi + i, n - i);
}

}  // namespace

const Backend neon_backend = {
    "neon",
    n_gemm_nn, detail::sc_gemm_nt, detail::sc_gemm_tn,
    n_add,     n_sub,     n_mul,    n_fmadd, n_axpy, n_scale,
    n_relu,    detail::sc_relu_grad, detail::sc_abs,
    detail::sc_max_scalar, detail::sc_min_scalar,
    n_vmin,    n_vmax,
    n_sum,     n_dot,     detail::sc_colsum_acc,
    n_interval_mul,
};

}  // namespace ivp::kern

#endif  // __aarch64__
