#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "ivprop/kernels.hpp"
#include "kernels_impl.hpp"

// AVX2/FMA variants of the hot kernels. Remainder lanes fall back to the
// scalar reference loops. Reductions use vector accumulators, so last-ulp
// rounding may differ from the scalar backend; equivalence tests allow 1e-12.

namespace ivp::kern {
namespace {

using namespace detail;

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void x_gemm_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    const std::size_t n8 = n & ~std::size_t(7);
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        if (!accumulate) std::memset(crow, 0, n * sizeof(double));
        const double* arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const __m256d va = _mm256_set1_pd(arow[kk]);
            const double* brow = b + kk * n;
            std::size_t j = 0;
            for (; j < n8; j += 8) {
                __m256d c0 = _mm256_loadu_pd(crow + j);
                __m256d c1 = _mm256_loadu_pd(crow + j + 4);
                c0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), c0);
                c1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j + 4), c1);
                _mm256_storeu_pd(crow + j, c0);
                _mm256_storeu_pd(crow + j + 4, c1);
            }
            for (; j < n; ++j) crow[j] += arow[kk] * brow[j];
        }
    }
}

void x_gemm_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    const std::size_t k4 = k & ~std::size_t(3);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            __m256d acc = _mm256_setzero_pd();
            std::size_t kk = 0;
            for (; kk < k4; kk += 4)
                acc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + kk),
                                      _mm256_loadu_pd(brow + kk), acc);
            double s = hsum(acc);
            for (; kk < k; ++kk) s += arow[kk] * brow[kk];
            crow[j] = accumulate ? crow[j] + s : s;
        }
    }
}

void x_gemm_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* arow = a + kk * m;
        const double* brow = b + kk * n;
        for (std::size_t i = 0; i < m; ++i) {
            const __m256d va = _mm256_set1_pd(arow[i]);
            double* crow = c + i * n;
            std::size_t j = 0;
            for (; j < n4; j += 4) {
                __m256d cv = _mm256_loadu_pd(crow + j);
                cv = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), cv);
                _mm256_storeu_pd(crow + j, cv);
            }
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

void x_add(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void x_sub(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] - y[i];
}

void x_mul(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void x_fmadd(const double* x, const double* y, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d a = _mm256_loadu_pd(acc + i);
        a = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a);
        _mm256_storeu_pd(acc + i, a);
    }
    for (; i < n; ++i) acc[i] += x[i] * y[i];
}

void x_axpy(double s, const double* x, double* acc, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d a = _mm256_loadu_pd(acc + i);
        a = _mm256_fmadd_pd(vs, _mm256_loadu_pd(x + i), a);
        _mm256_storeu_pd(acc + i, a);
    }
    for (; i < n; ++i) acc[i] += s * x[i];
}

void x_scale(const double* x, double s, double* out, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = s * x[i];
}

void x_relu(const double* x, double* out, std::size_t n) {
    const __m256d z = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), z));
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void x_relu_grad(const double* x, const double* dy, double* acc, std::size_t n) {
    const __m256d z = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), z, _CMP_GT_OQ);
        const __m256d g = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), g));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0) acc[i] += dy[i];
}

void x_abs(const double* x, double* out, std::size_t n) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = std::fabs(x[i]);
}

void x_max_scalar(const double* x, double c, double* out, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), vc));
    for (; i < n; ++i) out[i] = x[i] > c ? x[i] : c;
}

void x_min_scalar(const double* x, double c, double* out, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_loadu_pd(x + i), vc));
    for (; i < n; ++i) out[i] = x[i] < c ? x[i] : c;
}

void x_vmin(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] < y[i] ? x[i] : y[i];
}

void x_vmax(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] > y[i] ? x[i] : y[i];
}

double x_sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double x_dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void x_colsum_acc(const double* m, double* acc, std::size_t rows, std::size_t cols) {
    const std::size_t c4 = cols & ~std::size_t(3);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = m + i * cols;
        std::size_t j = 0;
        for (; j < c4; j += 4) {
            __m256d a = _mm256_loadu_pd(acc + j);
            _mm256_storeu_pd(acc + j, _mm256_add_pd(a, _mm256_loadu_pd(row + j)));
        }
        for (; j < cols; ++j) acc[j] += row[j];
    }
}

void x_interval_mul(const double* alo, const double* ahi,
                    const double* blo, const double* bhi,
                    double* clo, double* chi, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d al = _mm256_loadu_pd(alo + i);
        const __m256d ah = _mm256_loadu_pd(ahi + i);
        const __m256d bl = _mm256_loadu_pd(blo + i);
        const __m256d bh = _mm256_loadu_pd(bhi + i);
        const __m256d p1 = _mm256_mul_pd(al, bl);
        const __m256d p2 = _mm256_mul_pd(al, bh);
        const __m256d p3 = _mm256_mul_pd(ah, bl);
        const __m256d p4 = _mm256_mul_pd(ah, bh);
        _mm256_storeu_pd(clo + i, _mm256_min_pd(_mm256_min_pd(p1, p2), _mm256_min_pd(p3, p4)));
        _mm256_storeu_pd(chi + i, _mm256_max_pd(_mm256_max_pd(p1, p2), _mm256_max_pd(p3, p4)));
    }
    if (i < n)
        sc_interval_mul(alo + i, ahi + i, blo + i, bhi + i, clo + i, chi + i, n - i);
}

}  // namespace

const Backend avx2_backend = {
    "avx2",
    x_gemm_nn, x_gemm_nt, x_gemm_tn,
    x_add,     x_sub,     x_mul,    x_fmadd, x_axpy, x_scale,
    x_relu,    x_relu_grad, x_abs,  x_max_scalar, x_min_scalar,
    x_vmin,    x_vmax,
    x_sum,     x_dot,     x_colsum_acc,
    x_interval_mul,
};

}  // namespace ivp::kern

#endif  // x86_64
