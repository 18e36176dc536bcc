#include "kernels_impl.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ivprop/kernels.hpp"

namespace ivp::kern::detail {

void sc_gemm_nn(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        if (!accumulate) std::memset(crow, 0, n * sizeof(double));
        const double* arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

void sc_gemm_nt(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            crow[j] = accumulate ? crow[j] + acc : acc;
        }
    }
}

void sc_gemm_tn(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    // a is (k x m), c = a^T * b
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* arow = a + kk * m;
        const double* brow = b + kk * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double aki = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
        }
    }
}

void sc_add(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void sc_sub(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

void sc_mul(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void sc_fmadd(const double* x, const double* y, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * y[i];
}

void sc_axpy(double s, const double* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += s * x[i];
}

void sc_scale(const double* x, double s, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = s * x[i];
}

void sc_relu(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void sc_relu_grad(const double* x, const double* dy, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > 0.0) acc[i] += dy[i];
}

void sc_abs(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::fabs(x[i]);
}

void sc_max_scalar(const double* x, double c, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > c ? x[i] : c;
}

void sc_min_scalar(const double* x, double c, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] < c ? x[i] : c;
}

void sc_vmin(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] < y[i] ? x[i] : y[i];
}

void sc_vmax(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > y[i] ? x[i] : y[i];
}

double sc_sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sc_dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void sc_colsum_acc(const double* m, double* acc, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = m + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc[j] += row[j];
    }
}

void sc_interval_mul(const double* alo, const double* ahi,
                     const double* blo, const double* bhi,
                     double* clo, double* chi, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double p1 = alo[i] * blo[i];
        const double p2 = alo[i] * bhi[i];
        const double p3 = ahi[i] * blo[i];
        const double p4 = ahi[i] * bhi[i];
        clo[i] = std::min(std::min(p1, p2), std::min(p3, p4));
        chi[i] = std::max(std::max(p1, p2), std::max(p3, p4));
    }
}

}  // namespace ivp::kern::detail

namespace ivp::kern {

using namespace detail;

const Backend scalar_backend = {
    "scalar",
    sc_gemm_nn, sc_gemm_nt, sc_gemm_tn,
    sc_add,     sc_sub,     sc_mul,    sc_fmadd, sc_axpy, sc_scale,
    sc_relu,    sc_relu_grad, sc_abs,  sc_max_scalar, sc_min_scalar,
    sc_vmin,    sc_vmax,
    sc_sum,     sc_dot,     sc_colsum_acc,
    sc_interval_mul,
};

void tanh_v(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

void exp_v(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void softplus_v(const double* x, double* out, std::size_t n) {
    // log(1 + e^x), stable on both tails
    for (std::size_t i = 0; i < n; ++i)
        out[i] = x[i] > 0.0 ? x[i] + std::log1p(std::exp(-x[i]))
                            : std::log1p(std::exp(x[i]));
}

void sigmoid_v(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] >= 0.0) {
            const double e = std::exp(-x[i]);
            out[i] = 1.0 / (1.0 + e);
        } else {
            const double e = std::exp(x[i]);
            out[i] = e / (1.0 + e);
        }
    }
}

}  // namespace ivp::kern
