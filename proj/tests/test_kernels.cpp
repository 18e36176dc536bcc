#include <doctest.h>

#include <cmath>

#include "ivprop/kernels.hpp"
#include "ivprop/rng.hpp"
#include "test_util.hpp"

using namespace ivp;
using testutil::random_tensor;

namespace {

// Backends available on this machine, scalar first.
std::vector<const kern::Backend*> backends() {
    std::vector<const kern::Backend*> out{&kern::scalar_backend};
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        out.push_back(&kern::avx2_backend);
#endif
#if defined(__aarch64__)
    out.push_back(&kern::neon_backend);
#endif
    return out;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::fabs(a[i]), std::fabs(b[i]), 1.0});
        CHECK(std::fabs(a[i] - b[i]) <= tol * scale);
    }
}

}  // namespace

TEST_CASE("gemm variants match the scalar reference across backends") {
    Rng rng = make_rng(42);
    // odd sizes exercise the SIMD remainder lanes
    const std::vector<std::array<std::size_t, 3>> sizes = {
        {1, 1, 1}, {3, 5, 7}, {8, 8, 8}, {13, 17, 9}, {32, 100, 64}, {5, 64, 33}};
    for (const auto& [m, k, n] : sizes) {
        const Tensor a = random_tensor({m, k}, rng);
        const Tensor b = random_tensor({k, n}, rng);
        const Tensor bt = random_tensor({n, k}, rng);
        const Tensor at = random_tensor({k, m}, rng);
        std::vector<double> ref_nn(m * n), ref_nt(m * n), ref_tn(m * n);
        kern::scalar_backend.gemm_nn(a.data.data(), b.data.data(), ref_nn.data(), m, k, n, false);
        kern::scalar_backend.gemm_nt(a.data.data(), bt.data.data(), ref_nt.data(), m, k, n, false);
        kern::scalar_backend.gemm_tn(at.data.data(), b.data.data(), ref_tn.data(), m, k, n, false);
        for (const kern::Backend* be : backends()) {
            std::vector<double> out(m * n, 0.5);
            be->gemm_nn(a.data.data(), b.data.data(), out.data(), m, k, n, false);
            expect_close(out, ref_nn, 1e-12);
            be->gemm_nt(a.data.data(), bt.data.data(), out.data(), m, k, n, false);
            expect_close(out, ref_nt, 1e-12);
            be->gemm_tn(at.data.data(), b.data.data(), out.data(), m, k, n, false);
            expect_close(out, ref_tn, 1e-12);
            // accumulate path
            std::vector<double> acc(m * n, 1.0), acc_ref(m * n, 1.0);
            be->gemm_nn(a.data.data(), b.data.data(), acc.data(), m, k, n, true);
            kern::scalar_backend.gemm_nn(a.data.data(), b.data.data(), acc_ref.data(), m, k, n, true);
            expect_close(acc, acc_ref, 1e-12);
        }
    }
}

TEST_CASE("elementwise and reduction kernels agree across backends") {
    Rng rng = make_rng(7);
    for (std::size_t n : {1u, 4u, 5u, 31u, 256u, 1001u}) {
        const Tensor x = random_tensor({n}, rng, -3.0, 3.0);
        const Tensor y = random_tensor({n}, rng, -3.0, 3.0);
        for (const kern::Backend* be : backends()) {
            std::vector<double> a(n), b(n);
            be->add(x.data.data(), y.data.data(), a.data(), n);
            kern::scalar_backend.add(x.data.data(), y.data.data(), b.data(), n);
            expect_close(a, b, 0.0);
            be->mul(x.data.data(), y.data.data(), a.data(), n);
            kern::scalar_backend.mul(x.data.data(), y.data.data(), b.data(), n);
            expect_close(a, b, 0.0);
            be->relu(x.data.data(), a.data(), n);
            kern::scalar_backend.relu(x.data.data(), b.data(), n);
            expect_close(a, b, 0.0);
            be->vmin(x.data.data(), y.data.data(), a.data(), n);
            kern::scalar_backend.vmin(x.data.data(), y.data.data(), b.data(), n);
            expect_close(a, b, 0.0);
            be->abs_v(x.data.data(), a.data(), n);
            kern::scalar_backend.abs_v(x.data.data(), b.data(), n);
            expect_close(a, b, 0.0);
            be->max_scalar(x.data.data(), 0.25, a.data(), n);
            kern::scalar_backend.max_scalar(x.data.data(), 0.25, b.data(), n);
            expect_close(a, b, 0.0);
            const double s1 = be->sum(x.data.data(), n);
            const double s2 = kern::scalar_backend.sum(x.data.data(), n);
            CHECK(std::fabs(s1 - s2) <= 1e-12 * std::max(1.0, std::fabs(s2)));
            const double d1 = be->dot(x.data.data(), y.data.data(), n);
            const double d2 = kern::scalar_backend.dot(x.data.data(), y.data.data(), n);
            CHECK(std::fabs(d1 - d2) <= 1e-12 * std::max(1.0, std::fabs(d2)));
        }
    }
}

TEST_CASE("interval product kernel agrees across backends and with brute force") {
    Rng rng = make_rng(99);
    const std::size_t n = 257;
    Tensor alo = random_tensor({n}, rng, -2.0, 2.0), ahi = alo;
    Tensor blo = random_tensor({n}, rng, -2.0, 2.0), bhi = blo;
    for (std::size_t i = 0; i < n; ++i) {
        ahi[i] += runif(rng, 0.0, 1.5);
        bhi[i] += runif(rng, 0.0, 1.5);
    }
    std::vector<double> rlo(n), rhi(n);
    kern::scalar_backend.interval_mul(alo.data.data(), ahi.data.data(), blo.data.data(),
                                      bhi.data.data(), rlo.data(), rhi.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p1 = alo[i] * blo[i], p2 = alo[i] * bhi[i];
        const double p3 = ahi[i] * blo[i], p4 = ahi[i] * bhi[i];
        CHECK(rlo[i] == std::min(std::min(p1, p2), std::min(p3, p4)));
        CHECK(rhi[i] == std::max(std::max(p1, p2), std::max(p3, p4)));
    }
    for (const kern::Backend* be : backends()) {
        std::vector<double> blo2(n), bhi2(n);
        be->interval_mul(alo.data.data(), ahi.data.data(), blo.data.data(), bhi.data.data(),
                         blo2.data(), bhi2.data(), n);
        expect_close(blo2, rlo, 0.0);
        expect_close(bhi2, rhi, 0.0);
    }
}

TEST_CASE("backend dispatch honours force_backend") {
    kern::force_backend("scalar");
    CHECK(std::string(kern::active().name) == "scalar");
    kern::force_backend("auto");
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        CHECK(std::string(kern::active().name) == "avx2");
#endif
    CHECK_THROWS(kern::force_backend("no-such-backend"));
    kern::force_backend("auto");
}
