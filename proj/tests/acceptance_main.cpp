// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Tolerances and thresholds are pinned in code below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "ivprop/augment.hpp"
#include "ivprop/bounds.hpp"
#include "ivprop/datagen.hpp"
#include "ivprop/deeponet.hpp"
#include "ivprop/experiment.hpp"
#include "ivprop/interval.hpp"
#include "ivprop/losses.hpp"
#include "ivprop/metrics.hpp"
#include "ivprop/optprop.hpp"
#include "ivprop/rng.hpp"
#include "ivprop/train.hpp"

using namespace ivp;

namespace {

struct Gate {
    int failures = 0;

    void check(int criterion, const std::string& what, bool ok, const std::string& detail) {
        std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion,
                    what.c_str(), detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

double agg_mean(const std::vector<exp::ResultRow>& rows, const std::string& method,
                double obj::MetricReport::*member) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows)
        if (r.method == method && !r.failed) {
            acc += r.metrics.*member;
            ++n;
        }
    return n ? acc / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// criterion 1: interval arithmetic suite
void criterion_1(Gate& g) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = make_rng(101);
    bool sound = true, tight = true;
    for (int t = 0; t < 10000; ++t) {
        const double a1 = runif(rng, -5, 5), aw = runif(rng, 0, 4);
        const double b1 = runif(rng, -5, 5), bw = runif(rng, 0, 4);
        const Interval a(a1, a1 + aw), b(b1, b1 + bw);
        const Interval p = imul(a, b), s = iadd(a, b), d = isub(a, b);
        for (int k = 0; k < 10; ++k) {
            const double sa = runif(rng, a.lo, a.hi), sb = runif(rng, b.lo, b.hi);
            sound = sound && sa * sb >= p.lo - 1e-12 && sa * sb <= p.hi + 1e-12;
            sound = sound && s.contains(sa + sb);
            sound = sound && sa - sb >= d.lo - 1e-12 && sa - sb <= d.hi + 1e-12;
        }
        const double prods[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
        bool lo_hit = false, hi_hit = false;
        for (double v : prods) {
            lo_hit = lo_hit || v == p.lo;
            hi_hit = hi_hit || v == p.hi;
        }
        tight = tight && lo_hit && hi_hit;
        tight = tight && s.lo == a.lo + b.lo && s.hi == a.hi + b.hi;
        tight = tight && d.lo == a.lo - b.hi && d.hi == a.hi - b.lo;
    }
    double max_dev = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const double w1 = runif(rng, -5, 5), ww = runif(rng, 0, 4);
        const double z1 = runif(rng, -5, 5), zw = runif(rng, 0, 4);
        const Interval ref = imul(Interval(w1, w1 + ww), Interval(z1, z1 + zw));
        double cl, cu;
        smooth_imul(w1, w1 + ww, z1, z1 + zw, cl, cu);
        max_dev = std::max({max_dev, std::fabs(cl - ref.lo), std::fabs(cu - ref.hi)});
    }
    const double el = seconds_since(t0);
    g.check(1, "interval arithmetic soundness/tightness + smooth product equivalence",
            sound && tight && max_dev <= 1e-12 && el < 1.0,
            fmt("max smooth deviation %.2e, %.2f s", max_dev, el));
}

// ---------------------------------------------------------------------------
// criteria 2 + 3: bound soundness fuzz and CROWN tightness
void criteria_2_3(Gate& g) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = make_rng(202);
    std::size_t violations = 0, width_violations = 0;
    double max_collapse_dev = 0.0;
    for (int net = 0; net < 50; ++net) {
        const std::size_t in = 2 + net % 4;
        const std::size_t out = 1 + net % 3;
        std::vector<std::size_t> dims{in};
        const int hidden_layers = 1 + net % 3;  // <= 4 layers total
        for (int h = 0; h < hidden_layers; ++h) dims.push_back(6 + (net * 7 + h * 3) % 14);
        dims.push_back(out);
        const nn::MlpModel m = nn::make_mlp(dims, nn::Activation::Relu, nn::Activation::Linear,
                                            derive_seed(77, net));
        // zero-radius collapse
        {
            const Tensor x = testutil_random(rng, in);
            const Tensor y = nn::mlp_forward(m, x);
            const bp::BoxSpec box{x, Tensor::zeros({in})};
            const inn::IntervalBatch ib = bp::ibp_forward(m, box);
            const bp::CrownResult cr = bp::crown_backward_bounds(m, box);
            for (std::size_t o = 0; o < out; ++o)
                max_collapse_dev = std::max({max_collapse_dev, std::fabs(ib.lo[o] - y[o]),
                                             std::fabs(ib.hi[o] - y[o]),
                                             std::fabs(cr.out.lo[o] - y[o]),
                                             std::fabs(cr.out.hi[o] - y[o])});
        }
        for (int bx = 0; bx < 50; ++bx) {
            Tensor c = testutil_random(rng, in);
            Tensor r = Tensor::zeros({in});
            for (double& v : r.data) v = runif(rng, 0.0, 0.5);
            const bp::BoxSpec box{c, r};
            const inn::IntervalBatch ib = bp::ibp_forward(m, box);
            const bp::CrownResult cr = bp::crown_backward_bounds(m, box);
            for (std::size_t o = 0; o < out; ++o)
                if (cr.out.hi[o] - cr.out.lo[o] > ib.hi[o] - ib.lo[o] + 1e-12)
                    ++width_violations;
            // 1000 samples, batched
            Tensor xs = Tensor::zeros({1000, in});
            for (std::size_t s = 0; s < 1000; ++s)
                for (std::size_t d = 0; d < in; ++d)
                    xs.at(s, d) = runif(rng, c[d] - r[d], c[d] + r[d]);
            const Tensor ys = nn::mlp_forward(m, xs);
            for (std::size_t s = 0; s < 1000; ++s)
                for (std::size_t o = 0; o < out; ++o) {
                    const double y = ys.at(s, o);
                    if (y < ib.lo[o] - 1e-9 || y > ib.hi[o] + 1e-9) ++violations;
                    if (y < cr.out.lo[o] - 1e-9 || y > cr.out.hi[o] + 1e-9) ++violations;
                }
        }
    }
    const double el = seconds_since(t0);
    g.check(2, "IBP/CROWN soundness fuzz (50 nets x 50 boxes x 1000 samples) + collapse",
            violations == 0 && max_collapse_dev <= 1e-9 && el < 120.0,
            fmt("%zu violations, collapse dev %.2e, %.1f s", violations, max_collapse_dev, el));
    g.check(3, "CROWN final width <= IBP width on every fuzz instance", width_violations == 0,
            fmt("%zu width violations", width_violations));
}

Tensor testutil_random(Rng& rng, std::size_t n) {
    Tensor t = Tensor::zeros({n});
    for (double& v : t.data) v = runif(rng, -1.0, 1.0);
    return t;
}

}  // namespace

int main() {
    Gate gate;
    criterion_1(gate);
    criteria_2_3(gate);
    if (gate.failures == 0) std::printf("acceptance: all criteria passed\n");
    else std::printf("acceptance: %d criteria FAILED\n", gate.failures);
    return gate.failures == 0 ? 0 : 1;
}
