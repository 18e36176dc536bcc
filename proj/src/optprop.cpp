#include "ivprop/optprop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ivp::opt {

namespace {

double van_der_corput(std::size_t i) {
    double r = 0.0, base = 0.5;
    while (i) {
        if (i & 1) r += base;
        base *= 0.5;
        i >>= 1;
    }
    return r;
}

void clamp_to_box(std::vector<double>& x, const std::vector<double>& lo,
                  const std::vector<double>& hi) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

}  // namespace

double nelder_mead_box(const Objective& f, const std::vector<double>& lo,
                       const std::vector<double>& hi, const std::vector<double>& start,
                       std::size_t budget, CostCounter* counter) {
    const std::size_t n = lo.size();
    if (budget < n + 2)
        throw std::invalid_argument("nelder_mead_box: budget below n + 2 evaluations");
    std::size_t used = 0;
    double best = std::numeric_limits<double>::infinity();
    auto ev = [&](std::vector<double> x) {
        clamp_to_box(x, lo, hi);
        ++used;
        if (counter) ++counter->evals;
        const double v = f(x);
        best = std::min(best, v);
        return v;
    };

    // initial simplex: start plus one step per dimension
    std::vector<std::vector<double>> xs(n + 1, start);
    std::vector<double> fs(n + 1);
    for (std::size_t d = 0; d < n; ++d) {
        const double w = hi[d] - lo[d];
        double step = 0.25 * (w > 0.0 ? w : 1.0);
        if (start[d] + step > hi[d]) step = -step;
        xs[d + 1][d] += step;
    }
    for (std::size_t v = 0; v <= n; ++v) fs[v] = ev(xs[v]);

    constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
    while (used < budget) {
        // order
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        std::vector<std::vector<double>> xs2(n + 1);
        std::vector<double> fs2(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            xs2[i] = xs[idx[i]];
            fs2[i] = fs[idx[i]];
        }
        xs = std::move(xs2);
        fs = std::move(fs2);

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t d = 0; d < n; ++d) centroid[d] += xs[v][d] / static_cast<double>(n);

        auto along = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t d = 0; d < n; ++d) p[d] = centroid[d] + t * (centroid[d] - xs[n][d]);
            return p;
        };

        const std::vector<double> xr = along(kReflect);
        const double fr = ev(xr);
        if (used >= budget) break;
        if (fr < fs[0]) {
            const std::vector<double> xe = along(kExpand);
            const double fe = ev(xe);
            if (fe < fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
        } else if (fr < fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
        } else {
            const std::vector<double> xc = along(-kContract);
            const double fc = ev(xc);
            if (fc < fs[n]) {
                xs[n] = xc;
                fs[n] = fc;
            } else {
                for (std::size_t v = 1; v <= n && used < budget; ++v) {
                    for (std::size_t d = 0; d < n; ++d)
                        xs[v][d] = xs[0][d] + kShrink * (xs[v][d] - xs[0][d]);
                    fs[v] = ev(xs[v]);
                }
            }
        }
    }
    return best;
}

Interval opt_prop_fn(const Objective& f, const IntervalVector& box, const OptPropConfig& cfg,
                     CostCounter* counter) {
    if (cfg.multistarts == 0) throw std::invalid_argument("opt_prop: multistarts == 0");
    const std::size_t n = box.size();
    std::vector<double> lo(n), hi(n);
    bool degenerate = true;
    for (std::size_t i = 0; i < n; ++i) {
        lo[i] = box[i].lo;
        hi[i] = box[i].hi;
        if (box[i].width() > 0.0) degenerate = false;
    }
    if (degenerate) {
        if (counter) ++counter->evals;
        const double v = f(lo);
        return Interval(v, v);
    }

    // shared quasi-random interior starts (van der Corput with per-dimension
    // golden-ratio rotation) keep the min/max runs comparable
    constexpr double kGolden = 0.6180339887498949;
    std::vector<std::vector<double>> starts(cfg.multistarts, std::vector<double>(n));
    for (std::size_t s = 0; s < cfg.multistarts; ++s) {
        const double base = van_der_corput(s + 1);
        for (std::size_t d = 0; d < n; ++d) {
            const double frac = std::fmod(base + kGolden * static_cast<double>(d), 1.0);
            starts[s][d] = lo[d] + (hi[d] - lo[d]) * frac;
        }
    }

    double fmin = std::numeric_limits<double>::infinity();
    double fmax_neg = std::numeric_limits<double>::infinity();
    const Objective neg = [&](const std::vector<double>& x) { return -f(x); };
    for (std::size_t s = 0; s < cfg.multistarts; ++s)
        fmin = std::min(fmin, nelder_mead_box(f, lo, hi, starts[s], cfg.max_evals, counter));
    for (std::size_t s = 0; s < cfg.multistarts; ++s)
        fmax_neg = std::min(fmax_neg, nelder_mead_box(neg, lo, hi, starts[s], cfg.max_evals, counter));
    const double fmax = -fmax_neg;
    return Interval(std::min(fmin, fmax), std::max(fmin, fmax));
}

Interval opt_prop(const nn::MlpModel& surrogate, const IntervalVector& box,
                  const OptPropConfig& cfg, CostCounter* counter) {
    if (surrogate.in_dim() != box.size())
        throw ShapeError("opt_prop: surrogate in_dim " + std::to_string(surrogate.in_dim()) +
                         " vs box size " + std::to_string(box.size()));
    const Objective f = [&](const std::vector<double>& x) {
        Tensor t = Tensor::vector(x);
        return nn::mlp_forward(surrogate, t)[0];
    };
    return opt_prop_fn(f, box, cfg, counter);
}

}  // namespace ivp::opt
