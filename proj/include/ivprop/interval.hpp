#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

// Exact interval arithmetic on doubles. No outward rounding: the networks
// built on top are trained, not verified to machine precision.

namespace ivp {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    explicit Interval(double v) : Interval(v, v) {}
    Interval(double l, double h) : lo(norm(l)), hi(norm(h)) {
        if (!(lo <= hi))
            throw std::invalid_argument("Interval: lo > hi (" + std::to_string(l) +
                                        " > " + std::to_string(h) + ")");
    }

    double midpoint() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
    bool degenerate() const { return lo == hi; }
    bool contains(double v) const { return lo <= v && v <= hi; }

  private:
    // -0.0 -> 0.0 so endpoint comparisons are deterministic
    static double norm(double v) { return v == 0.0 ? 0.0 : v; }
};

using IntervalVector = std::vector<Interval>;

inline Interval iadd(Interval a, Interval b) {
    return Interval(a.lo + b.lo, a.hi + b.hi);
}

inline Interval isub(Interval a, Interval b) {
    return Interval(a.lo - b.hi, a.hi - b.lo);
}

inline Interval imul(Interval a, Interval b) {
    const double p1 = a.lo * b.lo;
    const double p2 = a.lo * b.hi;
    const double p3 = a.hi * b.lo;
    const double p4 = a.hi * b.hi;
    return Interval(std::min(std::min(p1, p2), std::min(p3, p4)),
                    std::max(std::max(p1, p2), std::max(p3, p4)));
}

// Smooth (min/max-composition) reformulation of the interval product, the
// form differentiated by the interval layers. Continuous everywhere,
// differentiable away from product ties; equals imul exactly.
inline void smooth_imul(double wl, double wu, double zl, double zu,
                        double& cl, double& cu) {
    const double p1 = wl * zl;
    const double p2 = wl * zu;
    const double p3 = wu * zl;
    const double p4 = wu * zu;
    // min(a,b) = a - relu(a-b), max(a,b) = a + relu(b-a)
    const auto relu = [](double v) { return v > 0.0 ? v : 0.0; };
    const auto mn = [&](double a, double b) { return a - relu(a - b); };
    const auto mx = [&](double a, double b) { return a + relu(b - a); };
    cl = mn(mn(p1, p2), mn(p3, p4));
    cu = mx(mx(p1, p2), mx(p3, p4));
}

inline double midpoint(Interval a) { return a.midpoint(); }
inline double width(Interval a) { return a.width(); }

inline double overlap(Interval a, Interval b) {
    return std::max(0.0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
}

inline Interval hull(Interval a, Interval b) {
    return Interval(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
}

}  // namespace ivp
