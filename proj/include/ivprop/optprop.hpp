#pragma once

#include <cstdint>
#include <functional>

#include "ivprop/interval.hpp"
#include "ivprop/layers.hpp"

// Optimisation-based interval propagation baseline: per query box, minimise
// and maximise a trained pointwise surrogate with multistart Nelder-Mead
// projected onto the box.

namespace ivp::opt {

struct OptPropConfig {
    std::size_t multistarts = 5;
    std::size_t max_evals = 200;      // per start; always consumed exactly
    double init_step_frac = 0.25;     // initial simplex size, fraction of box width
    std::uint64_t seed = 0;
};

struct CostCounter {
    std::size_t evals = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Minimises f over the box; runs until exactly `budget` evaluations have been
// spent (the counter is the paper-style cost model, so no early stop).
double nelder_mead_box(const Objective& f, const std::vector<double>& lo,
                       const std::vector<double>& hi, const std::vector<double>& start,
                       std::size_t budget, CostCounter* counter);

// [best min, best max] over the box from `multistarts` van-der-Corput interior
// starts each; exactly 2 * multistarts * max_evals objective calls for
// non-degenerate boxes.
Interval opt_prop_fn(const Objective& f, const IntervalVector& box, const OptPropConfig& cfg,
                     CostCounter* counter);

Interval opt_prop(const nn::MlpModel& surrogate, const IntervalVector& box,
                  const OptPropConfig& cfg, CostCounter* counter);

}  // namespace ivp::opt
