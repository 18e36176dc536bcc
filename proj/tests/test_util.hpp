#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ivprop/layers.hpp"
#include "ivprop/rng.hpp"
#include "ivprop/tape.hpp"
#include "ivprop/tensor.hpp"

// Shared helpers for the unit and acceptance suites.

namespace testutil {

using ivp::Tensor;

// Central finite-difference gradient check. `build` must register one leaf
// per entry of `params` (reading the current tensor values) in order,
// pushing the leaf ids into its second argument, and return a scalar loss.
// Returns the max relative error (abs floor 1e-7) over up to
// `max_entries_per_param` randomly chosen entries of each parameter.
inline double max_grad_rel_err(
    std::vector<Tensor*> params,
    const std::function<ivp::ad::VarId(ivp::ad::Tape&, std::vector<ivp::ad::VarId>&)>& build,
    std::uint64_t seed = 1234, std::size_t max_entries_per_param = 24, double h = 1e-5) {
    ivp::ad::Tape tape;
    std::vector<ivp::ad::VarId> ids;
    const ivp::ad::VarId loss = build(tape, ids);
    const std::vector<Tensor> grads = tape.gradients(loss);

    auto loss_value = [&]() {
        ivp::ad::Tape t2;
        std::vector<ivp::ad::VarId> ids2;
        return t2.val(build(t2, ids2))[0];
    };

    ivp::Rng rng = ivp::make_rng(seed);
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& t = *params[p];
        const Tensor& g = grads[ids[p]];
        std::vector<std::size_t> entries(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) entries[i] = i;
        std::shuffle(entries.begin(), entries.end(), rng);
        if (entries.size() > max_entries_per_param) entries.resize(max_entries_per_param);
        for (std::size_t e : entries) {
            const double keep = t[e];
            t[e] = keep + h;
            const double fp = loss_value();
            t[e] = keep - h;
            const double fm = loss_value();
            t[e] = keep;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = g.data.empty() ? 0.0 : g[e];
            const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-7});
            worst = std::max(worst, std::fabs(fd - an) / denom);
        }
    }
    return worst;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, ivp::Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = ivp::runif(rng, lo, hi);
    return t;
}

inline ivp::nn::MlpModel random_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed,
                                    ivp::nn::Activation hidden = ivp::nn::Activation::Relu,
                                    ivp::nn::Activation out = ivp::nn::Activation::Linear) {
    return ivp::nn::make_mlp(dims, hidden, out, seed);
}

}  // namespace testutil
