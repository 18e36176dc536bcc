#pragma once

#include <vector>

#include "ivprop/inn.hpp"
#include "ivprop/layers.hpp"
#include "ivprop/tape.hpp"
#include "ivprop/tensor.hpp"

// IBP and CROWN certified bounds over relu/linear MLPs, usable for inference
// and inside differentiable training losses.

namespace ivp::bp {

using inn::IntervalBatch;

// ell_inf box around center with per-coordinate radius; rows are samples when
// rank 2.
struct BoxSpec {
    Tensor center;
    Tensor radius;  // >= 0 elementwise
};

BoxSpec make_box(Tensor center, Tensor radius);
BoxSpec box_from_interval(const IntervalVector& x);

struct PreActBounds {
    Tensor lo, hi;    // pre-activation bounds
    Tensor alpha;     // chosen lower-slope per neuron, in [0, 1]
};

// Affine envelopes A_lo x + c_lo <= f(x) <= A_hi x + c_hi over the input box.
struct LinearBounds {
    Tensor A_lo, c_lo;  // (out x in), (out)
    Tensor A_hi, c_hi;
};

// Layer-wise center/radius propagation; batched (box rows are samples).
IntervalBatch ibp_forward(const nn::MlpModel& m, const BoxSpec& box);

// Same pass, also returning per-layer pre-activation bounds (single box).
struct IbpTrace {
    std::vector<PreActBounds> pre;  // one per layer
    IntervalBatch out;              // post-activation output bounds
};
IbpTrace ibp_collect(const nn::MlpModel& m, const BoxSpec& box);

// Per-neuron relu relaxation from pre-activation bounds: upper chord,
// adaptive lower slope (alpha = 1 if hi >= |lo| else 0; stable neurons get
// identity/zero slopes).
struct ReluRelaxation {
    Tensor up_slope, up_intercept, lo_slope;
};
ReluRelaxation crown_relax_relu(const PreActBounds& b);

struct CrownResult {
    LinearBounds linear;
    IntervalBatch out;  // concretised over the box, intersected with IBP
};

// Backward substitution with IBP intermediate bounds (CROWN-IBP style);
// single box with vector center.
CrownResult crown_backward_bounds(const nn::MlpModel& m, const BoxSpec& box);

// --- tape-recorded training paths ---

// IBP through registered MLP vars; center/radius are (N x d) constants.
inn::VarPair ibp_forward_t(ad::Tape& t, const nn::MlpVars& vars, ad::VarId center,
                           ad::VarId radius);

// The relu relaxation for every hidden layer of one box, computed from a
// plain (untaped) IBP pass; entered into training tapes as constants per the
// stop-gradient design.
std::vector<ReluRelaxation> crown_relaxations(const nn::MlpModel& m, const BoxSpec& box);

// CROWN backward substitution over the tape with a frozen relaxation.
// center/radius are vector constants (one box); returns bounds for every
// network output (q). Intersected with the taped IBP interval.
inn::VarPair crown_backward_bounds_t(ad::Tape& t, const nn::MlpVars& vars,
                                     const std::vector<ReluRelaxation>& relax,
                                     ad::VarId center, ad::VarId radius);

// Batched single-output variant used by the regression models: boxes are rows
// of (N x d) constants; relaxation tensors are row-stacked (N x d_l), exactly
// as crown_relaxations returns them for a batched box.
inn::VarPair crown_scalar_batch_t(ad::Tape& t, const nn::MlpVars& vars,
                                  const std::vector<ReluRelaxation>& relax_stacked,
                                  ad::VarId center, ad::VarId radius);

}  // namespace ivp::bp
