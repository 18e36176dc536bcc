#pragma once

#include <vector>

#include "ivprop/layers.hpp"
#include "ivprop/tape.hpp"
#include "ivprop/tensor.hpp"

// Interval neural network layers: weights and biases are intervals,
// parameterised as center +/- softplus(radius_raw) so ordering holds by
// construction throughout optimisation.

namespace ivp::inn {

using nn::Activation;

// A lower/upper pair of equally-shaped tensors (rows = batch).
struct IntervalBatch {
    Tensor lo, hi;
};

struct IntervalDenseLayer {
    Tensor w_center, w_radius_raw;  // (out x in)
    Tensor b_center, b_radius_raw;  // (out)
    Activation activation = Activation::Linear;  // relu or linear only

    std::size_t in_dim() const { return w_center.shape[1]; }
    std::size_t out_dim() const { return w_center.shape[0]; }
};

// radius_frac scales the initial softplus radius relative to the Glorot init
// scale of the centers (near-degenerate start).
IntervalDenseLayer make_interval_dense(std::size_t in, std::size_t out, Activation act,
                                       std::uint64_t seed, double radius_frac = 0.01);

// Effective interval parameters of a layer.
struct LayerBounds {
    Tensor w_lo, w_hi, b_lo, b_hi;
};
LayerBounds effective_bounds(const IntervalDenseLayer& l);

// General path: exact interval affine map via the smooth four-product
// min/max form, then monotone activation on both ends. z rows are samples.
IntervalBatch inn_layer_forward(const IntervalDenseLayer& l, const IntervalBatch& z);

// Eq.-(21)-style fast path, valid when inputs are non-negative (post-relu).
// Throws on negative input.
IntervalBatch inn_layer_forward_relu_fast(const IntervalDenseLayer& l, const IntervalBatch& z);

struct InnModel {
    std::vector<IntervalDenseLayer> layers;

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }
};

InnModel make_inn(const std::vector<std::size_t>& dims, Activation hidden, Activation out,
                  std::uint64_t seed, double radius_frac = 0.01);

// First layer takes the general path, post-relu layers the fast path.
IntervalBatch inn_forward(const InnModel& m, const IntervalBatch& input);

// Element-wise interval multiplication against a precise tau vector:
// out_i = [beta_lo_i, beta_hi_i] * [tau_i, tau_i].
void interval_multiplication_layer(const double* beta_lo, const double* beta_hi,
                                   const double* tau, double* out_lo, double* out_hi,
                                   std::size_t q);

// --- tape-recorded versions ---

struct InnLayerVars {
    ad::VarId w_center = -1, w_radius_raw = -1, b_center = -1, b_radius_raw = -1;
    Activation activation = Activation::Linear;
};

struct VarPair {
    ad::VarId lo = -1, hi = -1;
};

InnLayerVars register_inn_layer(ad::Tape& t, const IntervalDenseLayer& l);
std::vector<Tensor*> collect_params(IntervalDenseLayer& l);
std::vector<Tensor*> collect_params(InnModel& m);
std::vector<InnLayerVars> register_inn(ad::Tape& t, const InnModel& m);

struct LayerBoundsVars {
    ad::VarId w_lo, w_hi, b_lo, b_hi;
};
LayerBoundsVars effective_bounds_t(ad::Tape& t, const InnLayerVars& v);

// z as a single-sample vector pair (in).
VarPair inn_layer_forward_t(ad::Tape& t, const InnLayerVars& l, VarPair z);
// z as a batch pair (N x in), all entries non-negative.
VarPair inn_layer_forward_relu_fast_t(ad::Tape& t, const InnLayerVars& l, VarPair z);
// Single-sample stack forward (general first layer, fast afterwards).
VarPair inn_forward_t(ad::Tape& t, const std::vector<InnLayerVars>& layers, VarPair z);

}  // namespace ivp::inn
