#pragma once

#include <cstdint>
#include <vector>

#include "ivprop/interval.hpp"
#include "ivprop/tape.hpp"
#include "ivprop/tensor.hpp"

// Dense layers, plain MLPs and the RANN lower/upper-bound regressor.

namespace ivp::nn {

enum class Activation : std::uint8_t { Relu, Tanh, Linear };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& s);

struct DenseLayer {
    Tensor weights;  // (out x in)
    Tensor bias;     // (out)
    Activation activation = Activation::Linear;

    std::size_t in_dim() const { return weights.shape[1]; }
    std::size_t out_dim() const { return weights.shape[0]; }
};

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, std::uint64_t seed);

struct MlpModel {
    std::vector<DenseLayer> layers;

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }
};

// dims = {in, h1, ..., out}; hidden layers get `hidden`, the last layer `out`.
MlpModel make_mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation out,
                  std::uint64_t seed);

// Plain forward pass. x is a vector (in) or a batch matrix (N x in).
Tensor mlp_forward(const MlpModel& m, const Tensor& x);

// A possibly-crossing (lower, upper) prediction; crossing is a training
// signal, not an error, so this is deliberately not an Interval.
struct BoundPair {
    double lo = 0.0;
    double hi = 0.0;
};

// RANN: shared hidden stack over the interleaved [x1_lo, x1_hi, ...] input,
// with separate linear output rows for the lower and upper bound.
struct RannModel {
    MlpModel hidden;
    DenseLayer output_lo;  // (1 x J), linear
    DenseLayer output_hi;  // (1 x J), linear

    std::size_t interval_in_dim() const { return hidden.in_dim() / 2; }
};

RannModel make_rann(std::size_t d, const std::vector<std::size_t>& hidden_dims,
                    Activation hidden_act, std::uint64_t seed);

// [x1_lo, x1_hi, x2_lo, x2_hi, ...] packing used everywhere a 2d interval
// input feeds a plain network.
Tensor pack_interval_input(const IntervalVector& x);

BoundPair rann_forward(const RannModel& m, const IntervalVector& x);

// --- tape-recorded forward passes (training path) ---

struct DenseVars {
    ad::VarId W = -1;
    ad::VarId b = -1;
    Activation activation = Activation::Linear;
};

struct MlpVars {
    std::vector<DenseVars> layers;
};

// Registers parameters as trainable leaves; canonical order matches
// collect_params(MlpModel&).
MlpVars register_mlp(ad::Tape& t, const MlpModel& m);
std::vector<Tensor*> collect_params(MlpModel& m);

ad::VarId apply_activation(ad::Tape& t, ad::VarId x, Activation a);

// X is (N x in); returns (N x out).
ad::VarId mlp_forward_t(ad::Tape& t, const MlpVars& vars, ad::VarId X);

struct RannVars {
    MlpVars hidden;
    DenseVars out_lo, out_hi;
};

RannVars register_rann(ad::Tape& t, const RannModel& m);
std::vector<Tensor*> collect_params(RannModel& m);

// X is (N x 2d); returns the (lo, hi) prediction columns, each (N).
struct PredPair {
    ad::VarId lo = -1;
    ad::VarId hi = -1;
};

PredPair rann_forward_t(ad::Tape& t, const RannVars& vars, ad::VarId X);

}  // namespace ivp::nn
