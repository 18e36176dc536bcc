#include "ivprop/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "ivprop/kernels.hpp"
#include "ivprop/rng.hpp"

namespace ivp::nn {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        default: return "linear";
    }
}

Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "linear") return Activation::Linear;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, std::uint64_t seed) {
    DenseLayer l;
    l.activation = act;
    l.weights = Tensor::zeros({out, in});
    l.bias = Tensor::zeros({out});
    // Glorot-uniform, bias 0
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    Rng rng = make_rng(seed);
    for (double& w : l.weights.data) w = runif(rng, -a, a);
    return l;
}

MlpModel make_mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation out,
                  std::uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least in/out dims");
    MlpModel m;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const bool last = i + 2 == dims.size();
        m.layers.push_back(
            make_dense(dims[i], dims[i + 1], last ? out : hidden, derive_seed(seed, i)));
    }
    return m;
}

static void apply_activation_inplace(Tensor& x, Activation a) {
    switch (a) {
        case Activation::Relu:
            kern::active().relu(x.data.data(), x.data.data(), x.size());
            break;
        case Activation::Tanh:
            kern::tanh_v(x.data.data(), x.data.data(), x.size());
            break;
        case Activation::Linear:
            break;
    }
}

Tensor mlp_forward(const MlpModel& m, const Tensor& x) {
    const bool batched = x.rank() == 2;
    const std::size_t n = batched ? x.shape[0] : 1;
    if ((batched ? x.shape[1] : x.size()) != m.in_dim())
        throw ShapeError("mlp_forward: input " + shape_str(x.shape) + " vs in_dim " +
                         std::to_string(m.in_dim()));
    Tensor cur = x;
    for (const DenseLayer& l : m.layers) {
        Tensor next = Tensor::zeros({n, l.out_dim()});
        kern::active().gemm_nt(cur.data.data(), l.weights.data.data(), next.data.data(), n,
                               l.in_dim(), l.out_dim(), false);
        for (std::size_t i = 0; i < n; ++i)
            kern::active().add(next.row_ptr(i), l.bias.data.data(), next.row_ptr(i), l.out_dim());
        apply_activation_inplace(next, l.activation);
        cur = std::move(next);
    }
    if (!batched) cur.shape = {cur.size()};
    return cur;
}

RannModel make_rann(std::size_t d, const std::vector<std::size_t>& hidden_dims,
                    Activation hidden_act, std::uint64_t seed) {
    RannModel m;
    std::vector<std::size_t> dims;
    dims.push_back(2 * d);
    for (std::size_t h : hidden_dims) dims.push_back(h);
    m.hidden = make_mlp(dims, hidden_act, hidden_act, seed);
    const std::size_t j = dims.back();
    m.output_lo = make_dense(j, 1, Activation::Linear, derive_seed(seed, 1000));
    m.output_hi = make_dense(j, 1, Activation::Linear, derive_seed(seed, 1001));
    return m;
}

Tensor pack_interval_input(const IntervalVector& x) {
    Tensor t = Tensor::zeros({2 * x.size()});
    for (std::size_t i = 0; i < x.size(); ++i) {
        t[2 * i] = x[i].lo;
        t[2 * i + 1] = x[i].hi;
    }
    return t;
}

BoundPair rann_forward(const RannModel& m, const IntervalVector& x) {
    if (2 * x.size() != m.hidden.in_dim())
        throw ShapeError("rann_forward: " + std::to_string(x.size()) + " interval inputs vs d=" +
                         std::to_string(m.interval_in_dim()));
    const Tensor z = mlp_forward(m.hidden, pack_interval_input(x));
    const auto& K = kern::active();
    BoundPair p;
    p.lo = K.dot(m.output_lo.weights.data.data(), z.data.data(), z.size()) + m.output_lo.bias[0];
    p.hi = K.dot(m.output_hi.weights.data.data(), z.data.data(), z.size()) + m.output_hi.bias[0];
    return p;
}

MlpVars register_mlp(ad::Tape& t, const MlpModel& m) {
    MlpVars v;
    for (const DenseLayer& l : m.layers)
        v.layers.push_back({t.leaf(l.weights, true), t.leaf(l.bias, true), l.activation});
    return v;
}

std::vector<Tensor*> collect_params(MlpModel& m) {
    std::vector<Tensor*> out;
    for (DenseLayer& l : m.layers) {
        out.push_back(&l.weights);
        out.push_back(&l.bias);
    }
    return out;
}

ad::VarId apply_activation(ad::Tape& t, ad::VarId x, Activation a) {
    switch (a) {
        case Activation::Relu: return t.relu(x);
        case Activation::Tanh: return t.tanh_(x);
        default: return x;
    }
}

ad::VarId mlp_forward_t(ad::Tape& t, const MlpVars& vars, ad::VarId X) {
    ad::VarId cur = X;
    for (const DenseVars& l : vars.layers) {
        cur = t.add(t.matmul_nt(cur, l.W), l.b);
        cur = apply_activation(t, cur, l.activation);
    }
    return cur;
}

RannVars register_rann(ad::Tape& t, const RannModel& m) {
    RannVars v;
    v.hidden = register_mlp(t, m.hidden);
    v.out_lo = {t.leaf(m.output_lo.weights, true), t.leaf(m.output_lo.bias, true),
                Activation::Linear};
    v.out_hi = {t.leaf(m.output_hi.weights, true), t.leaf(m.output_hi.bias, true),
                Activation::Linear};
    return v;
}

std::vector<Tensor*> collect_params(RannModel& m) {
    std::vector<Tensor*> out = collect_params(m.hidden);
    out.push_back(&m.output_lo.weights);
    out.push_back(&m.output_lo.bias);
    out.push_back(&m.output_hi.weights);
    out.push_back(&m.output_hi.bias);
    return out;
}

PredPair rann_forward_t(ad::Tape& t, const RannVars& vars, ad::VarId X) {
    const ad::VarId z = mlp_forward_t(t, vars.hidden, X);
    PredPair p;
    // (N x J) x (1 x J)^T -> (N x 1), flattened to (N)
    const ad::VarId lo2 = t.add(t.matmul_nt(z, vars.out_lo.W), vars.out_lo.b);
    const ad::VarId hi2 = t.add(t.matmul_nt(z, vars.out_hi.W), vars.out_hi.b);
    const std::size_t n = t.val(z).shape[0];
    p.lo = t.reshape(lo2, {n});
    p.hi = t.reshape(hi2, {n});
    return p;
}

}  // namespace ivp::nn
