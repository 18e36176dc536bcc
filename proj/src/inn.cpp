#include "ivprop/inn.hpp"

#include <cmath>
#include <stdexcept>

#include "ivprop/kernels.hpp"
#include "ivprop/rng.hpp"

namespace ivp::inn {

using ad::Tape;
using ad::VarId;

IntervalDenseLayer make_interval_dense(std::size_t in, std::size_t out, Activation act,
                                       std::uint64_t seed, double radius_frac) {
    if (act == Activation::Tanh)
        throw std::invalid_argument("interval dense layer: activation must be relu or linear");
    IntervalDenseLayer l;
    l.activation = act;
    nn::DenseLayer center = nn::make_dense(in, out, act, seed);
    l.w_center = std::move(center.weights);
    l.b_center = std::move(center.bias);
    const double scale = std::sqrt(6.0 / static_cast<double>(in + out));
    const double radius = std::max(radius_frac * scale, 1e-12);
    // softplus(raw) = radius
    const double raw = std::log(std::expm1(radius));
    l.w_radius_raw = Tensor::full({out, in}, raw);
    l.b_radius_raw = Tensor::full({out}, raw);
    return l;
}

LayerBounds effective_bounds(const IntervalDenseLayer& l) {
    LayerBounds b;
    Tensor wr = Tensor::zeros(l.w_radius_raw.shape);
    Tensor br = Tensor::zeros(l.b_radius_raw.shape);
    kern::softplus_v(l.w_radius_raw.data.data(), wr.data.data(), wr.size());
    kern::softplus_v(l.b_radius_raw.data.data(), br.data.data(), br.size());
    const auto& K = kern::active();
    b.w_lo = Tensor::zeros(wr.shape);
    b.w_hi = Tensor::zeros(wr.shape);
    b.b_lo = Tensor::zeros(br.shape);
    b.b_hi = Tensor::zeros(br.shape);
    K.sub(l.w_center.data.data(), wr.data.data(), b.w_lo.data.data(), wr.size());
    K.add(l.w_center.data.data(), wr.data.data(), b.w_hi.data.data(), wr.size());
    K.sub(l.b_center.data.data(), br.data.data(), b.b_lo.data.data(), br.size());
    K.add(l.b_center.data.data(), br.data.data(), b.b_hi.data.data(), br.size());
    return b;
}

static void apply_act(Tensor& lo, Tensor& hi, Activation a) {
    // relu and linear are monotone, so endpoint application is exact
    if (a == Activation::Relu) {
        kern::active().relu(lo.data.data(), lo.data.data(), lo.size());
        kern::active().relu(hi.data.data(), hi.data.data(), hi.size());
    }
}

IntervalBatch inn_layer_forward(const IntervalDenseLayer& l, const IntervalBatch& z) {
    require_same_shape(z.lo, z.hi, "inn_layer_forward");
    const bool batched = z.lo.rank() == 2;
    const std::size_t n = batched ? z.lo.shape[0] : 1;
    const std::size_t in = batched ? z.lo.shape[1] : z.lo.size();
    if (in != l.in_dim())
        throw ShapeError("inn_layer_forward: input " + shape_str(z.lo.shape) + " vs in_dim " +
                         std::to_string(l.in_dim()));
    const LayerBounds b = effective_bounds(l);
    const std::size_t out = l.out_dim();
    IntervalBatch r{Tensor::zeros({n, out}), Tensor::zeros({n, out})};
    Tensor plo = Tensor::zeros({in}), phi = Tensor::zeros({in});
    const auto& K = kern::active();
    for (std::size_t s = 0; s < n; ++s) {
        const double* zl = z.lo.data.data() + s * in;
        const double* zh = z.hi.data.data() + s * in;
        for (std::size_t o = 0; o < out; ++o) {
            K.interval_mul(b.w_lo.row_ptr(o), b.w_hi.row_ptr(o), zl, zh, plo.data.data(),
                           phi.data.data(), in);
            r.lo.at(s, o) = K.sum(plo.data.data(), in) + b.b_lo[o];
            r.hi.at(s, o) = K.sum(phi.data.data(), in) + b.b_hi[o];
        }
    }
    if (!batched) {
        r.lo.shape = {out};
        r.hi.shape = {out};
    }
    apply_act(r.lo, r.hi, l.activation);
    return r;
}

IntervalBatch inn_layer_forward_relu_fast(const IntervalDenseLayer& l, const IntervalBatch& z) {
    require_same_shape(z.lo, z.hi, "inn_layer_forward_relu_fast");
    for (double v : z.lo.data)
        if (v < 0.0)
            throw std::invalid_argument("inn_layer_forward_relu_fast: negative input");
    const bool batched = z.lo.rank() == 2;
    const std::size_t n = batched ? z.lo.shape[0] : 1;
    const std::size_t in = batched ? z.lo.shape[1] : z.lo.size();
    const std::size_t out = l.out_dim();
    const LayerBounds b = effective_bounds(l);
    const auto& K = kern::active();
    Tensor wl_neg = Tensor::zeros(b.w_lo.shape), wl_pos = Tensor::zeros(b.w_lo.shape);
    Tensor wu_neg = Tensor::zeros(b.w_hi.shape), wu_pos = Tensor::zeros(b.w_hi.shape);
    K.min_scalar(b.w_lo.data.data(), 0.0, wl_neg.data.data(), wl_neg.size());
    K.max_scalar(b.w_lo.data.data(), 0.0, wl_pos.data.data(), wl_pos.size());
    K.min_scalar(b.w_hi.data.data(), 0.0, wu_neg.data.data(), wu_neg.size());
    K.max_scalar(b.w_hi.data.data(), 0.0, wu_pos.data.data(), wu_pos.size());
    IntervalBatch r{Tensor::zeros({n, out}), Tensor::zeros({n, out})};
    // lo = min(W_L,0) z_hi + max(W_L,0) z_lo + b_L; hi symmetric with W_U
    K.gemm_nt(z.hi.data.data(), wl_neg.data.data(), r.lo.data.data(), n, in, out, false);
    K.gemm_nt(z.lo.data.data(), wl_pos.data.data(), r.lo.data.data(), n, in, out, true);
    K.gemm_nt(z.hi.data.data(), wu_pos.data.data(), r.hi.data.data(), n, in, out, false);
    K.gemm_nt(z.lo.data.data(), wu_neg.data.data(), r.hi.data.data(), n, in, out, true);
    for (std::size_t s = 0; s < n; ++s) {
        K.add(r.lo.row_ptr(s), b.b_lo.data.data(), r.lo.row_ptr(s), out);
        K.add(r.hi.row_ptr(s), b.b_hi.data.data(), r.hi.row_ptr(s), out);
    }
    if (!batched) {
        r.lo.shape = {out};
        r.hi.shape = {out};
    }
    apply_act(r.lo, r.hi, l.activation);
    return r;
}

InnModel make_inn(const std::vector<std::size_t>& dims, Activation hidden, Activation out,
                  std::uint64_t seed, double radius_frac) {
    InnModel m;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const bool last = i + 2 == dims.size();
        m.layers.push_back(make_interval_dense(dims[i], dims[i + 1], last ? out : hidden,
                                               derive_seed(seed, 77 + i), radius_frac));
    }
    return m;
}

IntervalBatch inn_forward(const InnModel& m, const IntervalBatch& input) {
    IntervalBatch cur = inn_layer_forward(m.layers.front(), input);
    bool nonneg = m.layers.front().activation == Activation::Relu;
    for (std::size_t i = 1; i < m.layers.size(); ++i) {
        cur = nonneg ? inn_layer_forward_relu_fast(m.layers[i], cur)
                     : inn_layer_forward(m.layers[i], cur);
        nonneg = m.layers[i].activation == Activation::Relu;
    }
    return cur;
}

void interval_multiplication_layer(const double* beta_lo, const double* beta_hi,
                                   const double* tau, double* out_lo, double* out_hi,
                                   std::size_t q) {
    kern::active().interval_mul(beta_lo, beta_hi, tau, tau, out_lo, out_hi, q);
}

InnLayerVars register_inn_layer(Tape& t, const IntervalDenseLayer& l) {
    return {t.leaf(l.w_center, true), t.leaf(l.w_radius_raw, true), t.leaf(l.b_center, true),
            t.leaf(l.b_radius_raw, true), l.activation};
}

std::vector<Tensor*> collect_params(IntervalDenseLayer& l) {
    return {&l.w_center, &l.w_radius_raw, &l.b_center, &l.b_radius_raw};
}

std::vector<Tensor*> collect_params(InnModel& m) {
    std::vector<Tensor*> out;
    for (auto& l : m.layers)
        for (Tensor* p : collect_params(l)) out.push_back(p);
    return out;
}

std::vector<InnLayerVars> register_inn(Tape& t, const InnModel& m) {
    std::vector<InnLayerVars> out;
    for (const auto& l : m.layers) out.push_back(register_inn_layer(t, l));
    return out;
}

LayerBoundsVars effective_bounds_t(Tape& t, const InnLayerVars& v) {
    const VarId wr = t.softplus(v.w_radius_raw);
    const VarId br = t.softplus(v.b_radius_raw);
    return {t.sub(v.w_center, wr), t.add(v.w_center, wr), t.sub(v.b_center, br),
            t.add(v.b_center, br)};
}

static VarId act_t(Tape& t, VarId x, Activation a) {
    return a == Activation::Relu ? t.relu(x) : x;
}

VarPair inn_layer_forward_t(Tape& t, const InnLayerVars& l, VarPair z) {
    const LayerBoundsVars b = effective_bounds_t(t, l);
    // candidates (out x in): W bound rows times z bound broadcast over rows
    const VarId c1 = t.mul(b.w_lo, z.lo);
    const VarId c2 = t.mul(b.w_lo, z.hi);
    const VarId c3 = t.mul(b.w_hi, z.lo);
    const VarId c4 = t.mul(b.w_hi, z.hi);
    const VarId lower = ad::ops::vmin(t, ad::ops::vmin(t, c1, c2), ad::ops::vmin(t, c3, c4));
    const VarId upper = ad::ops::vmax(t, ad::ops::vmax(t, c1, c2), ad::ops::vmax(t, c3, c4));
    VarPair r;
    r.lo = t.add(ad::ops::rowsum(t, lower), b.b_lo);
    r.hi = t.add(ad::ops::rowsum(t, upper), b.b_hi);
    r.lo = act_t(t, r.lo, l.activation);
    r.hi = act_t(t, r.hi, l.activation);
    return r;
}

VarPair inn_layer_forward_relu_fast_t(Tape& t, const InnLayerVars& l, VarPair z) {
    const LayerBoundsVars b = effective_bounds_t(t, l);
    const VarId wl_neg = t.min_with(b.w_lo, 0.0);
    const VarId wl_pos = t.max_with(b.w_lo, 0.0);
    const VarId wu_neg = t.min_with(b.w_hi, 0.0);
    const VarId wu_pos = t.max_with(b.w_hi, 0.0);
    const bool batched = t.val(z.lo).rank() == 2;
    VarPair r;
    if (batched) {
        r.lo = t.add(t.add(t.matmul_nt(z.hi, wl_neg), t.matmul_nt(z.lo, wl_pos)), b.b_lo);
        r.hi = t.add(t.add(t.matmul_nt(z.hi, wu_pos), t.matmul_nt(z.lo, wu_neg)), b.b_hi);
    } else {
        r.lo = t.add(t.add(t.matmul(wl_neg, z.hi), t.matmul(wl_pos, z.lo)), b.b_lo);
        r.hi = t.add(t.add(t.matmul(wu_pos, z.hi), t.matmul(wu_neg, z.lo)), b.b_hi);
    }
    r.lo = act_t(t, r.lo, l.activation);
    r.hi = act_t(t, r.hi, l.activation);
    return r;
}

VarPair inn_forward_t(Tape& t, const std::vector<InnLayerVars>& layers, VarPair z) {
    VarPair cur = inn_layer_forward_t(t, layers.front(), z);
    bool nonneg = layers.front().activation == Activation::Relu;
    for (std::size_t i = 1; i < layers.size(); ++i) {
        cur = nonneg ? inn_layer_forward_relu_fast_t(t, layers[i], cur)
                     : inn_layer_forward_t(t, layers[i], cur);
        nonneg = layers[i].activation == Activation::Relu;
    }
    return cur;
}

}  // namespace ivp::inn
