#include "ivprop/bounds.hpp"

#include <cmath>
#include <stdexcept>

#include "ivprop/kernels.hpp"

namespace ivp::bp {

using ad::Tape;
using ad::VarId;
using namespace ad::ops;

BoxSpec make_box(Tensor center, Tensor radius) {
    require_same_shape(center, radius, "make_box");
    for (double r : radius.data)
        if (!(r >= 0.0)) throw std::invalid_argument("make_box: negative radius");
    return {std::move(center), std::move(radius)};
}

BoxSpec box_from_interval(const IntervalVector& x) {
    Tensor c = Tensor::zeros({x.size()});
    Tensor r = Tensor::zeros({x.size()});
    for (std::size_t i = 0; i < x.size(); ++i) {
        c[i] = x[i].midpoint();
        r[i] = 0.5 * x[i].width();
    }
    return {std::move(c), std::move(r)};
}

namespace {

void apply_act_pair(Tensor& lo, Tensor& hi, nn::Activation a) {
    switch (a) {
        case nn::Activation::Relu:
            kern::active().relu(lo.data.data(), lo.data.data(), lo.size());
            kern::active().relu(hi.data.data(), hi.data.data(), hi.size());
            break;
        case nn::Activation::Tanh:
            kern::tanh_v(lo.data.data(), lo.data.data(), lo.size());
            kern::tanh_v(hi.data.data(), hi.data.data(), hi.size());
            break;
        case nn::Activation::Linear:
            break;
    }
}

// One affine IBP step: mu' = mu W^T + b, r' = r |W|^T (batched rows)
void ibp_affine(const nn::DenseLayer& l, const Tensor& mu, const Tensor& r, Tensor& mu_out,
                Tensor& r_out) {
    const std::size_t n = mu.shape[0], in = l.in_dim(), out = l.out_dim();
    const auto& K = kern::active();
    Tensor wabs = Tensor::zeros(l.weights.shape);
    K.abs_v(l.weights.data.data(), wabs.data.data(), wabs.size());
    mu_out = Tensor::zeros({n, out});
    r_out = Tensor::zeros({n, out});
    K.gemm_nt(mu.data.data(), l.weights.data.data(), mu_out.data.data(), n, in, out, false);
    K.gemm_nt(r.data.data(), wabs.data.data(), r_out.data.data(), n, in, out, false);
    for (std::size_t i = 0; i < n; ++i)
        K.add(mu_out.row_ptr(i), l.bias.data.data(), mu_out.row_ptr(i), out);
}

Tensor as_matrix(const Tensor& t) {
    Tensor m = t;
    if (m.rank() == 1) m.shape = {1, t.size()};
    return m;
}

}  // namespace

IntervalBatch ibp_forward(const nn::MlpModel& m, const BoxSpec& box) {
    const bool batched = box.center.rank() == 2;
    Tensor mu = as_matrix(box.center);
    Tensor r = as_matrix(box.radius);
    if (mu.shape[1] != m.in_dim())
        throw ShapeError("ibp_forward: box " + shape_str(box.center.shape) + " vs in_dim " +
                         std::to_string(m.in_dim()));
    const auto& K = kern::active();
    for (const nn::DenseLayer& l : m.layers) {
        Tensor mu2, r2;
        ibp_affine(l, mu, r, mu2, r2);
        Tensor lo = Tensor::zeros(mu2.shape), hi = Tensor::zeros(mu2.shape);
        K.sub(mu2.data.data(), r2.data.data(), lo.data.data(), lo.size());
        K.add(mu2.data.data(), r2.data.data(), hi.data.data(), hi.size());
        apply_act_pair(lo, hi, l.activation);
        // recenter for the next affine layer
        mu = Tensor::zeros(lo.shape);
        r = Tensor::zeros(lo.shape);
        K.add(lo.data.data(), hi.data.data(), mu.data.data(), mu.size());
        K.scale(mu.data.data(), 0.5, mu.data.data(), mu.size());
        K.sub(hi.data.data(), lo.data.data(), r.data.data(), r.size());
        K.scale(r.data.data(), 0.5, r.data.data(), r.size());
    }
    Tensor lo = Tensor::zeros(mu.shape), hi = Tensor::zeros(mu.shape);
    K.sub(mu.data.data(), r.data.data(), lo.data.data(), lo.size());
    K.add(mu.data.data(), r.data.data(), hi.data.data(), hi.size());
    if (!batched) {
        lo.shape = {lo.size()};
        hi.shape = {hi.size()};
    }
    return {std::move(lo), std::move(hi)};
}

IbpTrace ibp_collect(const nn::MlpModel& m, const BoxSpec& box) {
    IbpTrace trace;
    Tensor mu = as_matrix(box.center);
    Tensor r = as_matrix(box.radius);
    const auto& K = kern::active();
    for (const nn::DenseLayer& l : m.layers) {
        Tensor mu2, r2;
        ibp_affine(l, mu, r, mu2, r2);
        PreActBounds pb;
        pb.lo = Tensor::zeros(mu2.shape);
        pb.hi = Tensor::zeros(mu2.shape);
        K.sub(mu2.data.data(), r2.data.data(), pb.lo.data.data(), pb.lo.size());
        K.add(mu2.data.data(), r2.data.data(), pb.hi.data.data(), pb.hi.size());
        Tensor lo = pb.lo, hi = pb.hi;
        trace.pre.push_back(std::move(pb));
        apply_act_pair(lo, hi, l.activation);
        mu = Tensor::zeros(lo.shape);
        r = Tensor::zeros(lo.shape);
        K.add(lo.data.data(), hi.data.data(), mu.data.data(), mu.size());
        K.scale(mu.data.data(), 0.5, mu.data.data(), mu.size());
        K.sub(hi.data.data(), lo.data.data(), r.data.data(), r.size());
        K.scale(r.data.data(), 0.5, r.data.data(), r.size());
    }
    Tensor lo = Tensor::zeros(mu.shape), hi = Tensor::zeros(mu.shape);
    K.sub(mu.data.data(), r.data.data(), lo.data.data(), lo.size());
    K.add(mu.data.data(), r.data.data(), hi.data.data(), hi.size());
    trace.out = {std::move(lo), std::move(hi)};
    return trace;
}

ReluRelaxation crown_relax_relu(const PreActBounds& b) {
    ReluRelaxation r;
    r.up_slope = Tensor::zeros(b.lo.shape);
    r.up_intercept = Tensor::zeros(b.lo.shape);
    r.lo_slope = Tensor::zeros(b.lo.shape);
    for (std::size_t i = 0; i < b.lo.size(); ++i) {
        const double lo = b.lo[i], hi = b.hi[i];
        if (lo >= 0.0) {  // stable active (ties count as stable by sign)
            r.up_slope[i] = 1.0;
            r.lo_slope[i] = 1.0;
        } else if (hi <= 0.0) {  // stable inactive
            // all zeros
        } else {
            const double s = hi / (hi - lo);
            r.up_slope[i] = s;
            r.up_intercept[i] = -lo * s;
            r.lo_slope[i] = (hi >= -lo) ? 1.0 : 0.0;  // adaptive alpha
        }
    }
    return r;
}

std::vector<ReluRelaxation> crown_relaxations(const nn::MlpModel& m, const BoxSpec& box) {
    IbpTrace trace = ibp_collect(m, box);
    std::vector<ReluRelaxation> out;
    for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {
        if (m.layers[l].activation != nn::Activation::Relu)
            throw std::invalid_argument("crown: hidden activations must be relu");
        out.push_back(crown_relax_relu(trace.pre[l]));
    }
    return out;
}

CrownResult crown_backward_bounds(const nn::MlpModel& m, const BoxSpec& box) {
    if (box.center.rank() != 1)
        throw std::invalid_argument("crown_backward_bounds: single box (vector center) expected");
    const std::size_t nl = m.layers.size();
    const std::vector<ReluRelaxation> relax = crown_relaxations(m, box);
    const auto& K = kern::active();

    const std::size_t out_dim = m.layers.back().out_dim();
    // upper and lower envelopes, substituted from the output layer backwards
    Tensor A_hi = m.layers.back().weights;
    Tensor A_lo = m.layers.back().weights;
    Tensor c_hi = m.layers.back().bias;
    Tensor c_lo = m.layers.back().bias;

    for (std::size_t li = nl - 1; li-- > 0;) {
        const ReluRelaxation& rl = relax[li];
        const std::size_t d = rl.up_slope.size();
        auto substitute = [&](Tensor& A, Tensor& c, bool upper_env) {
            Tensor Apos = Tensor::zeros(A.shape), Aneg = Tensor::zeros(A.shape);
            K.max_scalar(A.data.data(), 0.0, Apos.data.data(), A.size());
            K.min_scalar(A.data.data(), 0.0, Aneg.data.data(), A.size());
            // Positive coefficients take the bound-side line, negative ones the
            // opposite line.
            const Tensor& s_pos = upper_env ? rl.up_slope : rl.lo_slope;
            const Tensor& s_neg = upper_env ? rl.lo_slope : rl.up_slope;
            const Tensor& mult_int = upper_env ? Apos : Aneg;
            Tensor A2 = Tensor::zeros(A.shape);
            for (std::size_t o = 0; o < out_dim; ++o) {
                for (std::size_t j = 0; j < d; ++j)
                    A2.at(o, j) = Apos.at(o, j) * s_pos[j] + Aneg.at(o, j) * s_neg[j];
                c[o] += K.dot(mult_int.row_ptr(o), rl.up_intercept.data.data(), d);
            }
            // fold in the affine layer: A <- A2 W, c <- c + A2 b
            const nn::DenseLayer& lay = m.layers[li];
            Tensor Anew = Tensor::zeros({out_dim, lay.in_dim()});
            K.gemm_nn(A2.data.data(), lay.weights.data.data(), Anew.data.data(), out_dim, d,
                      lay.in_dim(), false);
            for (std::size_t o = 0; o < out_dim; ++o)
                c[o] += K.dot(A2.row_ptr(o), lay.bias.data.data(), d);
            A = std::move(Anew);
        };
        substitute(A_hi, c_hi, true);
        substitute(A_lo, c_lo, false);
    }

    CrownResult res;
    res.linear = {A_lo, c_lo, A_hi, c_hi};
    Tensor lo = Tensor::zeros({out_dim}), hi = Tensor::zeros({out_dim});
    for (std::size_t o = 0; o < out_dim; ++o) {
        double mid_hi = K.dot(A_hi.row_ptr(o), box.center.data.data(), box.center.size());
        double mid_lo = K.dot(A_lo.row_ptr(o), box.center.data.data(), box.center.size());
        double rad_hi = 0.0, rad_lo = 0.0;
        for (std::size_t j = 0; j < box.radius.size(); ++j) {
            rad_hi += std::fabs(A_hi.at(o, j)) * box.radius[j];
            rad_lo += std::fabs(A_lo.at(o, j)) * box.radius[j];
        }
        lo[o] = mid_lo - rad_lo + c_lo[o];
        hi[o] = mid_hi + rad_hi + c_hi[o];
    }
    // keep the tightest sound bound available (IBP can win per coordinate)
    IntervalBatch ibp = ibp_forward(m, box);
    for (std::size_t o = 0; o < out_dim; ++o) {
        lo[o] = std::max(lo[o], ibp.lo[o]);
        hi[o] = std::min(hi[o], ibp.hi[o]);
    }
    res.out = {std::move(lo), std::move(hi)};
    return res;
}

inn::VarPair ibp_forward_t(Tape& t, const nn::MlpVars& vars, VarId center, VarId radius) {
    VarId mu = center;
    VarId r = radius;
    for (std::size_t li = 0; li < vars.layers.size(); ++li) {
        const nn::DenseVars& l = vars.layers[li];
        const VarId mu2 = t.add(t.matmul_nt(mu, l.W), l.b);
        const VarId r2 = t.matmul_nt(r, absval(t, l.W));
        VarId lo = t.sub(mu2, r2);
        VarId hi = t.add(mu2, r2);
        lo = nn::apply_activation(t, lo, l.activation);
        hi = nn::apply_activation(t, hi, l.activation);
        if (li + 1 == vars.layers.size()) return {lo, hi};
        mu = scale(t, t.add(lo, hi), 0.5);
        r = scale(t, t.sub(hi, lo), 0.5);
    }
    return {mu, r};  // unreachable for non-empty models
}

inn::VarPair crown_backward_bounds_t(Tape& t, const nn::MlpVars& vars,
                                     const std::vector<ReluRelaxation>& relax, VarId center,
                                     VarId radius) {
    const std::size_t nl = vars.layers.size();
    VarId A_hi = vars.layers.back().W;
    VarId A_lo = vars.layers.back().W;
    VarId c_hi = vars.layers.back().b;
    VarId c_lo = vars.layers.back().b;

    for (std::size_t li = nl - 1; li-- > 0;) {
        const ReluRelaxation& rl = relax[li];
        // flatten to vectors so the (q x d) row-broadcast applies
        Tensor su = rl.up_slope, sl = rl.lo_slope, tu = rl.up_intercept;
        su.shape = {su.size()};
        sl.shape = {sl.size()};
        tu.shape = {tu.size()};
        const VarId s_up = t.constant(std::move(su));
        const VarId s_lo = t.constant(std::move(sl));
        const VarId t_up = t.constant(std::move(tu));
        auto substitute = [&](VarId& A, VarId& c, bool upper_env) {
            const VarId Apos = t.max_with(A, 0.0);
            const VarId Aneg = t.min_with(A, 0.0);
            const VarId mult_int = upper_env ? Apos : Aneg;
            c = t.add(c, t.matmul(mult_int, t_up));
            const VarId A2 = t.add(t.mul(Apos, upper_env ? s_up : s_lo),
                                   t.mul(Aneg, upper_env ? s_lo : s_up));
            c = t.add(c, t.matmul(A2, vars.layers[li].b));
            A = t.matmul(A2, vars.layers[li].W);
        };
        substitute(A_hi, c_hi, true);
        substitute(A_lo, c_lo, false);
    }

    const VarId lo = t.add(t.sub(t.matmul(A_lo, center), t.matmul(absval(t, A_lo), radius)), c_lo);
    const VarId hi = t.add(t.add(t.matmul(A_hi, center), t.matmul(absval(t, A_hi), radius)), c_hi);

    // intersect with the taped IBP interval (keeps CROWN <= IBP everywhere)
    const std::size_t d = t.val(center).size();
    const VarId c_row = t.reshape(center, {1, d});
    const VarId r_row = t.reshape(radius, {1, d});
    inn::VarPair ibp = ibp_forward_t(t, vars, c_row, r_row);
    const std::size_t q = t.val(lo).size();
    const VarId ibp_lo = t.reshape(ibp.lo, {q});
    const VarId ibp_hi = t.reshape(ibp.hi, {q});
    return {vmax(t, lo, ibp_lo), vmin(t, hi, ibp_hi)};
}

inn::VarPair crown_scalar_batch_t(Tape& t, const nn::MlpVars& vars,
                                  const std::vector<ReluRelaxation>& relax_stacked, VarId center,
                                  VarId radius) {
    const std::size_t n = t.val(center).shape[0];
    const std::size_t nl = vars.layers.size();
    if (t.val(vars.layers.back().W).shape[0] != 1)
        throw std::invalid_argument("crown_scalar_batch_t: single-output network expected");
    const std::vector<ReluRelaxation>& stacked = relax_stacked;

    const VarId ones_n = t.constant(Tensor::full({n, 1}, 1.0));
    // A starts as the output row broadcast over the batch
    VarId A_hi = t.matmul(ones_n, vars.layers.back().W);
    VarId A_lo = A_hi;
    const VarId zeros_n = t.constant(Tensor::zeros({n}));
    VarId c_hi = t.add(zeros_n, vars.layers.back().b);
    VarId c_lo = c_hi;

    for (std::size_t li = nl - 1; li-- > 0;) {
        const VarId s_up = t.constant(stacked[li].up_slope);
        const VarId s_lo = t.constant(stacked[li].lo_slope);
        const VarId t_up = t.constant(stacked[li].up_intercept);
        auto substitute = [&](VarId& A, VarId& c, bool upper_env) {
            const VarId Apos = t.max_with(A, 0.0);
            const VarId Aneg = t.min_with(A, 0.0);
            const VarId mult_int = upper_env ? Apos : Aneg;
            c = t.add(c, rowsum(t, t.mul(mult_int, t_up)));
            const VarId A2 = t.add(t.mul(Apos, upper_env ? s_up : s_lo),
                                   t.mul(Aneg, upper_env ? s_lo : s_up));
            c = t.add(c, rowsum(t, t.mul(A2, vars.layers[li].b)));
            A = t.matmul(A2, vars.layers[li].W);
        };
        substitute(A_hi, c_hi, true);
        substitute(A_lo, c_lo, false);
    }

    const VarId lo =
        t.add(t.sub(rowsum(t, t.mul(A_lo, center)), rowsum(t, t.mul(absval(t, A_lo), radius))), c_lo);
    const VarId hi =
        t.add(t.add(rowsum(t, t.mul(A_hi, center)), rowsum(t, t.mul(absval(t, A_hi), radius))), c_hi);

    inn::VarPair ibp = ibp_forward_t(t, vars, center, radius);
    const VarId ibp_lo = t.reshape(ibp.lo, {n});
    const VarId ibp_hi = t.reshape(ibp.hi, {n});
    return {vmax(t, lo, ibp_lo), vmin(t, hi, ibp_hi)};
}

}  // namespace ivp::bp
