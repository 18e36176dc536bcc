#include "ivprop/deeponet.hpp"

#include <stdexcept>

#include "ivprop/kernels.hpp"
#include "ivprop/rng.hpp"

namespace ivp::onet {

using ad::Tape;
using ad::VarId;
using namespace ad::ops;

static std::vector<std::size_t> chain(std::size_t in, const std::vector<std::size_t>& hidden,
                                      std::size_t out) {
    std::vector<std::size_t> dims{in};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    return dims;
}

DeepONet make_deeponet(std::size_t m, std::size_t coord_dim, std::size_t q,
                       const std::vector<std::size_t>& branch_hidden,
                       const std::vector<std::size_t>& trunk_hidden, std::uint64_t seed) {
    DeepONet net;
    net.branch = nn::make_mlp(chain(m, branch_hidden, q), nn::Activation::Relu,
                              nn::Activation::Linear, derive_seed(seed, 1));
    net.trunk = nn::make_mlp(chain(coord_dim, trunk_hidden, q), nn::Activation::Relu,
                             nn::Activation::Linear, derive_seed(seed, 2));
    return net;
}

double deeponet_forward(const DeepONet& net, const Tensor& u, const Tensor& x) {
    if (u.size() != net.sensor_dim())
        throw ShapeError("deeponet_forward: " + std::to_string(u.size()) + " sensors vs m=" +
                         std::to_string(net.sensor_dim()));
    const Tensor beta = nn::mlp_forward(net.branch, u);
    const Tensor tau = nn::mlp_forward(net.trunk, x);
    return kern::active().dot(beta.data.data(), tau.data.data(), beta.size());
}

Tensor deeponet_forward_grid(const DeepONet& net, const Tensor& u, const Tensor& coords) {
    const Tensor beta = nn::mlp_forward(net.branch, u);
    const Tensor tau = nn::mlp_forward(net.trunk, coords);  // (p x q)
    Tensor out = Tensor::zeros({coords.shape[0]});
    kern::active().gemm_nn(tau.data.data(), beta.data.data(), out.data.data(), coords.shape[0],
                           beta.size(), 1, false);
    return out;
}

NaiveIntervalDeepONet make_naive_deeponet(std::size_t m, std::size_t coord_dim, std::size_t q,
                                          const std::vector<std::size_t>& branch_hidden,
                                          const std::vector<std::size_t>& trunk_hidden,
                                          std::uint64_t seed) {
    NaiveIntervalDeepONet net;
    net.branch = nn::make_mlp(chain(2 * m, branch_hidden, 2 * q), nn::Activation::Relu,
                              nn::Activation::Linear, derive_seed(seed, 1));
    net.trunk = nn::make_mlp(chain(coord_dim, trunk_hidden, q), nn::Activation::Relu,
                             nn::Activation::Linear, derive_seed(seed, 2));
    net.head = nn::make_dense(2 * q, 2, nn::Activation::Linear, derive_seed(seed, 3));
    return net;
}

BoundPair naive_interval_forward(const NaiveIntervalDeepONet& net, const IntervalVector& u,
                                 const Tensor& x) {
    if (u.size() != net.sensor_dim())
        throw ShapeError("naive_interval_forward: " + std::to_string(u.size()) +
                         " interval sensors vs m=" + std::to_string(net.sensor_dim()));
    const Tensor beta = nn::mlp_forward(net.branch, nn::pack_interval_input(u));  // (2q)
    const Tensor tau = nn::mlp_forward(net.trunk, x);                             // (q)
    const std::size_t q = tau.size();
    Tensor z = Tensor::zeros({2 * q});
    for (std::size_t i = 0; i < q; ++i) {
        z[2 * i] = beta[2 * i] * tau[i];
        z[2 * i + 1] = beta[2 * i + 1] * tau[i];
    }
    const auto& K = kern::active();
    BoundPair p;
    p.lo = K.dot(net.head.weights.row_ptr(0), z.data.data(), z.size()) + net.head.bias[0];
    p.hi = K.dot(net.head.weights.row_ptr(1), z.data.data(), z.size()) + net.head.bias[1];
    return p;
}

InnDeepONet make_inn_deeponet(std::size_t m, std::size_t coord_dim, std::size_t q,
                              const std::vector<std::size_t>& branch_hidden,
                              const std::vector<std::size_t>& trunk_hidden, std::uint64_t seed,
                              double radius_frac) {
    InnDeepONet net;
    net.branch = inn::make_inn(chain(m, branch_hidden, q), nn::Activation::Relu,
                               nn::Activation::Linear, derive_seed(seed, 1), radius_frac);
    net.trunk = nn::make_mlp(chain(coord_dim, trunk_hidden, q), nn::Activation::Relu,
                             nn::Activation::Linear, derive_seed(seed, 2));
    net.head = inn::make_interval_dense(q, 1, nn::Activation::Linear, derive_seed(seed, 3),
                                        radius_frac);
    return net;
}

Interval inn_deeponet_forward(const InnDeepONet& net, const IntervalVector& u, const Tensor& x) {
    if (u.size() != net.sensor_dim())
        throw ShapeError("inn_deeponet_forward: " + std::to_string(u.size()) +
                         " interval sensors vs m=" + std::to_string(net.sensor_dim()));
    inn::IntervalBatch z{Tensor::zeros({u.size()}), Tensor::zeros({u.size()})};
    for (std::size_t i = 0; i < u.size(); ++i) {
        z.lo[i] = u[i].lo;
        z.hi[i] = u[i].hi;
    }
    const inn::IntervalBatch beta = inn::inn_forward(net.branch, z);  // (q) bounds
    const Tensor tau = nn::mlp_forward(net.trunk, x);                 // (q)
    const std::size_t q = tau.size();
    inn::IntervalBatch prod{Tensor::zeros({q}), Tensor::zeros({q})};
    inn::interval_multiplication_layer(beta.lo.data.data(), beta.hi.data.data(), tau.data.data(),
                                       prod.lo.data.data(), prod.hi.data.data(), q);
    const inn::IntervalBatch out = inn::inn_layer_forward(net.head, prod);
    return Interval(out.lo[0], out.hi[0]);
}

inn::IntervalBatch bounded_deeponet_forward(const DeepONet& net, const bp::BoxSpec& branch_box,
                                            const Tensor& coords, BoundMethod method) {
    inn::IntervalBatch beta;  // (q) bounds
    if (method == BoundMethod::Ibp) {
        beta = bp::ibp_forward(net.branch, branch_box);
    } else {
        beta = bp::crown_backward_bounds(net.branch, branch_box).out;
    }
    const Tensor tau = nn::mlp_forward(net.trunk, coords);  // (p x q)
    const std::size_t p = coords.shape[0], q = net.latent_dim();
    inn::IntervalBatch out{Tensor::zeros({p}), Tensor::zeros({p})};
    for (std::size_t j = 0; j < p; ++j) {
        double lo = 0.0, hi = 0.0;
        const double* trow = tau.row_ptr(j);
        for (std::size_t i = 0; i < q; ++i) {
            // exact (possibly negative) constants: sign-split
            if (trow[i] >= 0.0) {
                lo += trow[i] * beta.lo[i];
                hi += trow[i] * beta.hi[i];
            } else {
                lo += trow[i] * beta.hi[i];
                hi += trow[i] * beta.lo[i];
            }
        }
        out.lo[j] = lo;
        out.hi[j] = hi;
    }
    return out;
}

std::vector<TrainingTuple> make_training_tuples(const std::vector<FunctionSample>& samples) {
    std::vector<TrainingTuple> tuples;
    if (samples.empty()) return tuples;
    const std::size_t m = samples.front().sensors.size();
    const std::size_t p = samples.front().coords.shape[0];
    for (std::size_t f = 0; f < samples.size(); ++f) {
        const FunctionSample& s = samples[f];
        if (s.sensors.size() != m || s.coords.shape[0] != p || s.values.size() != p)
            throw ShapeError("make_training_tuples: ragged grids at sample " + std::to_string(f));
        for (std::size_t j = 0; j < p; ++j) tuples.push_back({f, j, s.values[j]});
    }
    return tuples;
}

VarId trunk_latents_t(Tape& t, const nn::MlpVars& trunk, VarId coords) {
    return nn::mlp_forward_t(t, trunk, coords);
}

VarId deeponet_forward_t(Tape& t, const nn::MlpVars& branch, const nn::MlpVars& trunk, VarId U,
                         VarId X) {
    const VarId beta = nn::mlp_forward_t(t, branch, U);  // (B x q)
    const VarId tau = nn::mlp_forward_t(t, trunk, X);    // (B x q)
    return rowsum(t, t.mul(beta, tau));                  // (B)
}

Tensor interleave_matrix(std::size_t q) {
    Tensor e = Tensor::zeros({q, 2 * q});
    for (std::size_t i = 0; i < q; ++i) {
        e.at(i, 2 * i) = 1.0;
        e.at(i, 2 * i + 1) = 1.0;
    }
    return e;
}

nn::PredPair naive_combine_t(Tape& t, VarId branch_latent_row, VarId trunk_lat,
                             const nn::DenseVars& head, VarId interleave) {
    // trunk (p x q) -> (p x 2q) duplicated columns, then scaled by the
    // interleaved branch latents
    const VarId tau_exp = t.matmul(trunk_lat, interleave);
    const VarId z = t.mul(tau_exp, branch_latent_row);  // row broadcast
    const std::size_t p = t.val(trunk_lat).shape[0];
    const VarId w_lo = t.slice_rows(head.W, 0, 1);
    const VarId w_hi = t.slice_rows(head.W, 1, 2);
    const VarId b_lo = t.slice_rows(head.b, 0, 1);
    const VarId b_hi = t.slice_rows(head.b, 1, 2);
    nn::PredPair out;
    out.lo = t.reshape(t.add(t.matmul_nt(z, w_lo), b_lo), {p});
    out.hi = t.reshape(t.add(t.matmul_nt(z, w_hi), b_hi), {p});
    return out;
}

nn::PredPair bounded_combine_t(Tape& t, inn::VarPair branch_bounds, VarId trunk_lat) {
    const VarId tau_pos = t.max_with(trunk_lat, 0.0);
    const VarId tau_neg = t.min_with(trunk_lat, 0.0);
    nn::PredPair out;
    out.lo = t.add(t.matmul(tau_pos, branch_bounds.lo), t.matmul(tau_neg, branch_bounds.hi));
    out.hi = t.add(t.matmul(tau_pos, branch_bounds.hi), t.matmul(tau_neg, branch_bounds.lo));
    return out;
}

nn::PredPair inn_combine_t(Tape& t, inn::VarPair branch_bounds, VarId trunk_lat,
                           const inn::InnLayerVars& head) {
    // interval multiplication layer against precise tau rows
    const VarId c1 = t.mul(trunk_lat, branch_bounds.lo);  // (p x q) row broadcast
    const VarId c2 = t.mul(trunk_lat, branch_bounds.hi);
    const VarId m_lo = vmin(t, c1, c2);
    const VarId m_hi = vmax(t, c1, c2);

    // interval dense head (1 x q, linear) over the (p x q) interval batch
    const inn::LayerBoundsVars hb = inn::effective_bounds_t(t, head);
    const std::size_t q = t.val(trunk_lat).shape[1];
    const VarId v_lo = t.reshape(hb.w_lo, {q});
    const VarId v_hi = t.reshape(hb.w_hi, {q});
    const VarId h1 = t.mul(m_lo, v_lo);
    const VarId h2 = t.mul(m_hi, v_lo);
    const VarId h3 = t.mul(m_lo, v_hi);
    const VarId h4 = t.mul(m_hi, v_hi);
    const VarId lower = vmin(t, vmin(t, h1, h2), vmin(t, h3, h4));
    const VarId upper = vmax(t, vmax(t, h1, h2), vmax(t, h3, h4));
    nn::PredPair out;
    out.lo = t.add(rowsum(t, lower), hb.b_lo);
    out.hi = t.add(rowsum(t, upper), hb.b_hi);
    return out;
}

std::vector<Tensor*> collect_params(DeepONet& net) {
    std::vector<Tensor*> out = nn::collect_params(net.branch);
    for (Tensor* p : nn::collect_params(net.trunk)) out.push_back(p);
    return out;
}

std::vector<Tensor*> collect_params(NaiveIntervalDeepONet& net) {
    std::vector<Tensor*> out = nn::collect_params(net.branch);
    for (Tensor* p : nn::collect_params(net.trunk)) out.push_back(p);
    out.push_back(&net.head.weights);
    out.push_back(&net.head.bias);
    return out;
}

std::vector<Tensor*> collect_params(InnDeepONet& net) {
    std::vector<Tensor*> out = inn::collect_params(net.branch);
    for (Tensor* p : nn::collect_params(net.trunk)) out.push_back(p);
    for (Tensor* p : inn::collect_params(net.head)) out.push_back(p);
    return out;
}

}  // namespace ivp::onet
