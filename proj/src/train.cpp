#include "ivprop/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <stdexcept>

#include "ivprop/bounds.hpp"
#include "ivprop/kernels.hpp"
#include "ivprop/rng.hpp"

namespace ivp::train {

using ad::Tape;
using ad::VarId;

void AdamState::init(const std::vector<Tensor*>& params) {
    m.clear();
    v.clear();
    for (const Tensor* p : params) {
        m.push_back(Tensor::zeros(p->shape));
        v.push_back(Tensor::zeros(p->shape));
    }
    step = 0;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: param/grad/state count mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (!g.all_finite())
            throw TrainingDiverged("adam_step: non-finite gradient in parameter " +
                                   std::to_string(i));
        Tensor& mi = state.m[i];
        Tensor& vi = state.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            mi[j] = cfg.beta1 * mi[j] + (1.0 - cfg.beta1) * g[j];
            vi[j] = cfg.beta2 * vi[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double mhat = mi[j] / bc1;
            const double vhat = vi[j] / bc2;
            p[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::Rann: return "rann";
        case LossKind::Bound: return "bound";
        case LossKind::Midpoint: return "midpoint";
        case LossKind::LinexBound: return "linex-bound";
        default: return "linex-midpoint";
    }
}

LossKind loss_from_name(const std::string& s) {
    if (s == "rann") return LossKind::Rann;
    if (s == "bound") return LossKind::Bound;
    if (s == "midpoint") return LossKind::Midpoint;
    if (s == "linex-bound") return LossKind::LinexBound;
    if (s == "linex-midpoint") return LossKind::LinexMidpoint;
    throw std::invalid_argument("unknown loss '" + s + "'");
}

const char* method_name(MethodKind k) {
    switch (k) {
        case MethodKind::Naive: return "naive";
        case MethodKind::Inn: return "inn";
        case MethodKind::Ibp: return "ibp";
        case MethodKind::Crown: return "crown";
        case MethodKind::MidIbp: return "mid-ibp";
        case MethodKind::MidCrown: return "mid-crown";
        default: return "opt-prop";
    }
}

MethodKind method_from_name(const std::string& s) {
    if (s == "naive") return MethodKind::Naive;
    if (s == "inn") return MethodKind::Inn;
    if (s == "ibp") return MethodKind::Ibp;
    if (s == "crown") return MethodKind::Crown;
    if (s == "mid-ibp") return MethodKind::MidIbp;
    if (s == "mid-crown") return MethodKind::MidCrown;
    if (s == "opt-prop") return MethodKind::OptProp;
    throw std::invalid_argument("unknown method '" + s + "'");
}

namespace {

VarId apply_loss(Tape& t, LossKind kind, nn::PredPair pred, VarId tlo, VarId thi,
                 const obj::LossConfig& cfg) {
    switch (kind) {
        case LossKind::Rann: return obj::rann_loss(t, pred, tlo, thi, cfg);
        case LossKind::Bound: return obj::bound_loss(t, pred, tlo, thi, cfg);
        case LossKind::Midpoint: return obj::midpoint_loss(t, pred, tlo, thi, cfg);
        case LossKind::LinexBound: return obj::linex_bound_loss(t, pred, tlo, thi, cfg);
        default: return obj::linex_midpoint_loss(t, pred, tlo, thi, cfg);
    }
}

Tensor interleaved_inputs(const data::IntervalTable& t) {
    const std::size_t n = t.lo.shape[0], d = t.lo.shape[1];
    Tensor x = Tensor::zeros({n, 2 * d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) {
            x.at(i, 2 * c) = t.lo.at(i, c);
            x.at(i, 2 * c + 1) = t.hi.at(i, c);
        }
    return x;
}

Tensor column(const Tensor& m, std::size_t c) {
    Tensor v = Tensor::zeros({m.shape[0]});
    for (std::size_t i = 0; i < m.shape[0]; ++i) v[i] = m.at(i, c);
    return v;
}

Tensor row_vector(const Tensor& m, std::size_t r) {
    return Tensor::vector(std::vector<double>(m.row_ptr(r), m.row_ptr(r) + m.shape[1]));
}

void center_radius(const data::IntervalTable& t, Tensor& c, Tensor& r) {
    c = Tensor::zeros(t.lo.shape);
    r = Tensor::zeros(t.lo.shape);
    for (std::size_t i = 0; i < t.lo.size(); ++i) {
        c[i] = 0.5 * (t.lo[i] + t.hi[i]);
        r[i] = 0.5 * (t.hi[i] - t.lo[i]);
    }
}

bool record_epoch(TrainTrace& trace, double loss_value) {
    trace.losses.push_back(loss_value);
    trace.epochs_run = trace.losses.size();
    if (!std::isfinite(loss_value)) {
        trace.failed = true;
        trace.fail_reason = "loss diverged (non-finite) at epoch " +
                            std::to_string(trace.epochs_run);
        return false;
    }
    return true;
}

std::vector<const Tensor*> grads_for(const std::vector<Tensor>& all, const std::vector<VarId>& ids) {
    std::vector<const Tensor*> out;
    out.reserve(ids.size());
    for (VarId id : ids) out.push_back(&all[id]);
    return out;
}

std::vector<VarId> var_ids(const nn::MlpVars& v) {
    std::vector<VarId> ids;
    for (const auto& l : v.layers) {
        ids.push_back(l.W);
        ids.push_back(l.b);
    }
    return ids;
}

std::vector<VarId> var_ids(const std::vector<inn::InnLayerVars>& v) {
    std::vector<VarId> ids;
    for (const auto& l : v) {
        ids.push_back(l.w_center);
        ids.push_back(l.w_radius_raw);
        ids.push_back(l.b_center);
        ids.push_back(l.b_radius_raw);
    }
    return ids;
}

}  // namespace

IntervalRegressor make_regressor(MethodKind method, std::size_t d, const RegressorArch& arch,
                                 std::uint64_t seed) {
    IntervalRegressor r;
    r.method = method;
    std::vector<std::size_t> dims{d};
    dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
    dims.push_back(1);
    switch (method) {
        case MethodKind::Naive:
            r.rann = nn::make_rann(d, arch.hidden, nn::Activation::Relu, seed);
            break;
        case MethodKind::Inn:
            r.innm = inn::make_inn(dims, nn::Activation::Relu, nn::Activation::Linear, seed,
                                   arch.inn_radius_frac);
            break;
        case MethodKind::OptProp:
            throw std::invalid_argument("make_regressor: opt-prop is handled by the baseline runner");
        default:
            r.mlp = nn::make_mlp(dims, nn::Activation::Relu, nn::Activation::Linear, seed);
            break;
    }
    return r;
}

TrainTrace train_interval_regressor(IntervalRegressor& model, const data::IntervalDataset& train,
                                    const TrainConfig& cfg) {
    TrainTrace trace;
    const std::size_t n = train.size();
    if (n == 0) throw std::invalid_argument("train_interval_regressor: empty dataset");
    obj::LossConfig lcfg = cfg.loss_cfg;
    lcfg.validate();

    const Tensor tgt_lo = column(train.outputs.lo, 0);
    const Tensor tgt_hi = column(train.outputs.hi, 0);
    AdamConfig acfg;
    acfg.lr = cfg.learning_rate;
    AdamState state;

    std::vector<Tensor*> params;
    switch (model.method) {
        case MethodKind::Naive: params = nn::collect_params(model.rann); break;
        case MethodKind::Inn: params = inn::collect_params(model.innm); break;
        default: params = nn::collect_params(model.mlp); break;
    }
    state.init(params);

    Tensor X;  // naive input
    Tensor C, R;  // box encodings
    if (model.method == MethodKind::Naive) X = interleaved_inputs(train.inputs);
    else center_radius(train.inputs, C, R);

    try {
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            Tape t;
            std::vector<VarId> pids;
            nn::PredPair pred;
            switch (model.method) {
                case MethodKind::Naive: {
                    nn::RannVars vars = nn::register_rann(t, model.rann);
                    pids = var_ids(vars.hidden);
                    pids.push_back(vars.out_lo.W);
                    pids.push_back(vars.out_lo.b);
                    pids.push_back(vars.out_hi.W);
                    pids.push_back(vars.out_hi.b);
                    pred = nn::rann_forward_t(t, vars, t.constant(X));
                    break;
                }
                case MethodKind::Inn: {
                    std::vector<inn::InnLayerVars> vars = inn::register_inn(t, model.innm);
                    pids = var_ids(vars);
                    VarId plo = -1, phi = -1;
                    for (std::size_t i = 0; i < n; ++i) {
                        inn::VarPair z{t.constant(row_vector(train.inputs.lo, i)),
                                       t.constant(row_vector(train.inputs.hi, i))};
                        const inn::VarPair out = inn::inn_forward_t(t, vars, z);
                        plo = i == 0 ? out.lo : t.concat(plo, out.lo);
                        phi = i == 0 ? out.hi : t.concat(phi, out.hi);
                    }
                    pred = {plo, phi};
                    break;
                }
                case MethodKind::Ibp:
                case MethodKind::MidIbp: {
                    nn::MlpVars vars = nn::register_mlp(t, model.mlp);
                    pids = var_ids(vars);
                    const inn::VarPair out =
                        bp::ibp_forward_t(t, vars, t.constant(C), t.constant(R));
                    pred = {t.reshape(out.lo, {n}), t.reshape(out.hi, {n})};
                    break;
                }
                case MethodKind::Crown:
                case MethodKind::MidCrown: {
                    const std::vector<bp::ReluRelaxation> relax =
                        bp::crown_relaxations(model.mlp, {C, R});
                    nn::MlpVars vars = nn::register_mlp(t, model.mlp);
                    pids = var_ids(vars);
                    const inn::VarPair out =
                        bp::crown_scalar_batch_t(t, vars, relax, t.constant(C), t.constant(R));
                    pred = {out.lo, out.hi};
                    break;
                }
                default:
                    throw std::invalid_argument("train_interval_regressor: bad method");
            }
            const VarId loss =
                apply_loss(t, cfg.loss, pred, t.constant(tgt_lo), t.constant(tgt_hi), lcfg);
            if (!record_epoch(trace, t.val(loss)[0])) return trace;
            const std::vector<Tensor> grads = t.gradients(loss);
            adam_step(params, grads_for(grads, pids), state, acfg);
        }
    } catch (const TrainingDiverged& e) {
        trace.failed = true;
        trace.fail_reason = e.what();
    }
    return trace;
}

void IntervalRegressor::predict(const data::IntervalTable& inputs, std::vector<double>& lo,
                                std::vector<double>& hi) const {
    const std::size_t n = inputs.lo.shape[0];
    lo.assign(n, 0.0);
    hi.assign(n, 0.0);
    switch (method) {
        case MethodKind::Naive: {
            const Tensor X = interleaved_inputs(inputs);
            const Tensor Z = nn::mlp_forward(rann.hidden, X);  // (n x J)
            const auto& K = kern::active();
            for (std::size_t i = 0; i < n; ++i) {
                lo[i] = K.dot(rann.output_lo.weights.row_ptr(0), Z.row_ptr(i), Z.shape[1]) +
                        rann.output_lo.bias[0];
                hi[i] = K.dot(rann.output_hi.weights.row_ptr(0), Z.row_ptr(i), Z.shape[1]) +
                        rann.output_hi.bias[0];
            }
            break;
        }
        case MethodKind::Inn: {
            for (std::size_t i = 0; i < n; ++i) {
                inn::IntervalBatch z{row_vector(inputs.lo, i), row_vector(inputs.hi, i)};
                const inn::IntervalBatch out = inn::inn_forward(innm, z);
                lo[i] = out.lo[0];
                hi[i] = out.hi[0];
            }
            break;
        }
        case MethodKind::Ibp:
        case MethodKind::MidIbp: {
            Tensor C, R;
            center_radius(inputs, C, R);
            const inn::IntervalBatch out = bp::ibp_forward(mlp, {C, R});
            for (std::size_t i = 0; i < n; ++i) {
                lo[i] = out.lo.at(i, 0);
                hi[i] = out.hi.at(i, 0);
            }
            break;
        }
        case MethodKind::Crown:
        case MethodKind::MidCrown: {
            for (std::size_t i = 0; i < n; ++i) {
                Tensor c = Tensor::zeros({inputs.lo.shape[1]});
                Tensor r = Tensor::zeros({inputs.lo.shape[1]});
                for (std::size_t d = 0; d < c.size(); ++d) {
                    c[d] = 0.5 * (inputs.lo.at(i, d) + inputs.hi.at(i, d));
                    r[d] = 0.5 * (inputs.hi.at(i, d) - inputs.lo.at(i, d));
                }
                const bp::CrownResult res = bp::crown_backward_bounds(mlp, {c, r});
                lo[i] = res.out.lo[0];
                hi[i] = res.out.hi[0];
            }
            break;
        }
        default:
            throw std::invalid_argument("IntervalRegressor::predict: bad method");
    }
}

double crossing_fraction(const IntervalRegressor& model, const data::IntervalDataset& d) {
    std::vector<double> lo, hi;
    model.predict(d.inputs, lo, hi);
    std::size_t crossed = 0;
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (lo[i] > hi[i]) ++crossed;
    return static_cast<double>(crossed) / static_cast<double>(lo.size());
}

OperatorModel make_operator_model(MethodKind method, std::size_t m, std::size_t coord_dim,
                                  const OperatorArch& arch, std::uint64_t seed) {
    OperatorModel om;
    om.method = method;
    switch (method) {
        case MethodKind::Naive:
            om.naive = onet::make_naive_deeponet(m, coord_dim, arch.q, arch.branch_hidden,
                                                 arch.trunk_hidden, seed);
            break;
        case MethodKind::Inn:
            om.innd = onet::make_inn_deeponet(m, coord_dim, arch.q, arch.branch_hidden,
                                              arch.trunk_hidden, seed, arch.inn_radius_frac);
            break;
        case MethodKind::OptProp:
            throw std::invalid_argument("make_operator_model: opt-prop has no operator variant");
        default:
            om.donet = onet::make_deeponet(m, coord_dim, arch.q, arch.branch_hidden,
                                           arch.trunk_hidden, seed);
            break;
    }
    return om;
}

TrainTrace train_operator_model(OperatorModel& model, const data::IntervalFunctionDataset& train,
                                const TrainConfig& cfg) {
    TrainTrace trace;
    const std::size_t n = train.size();
    if (n == 0) throw std::invalid_argument("train_operator_model: empty dataset");
    const std::size_t p = train.coords.shape[0];
    obj::LossConfig lcfg = cfg.loss_cfg;
    lcfg.validate();

    AdamConfig acfg;
    acfg.lr = cfg.learning_rate;
    AdamState state;
    std::vector<Tensor*> params;
    switch (model.method) {
        case MethodKind::Naive: params = onet::collect_params(model.naive); break;
        case MethodKind::Inn: params = onet::collect_params(model.innd); break;
        default: params = onet::collect_params(model.donet); break;
    }
    state.init(params);

    Tensor Cs, Rs;  // (n x m) box encodings for the branch
    center_radius(train.sensors, Cs, Rs);
    const Tensor X = model.method == MethodKind::Naive ? interleaved_inputs(train.sensors)
                                                       : Tensor();
    const Tensor E = model.method == MethodKind::Naive
                         ? onet::interleave_matrix(model.naive.latent_dim())
                         : Tensor();

    const std::size_t batch = cfg.batch_functions == 0 ? n : std::min(cfg.batch_functions, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    try {
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            Rng shuffle_rng = make_rng(derive_seed(cfg.seed, 100000 + epoch));
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            double epoch_loss = 0.0;
            std::size_t batches = 0;
            for (std::size_t start = 0; start < n; start += batch) {
                const std::size_t bsz = std::min(batch, n - start);
                Tape t;
                std::vector<VarId> pids;
                const VarId coords = t.constant(train.coords);
                VarId loss_acc = t.constant(0.0);

                auto tgt_pair = [&](std::size_t f) {
                    return std::pair<VarId, VarId>{t.constant(row_vector(train.values.lo, f)),
                                                   t.constant(row_vector(train.values.hi, f))};
                };

                switch (model.method) {
                    case MethodKind::Naive: {
                        nn::MlpVars branch = nn::register_mlp(t, model.naive.branch);
                        nn::MlpVars trunk = nn::register_mlp(t, model.naive.trunk);
                        nn::DenseVars head{t.leaf(model.naive.head.weights, true),
                                           t.leaf(model.naive.head.bias, true),
                                           nn::Activation::Linear};
                        pids = var_ids(branch);
                        for (VarId id : var_ids(trunk)) pids.push_back(id);
                        pids.push_back(head.W);
                        pids.push_back(head.b);
                        // gather the batch's interleaved sensor rows
                        Tensor xb = Tensor::zeros({bsz, X.shape[1]});
                        for (std::size_t b = 0; b < bsz; ++b)
                            std::copy(X.row_ptr(order[start + b]),
                                      X.row_ptr(order[start + b]) + X.shape[1], xb.row_ptr(b));
                        const VarId L = nn::mlp_forward_t(t, branch, t.constant(std::move(xb)));
                        const VarId T = nn::mlp_forward_t(t, trunk, coords);
                        const VarId Ec = t.constant(E);
                        for (std::size_t b = 0; b < bsz; ++b) {
                            const std::size_t f = order[start + b];
                            const VarId row = t.reshape(t.slice_rows(L, b, b + 1),
                                                        {t.val(L).shape[1]});
                            const nn::PredPair pp = onet::naive_combine_t(t, row, T, head, Ec);
                            const auto [tl, th] = tgt_pair(f);
                            loss_acc = t.add(loss_acc, apply_loss(t, cfg.loss, pp, tl, th, lcfg));
                        }
                        break;
                    }
                    case MethodKind::Ibp:
                    case MethodKind::MidIbp: {
                        nn::MlpVars branch = nn::register_mlp(t, model.donet.branch);
                        nn::MlpVars trunk = nn::register_mlp(t, model.donet.trunk);
                        pids = var_ids(branch);
                        for (VarId id : var_ids(trunk)) pids.push_back(id);
                        Tensor cb = Tensor::zeros({bsz, Cs.shape[1]});
                        Tensor rb = Tensor::zeros({bsz, Cs.shape[1]});
                        for (std::size_t b = 0; b < bsz; ++b) {
                            std::copy(Cs.row_ptr(order[start + b]),
                                      Cs.row_ptr(order[start + b]) + Cs.shape[1], cb.row_ptr(b));
                            std::copy(Rs.row_ptr(order[start + b]),
                                      Rs.row_ptr(order[start + b]) + Rs.shape[1], rb.row_ptr(b));
                        }
                        const inn::VarPair bounds = bp::ibp_forward_t(
                            t, branch, t.constant(std::move(cb)), t.constant(std::move(rb)));
                        const VarId T = nn::mlp_forward_t(t, trunk, coords);
                        const std::size_t q = t.val(bounds.lo).shape[1];
                        for (std::size_t b = 0; b < bsz; ++b) {
                            const std::size_t f = order[start + b];
                            inn::VarPair beta{
                                t.reshape(t.slice_rows(bounds.lo, b, b + 1), {q}),
                                t.reshape(t.slice_rows(bounds.hi, b, b + 1), {q})};
                            const nn::PredPair pp = onet::bounded_combine_t(t, beta, T);
                            const auto [tl, th] = tgt_pair(f);
                            loss_acc = t.add(loss_acc, apply_loss(t, cfg.loss, pp, tl, th, lcfg));
                        }
                        break;
                    }
                    case MethodKind::Crown:
                    case MethodKind::MidCrown: {
                        nn::MlpVars branch = nn::register_mlp(t, model.donet.branch);
                        nn::MlpVars trunk = nn::register_mlp(t, model.donet.trunk);
                        pids = var_ids(branch);
                        for (VarId id : var_ids(trunk)) pids.push_back(id);
                        const VarId T = nn::mlp_forward_t(t, trunk, coords);
                        for (std::size_t b = 0; b < bsz; ++b) {
                            const std::size_t f = order[start + b];
                            const Tensor c = row_vector(Cs, f);
                            const Tensor r = row_vector(Rs, f);
                            const std::vector<bp::ReluRelaxation> relax =
                                bp::crown_relaxations(model.donet.branch, {c, r});
                            const inn::VarPair beta = bp::crown_backward_bounds_t(
                                t, branch, relax, t.constant(c), t.constant(r));
                            const nn::PredPair pp = onet::bounded_combine_t(t, beta, T);
                            const auto [tl, th] = tgt_pair(f);
                            loss_acc = t.add(loss_acc, apply_loss(t, cfg.loss, pp, tl, th, lcfg));
                        }
                        break;
                    }
                    case MethodKind::Inn: {
                        std::vector<inn::InnLayerVars> branch = inn::register_inn(t, model.innd.branch);
                        nn::MlpVars trunk = nn::register_mlp(t, model.innd.trunk);
                        const inn::InnLayerVars head = inn::register_inn_layer(t, model.innd.head);
                        pids = var_ids(branch);
                        for (VarId id : var_ids(trunk)) pids.push_back(id);
                        pids.push_back(head.w_center);
                        pids.push_back(head.w_radius_raw);
                        pids.push_back(head.b_center);
                        pids.push_back(head.b_radius_raw);
                        const VarId T = nn::mlp_forward_t(t, trunk, coords);
                        for (std::size_t b = 0; b < bsz; ++b) {
                            const std::size_t f = order[start + b];
                            inn::VarPair z{t.constant(row_vector(train.sensors.lo, f)),
                                           t.constant(row_vector(train.sensors.hi, f))};
                            const inn::VarPair beta = inn::inn_forward_t(t, branch, z);
                            const nn::PredPair pp = onet::inn_combine_t(t, beta, T, head);
                            const auto [tl, th] = tgt_pair(f);
                            loss_acc = t.add(loss_acc, apply_loss(t, cfg.loss, pp, tl, th, lcfg));
                        }
                        break;
                    }
                    default:
                        throw std::invalid_argument("train_operator_model: bad method");
                }

                const VarId loss = ad::ops::scale(t, loss_acc, 1.0 / static_cast<double>(bsz));
                epoch_loss += t.val(loss)[0];
                ++batches;
                if (!std::isfinite(t.val(loss)[0])) {
                    record_epoch(trace, t.val(loss)[0]);
                    return trace;
                }
                const std::vector<Tensor> grads = t.gradients(loss);
                adam_step(params, grads_for(grads, pids), state, acfg);
            }
            if (!record_epoch(trace, epoch_loss / static_cast<double>(batches))) return trace;
        }
    } catch (const TrainingDiverged& e) {
        trace.failed = true;
        trace.fail_reason = e.what();
    }
    (void)p;
    return trace;
}

void OperatorModel::predict_function(const Tensor& u_lo, const Tensor& u_hi, const Tensor& coords,
                                     std::vector<double>& lo, std::vector<double>& hi) const {
    const std::size_t p = coords.shape[0];
    lo.assign(p, 0.0);
    hi.assign(p, 0.0);
    const auto& K = kern::active();
    switch (method) {
        case MethodKind::Naive: {
            IntervalVector u(u_lo.size());
            for (std::size_t i = 0; i < u_lo.size(); ++i) u[i] = Interval(u_lo[i], u_hi[i]);
            const Tensor beta = nn::mlp_forward(naive.branch, nn::pack_interval_input(u));
            const Tensor tau = nn::mlp_forward(naive.trunk, coords);  // (p x q)
            const std::size_t q = naive.latent_dim();
            std::vector<double> z(2 * q);
            for (std::size_t j = 0; j < p; ++j) {
                const double* trow = tau.row_ptr(j);
                for (std::size_t i = 0; i < q; ++i) {
                    z[2 * i] = beta[2 * i] * trow[i];
                    z[2 * i + 1] = beta[2 * i + 1] * trow[i];
                }
                lo[j] = K.dot(naive.head.weights.row_ptr(0), z.data(), 2 * q) + naive.head.bias[0];
                hi[j] = K.dot(naive.head.weights.row_ptr(1), z.data(), 2 * q) + naive.head.bias[1];
            }
            break;
        }
        case MethodKind::Inn: {
            inn::IntervalBatch z{u_lo, u_hi};
            const inn::IntervalBatch beta = inn::inn_forward(innd.branch, z);
            const Tensor tau = nn::mlp_forward(innd.trunk, coords);
            const std::size_t q = innd.latent_dim();
            inn::IntervalBatch prod{Tensor::zeros({p, q}), Tensor::zeros({p, q})};
            for (std::size_t j = 0; j < p; ++j)
                inn::interval_multiplication_layer(beta.lo.data.data(), beta.hi.data.data(),
                                                   tau.row_ptr(j), prod.lo.row_ptr(j),
                                                   prod.hi.row_ptr(j), q);
            const inn::IntervalBatch out = inn::inn_layer_forward(innd.head, prod);
            for (std::size_t j = 0; j < p; ++j) {
                lo[j] = out.lo.at(j, 0);
                hi[j] = out.hi.at(j, 0);
            }
            break;
        }
        default: {
            Tensor c = Tensor::zeros({u_lo.size()}), r = Tensor::zeros({u_lo.size()});
            for (std::size_t i = 0; i < u_lo.size(); ++i) {
                c[i] = 0.5 * (u_lo[i] + u_hi[i]);
                r[i] = 0.5 * (u_hi[i] - u_lo[i]);
            }
            const onet::BoundMethod bm =
                (method == MethodKind::Ibp || method == MethodKind::MidIbp)
                    ? onet::BoundMethod::Ibp
                    : onet::BoundMethod::Crown;
            const inn::IntervalBatch out = onet::bounded_deeponet_forward(donet, {c, r}, coords, bm);
            for (std::size_t j = 0; j < p; ++j) {
                lo[j] = out.lo[j];
                hi[j] = out.hi[j];
            }
            break;
        }
    }
}

TrainTrace train_pointwise_mlp(nn::MlpModel& model, const data::PointDataset& train,
                               const TrainConfig& cfg) {
    TrainTrace trace;
    AdamConfig acfg;
    acfg.lr = cfg.learning_rate;
    AdamState state;
    std::vector<Tensor*> params = nn::collect_params(model);
    state.init(params);
    const Tensor y = column(train.outputs, 0);
    try {
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            Tape t;
            nn::MlpVars vars = nn::register_mlp(t, model);
            const std::vector<VarId> pids = var_ids(vars);
            const VarId out = nn::mlp_forward_t(t, vars, t.constant(train.inputs));
            const VarId pred = t.reshape(out, {train.size()});
            const VarId loss = ad::ops::mse(t, pred, t.constant(y));
            if (!record_epoch(trace, t.val(loss)[0])) return trace;
            const std::vector<Tensor> grads = t.gradients(loss);
            adam_step(params, grads_for(grads, pids), state, acfg);
        }
    } catch (const TrainingDiverged& e) {
        trace.failed = true;
        trace.fail_reason = e.what();
    }
    return trace;
}

obj::EvalArrays eval_regressor(const IntervalRegressor& model, const data::IntervalDataset& test) {
    std::vector<double> lo, hi;
    model.predict(test.inputs, lo, hi);
    obj::EvalArrays e;
    for (std::size_t i = 0; i < test.size(); ++i)
        e.push(lo[i], hi[i], test.outputs.lo.at(i, 0), test.outputs.hi.at(i, 0));
    return e;
}

obj::EvalArrays eval_operator(const OperatorModel& model,
                              const data::IntervalFunctionDataset& test) {
    obj::EvalArrays e;
    std::vector<double> lo, hi;
    const std::size_t p = test.coords.shape[0];
    for (std::size_t f = 0; f < test.size(); ++f) {
        Tensor ulo = Tensor::vector(std::vector<double>(
            test.sensors.lo.row_ptr(f), test.sensors.lo.row_ptr(f) + test.sensors.lo.shape[1]));
        Tensor uhi = Tensor::vector(std::vector<double>(
            test.sensors.hi.row_ptr(f), test.sensors.hi.row_ptr(f) + test.sensors.hi.shape[1]));
        model.predict_function(ulo, uhi, test.coords, lo, hi);
        for (std::size_t j = 0; j < p; ++j)
            e.push(lo[j], hi[j], test.values.lo.at(f, j), test.values.hi.at(f, j));
    }
    return e;
}

void write_loss_trace_csv(const std::string& path, const TrainTrace& trace) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << std::setprecision(17) << "epoch,loss\n";
    for (std::size_t i = 0; i < trace.losses.size(); ++i) os << (i + 1) << ',' << trace.losses[i] << '\n';
}

}  // namespace ivp::train
