#include "ivprop/losses.hpp"

#include <stdexcept>

namespace ivp::obj {

using ad::Tape;
using ad::VarId;
using namespace ad::ops;

void LossConfig::validate() const {
    if (lambda < 0.0) throw std::invalid_argument("LossConfig: lambda < 0");
    if (linex_a == 0.0) throw std::invalid_argument("LossConfig: linex_a == 0");
    if (!(quantile_tau > 0.0 && quantile_tau < 1.0))
        throw std::invalid_argument("LossConfig: quantile_tau outside (0,1)");
    if (!(cwc_delta >= 0.0 && cwc_delta < 1.0))
        throw std::invalid_argument("LossConfig: cwc_delta outside [0,1)");
    if (!(cwc_gamma > 0.0)) throw std::invalid_argument("LossConfig: cwc_gamma <= 0");
}

static void check_batch(Tape& t, nn::PredPair pred, VarId tgt_lo, VarId tgt_hi) {
    const std::size_t n = t.val(pred.lo).size();
    if (n == 0) throw std::invalid_argument("loss: empty batch");
    if (t.val(pred.hi).size() != n || t.val(tgt_lo).size() != n || t.val(tgt_hi).size() != n)
        throw ShapeError("loss: prediction/target length mismatch");
}

VarId crossing_penalty(Tape& t, nn::PredPair pred, double lambda, bool literal_eq26) {
    const VarId diff = literal_eq26 ? t.sub(pred.hi, pred.lo) : t.sub(pred.lo, pred.hi);
    return scale(t, t.mean(t.square(t.max_with(diff, 0.0))), lambda);
}

VarId rann_loss(Tape& t, nn::PredPair pred, VarId tgt_lo, VarId tgt_hi, const LossConfig& cfg) {
    check_batch(t, pred, tgt_lo, tgt_hi);
    const VarId fit = t.add(mse(t, pred.lo, tgt_lo), mse(t, pred.hi, tgt_hi));
    return t.add(fit, crossing_penalty(t, pred, cfg.lambda));
}

VarId bound_loss(Tape& t, nn::PredPair pred, VarId tgt_lo, VarId tgt_hi, const LossConfig& cfg) {
    return rann_loss(t, pred, tgt_lo, tgt_hi, cfg);
}

VarId midpoint_loss(Tape& t, nn::PredPair pred, VarId tgt_lo, VarId tgt_hi,
                    const LossConfig& cfg) {
    check_batch(t, pred, tgt_lo, tgt_hi);
    const VarId pred_mid = scale(t, t.add(pred.lo, pred.hi), 0.5);
    const VarId tgt_mid = scale(t, t.add(tgt_lo, tgt_hi), 0.5);
    return t.add(mse(t, pred_mid, tgt_mid),
                 crossing_penalty(t, pred, cfg.lambda, cfg.literal_eq26_penalty));
}

VarId linex(Tape& t, VarId y, VarId yhat, double a) {
    if (a == 0.0) throw std::invalid_argument("linex: a == 0");
    const VarId d = scale(t, t.sub(y, yhat), a);
    return t.mean(t.sub(t.sub(t.exp_(d), d), t.constant(1.0)));
}

VarId linex_bound_loss(Tape& t, nn::PredPair pred, VarId tgt_lo, VarId tgt_hi,
                       const LossConfig& cfg) {
    check_batch(t, pred, tgt_lo, tgt_hi);
    const VarId fit = t.add(linex(t, tgt_lo, pred.lo, cfg.linex_a),
                            linex(t, tgt_hi, pred.hi, cfg.linex_a));
    return t.add(fit, crossing_penalty(t, pred, cfg.lambda));
}

VarId linex_midpoint_loss(Tape& t, nn::PredPair pred, VarId tgt_lo, VarId tgt_hi,
                          const LossConfig& cfg) {
    check_batch(t, pred, tgt_lo, tgt_hi);
    const VarId pred_mid = scale(t, t.add(pred.lo, pred.hi), 0.5);
    const VarId tgt_mid = scale(t, t.add(tgt_lo, tgt_hi), 0.5);
    return t.add(linex(t, tgt_mid, pred_mid, cfg.linex_a),
                 crossing_penalty(t, pred, cfg.lambda, cfg.literal_eq26_penalty));
}

VarId quantile_loss(Tape& t, VarId y, VarId yhat, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("quantile_loss: tau outside (0,1)");
    const VarId under = t.relu(t.sub(y, yhat));
    const VarId over = t.relu(t.sub(yhat, y));
    return t.add(scale(t, t.sum(under), tau), scale(t, t.sum(over), 1.0 - tau));
}

}  // namespace ivp::obj
