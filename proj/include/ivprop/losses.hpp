#pragma once

#include "ivprop/layers.hpp"
#include "ivprop/tape.hpp"

namespace ivp::obj {

struct LossConfig {
    double lambda = 10.0;      // non-crossing weight, >= 0
    double linex_a = 3.0;      // asymmetry, != 0
    double quantile_tau = 0.5; // in (0,1)
    double cwc_delta = 0.0;    // in [0,1)
    double cwc_gamma = 5.0;    // > 0
    // Eq. (26) as printed penalises max(0, g_U - g_L)^2, i.e. correct
    // ordering; kept behind a switch for fidelity testing.
    bool literal_eq26_penalty = false;

    void validate() const;
};

// All losses are scalar tape nodes over equal-length prediction/target
// vectors. Targets are constants.

ad::VarId crossing_penalty(ad::Tape& t, nn::PredPair pred, double lambda, bool literal_eq26 = false);

// mean sq lower error + mean sq upper error + (lambda/N) sum max(0, lo-hi)^2
ad::VarId rann_loss(ad::Tape& t, nn::PredPair pred, ad::VarId tgt_lo, ad::VarId tgt_hi,
                    const LossConfig& cfg);
// Identical form applied to bound-propagated outputs.
ad::VarId bound_loss(ad::Tape& t, nn::PredPair pred, ad::VarId tgt_lo, ad::VarId tgt_hi,
                     const LossConfig& cfg);

ad::VarId midpoint_loss(ad::Tape& t, nn::PredPair pred, ad::VarId tgt_lo, ad::VarId tgt_hi,
                        const LossConfig& cfg);

// mean of exp(a(y - yhat)) - a(y - yhat) - 1
ad::VarId linex(ad::Tape& t, ad::VarId y, ad::VarId yhat, double a);

ad::VarId linex_bound_loss(ad::Tape& t, nn::PredPair pred, ad::VarId tgt_lo, ad::VarId tgt_hi,
                           const LossConfig& cfg);
ad::VarId linex_midpoint_loss(ad::Tape& t, nn::PredPair pred, ad::VarId tgt_lo, ad::VarId tgt_hi,
                              const LossConfig& cfg);

// sum of tau*max(0, y-yhat) + (1-tau)*max(0, yhat-y)
ad::VarId quantile_loss(ad::Tape& t, ad::VarId y, ad::VarId yhat, double tau);

}  // namespace ivp::obj
