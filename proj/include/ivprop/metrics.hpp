#pragma once

#include <cstddef>
#include <vector>

#include "ivprop/interval.hpp"

// Evaluation metrics over flat prediction/target bound arrays. Pure
// functions, no tape involvement.

namespace ivp::obj {

// One entry per evaluated (sample, coordinate) pair.
struct EvalArrays {
    std::vector<double> pred_lo, pred_hi, tgt_lo, tgt_hi;

    std::size_t size() const { return pred_lo.size(); }
    void push(double plo, double phi, double tlo, double thi) {
        pred_lo.push_back(plo);
        pred_hi.push_back(phi);
        tgt_lo.push_back(tlo);
        tgt_hi.push_back(thi);
    }
};

struct MetricReport {
    double rmse_l = 0.0, rmse_u = 0.0;
    double linex_l = 0.0, linex_u = 0.0;
    double pinaw = 0.0;
    double picp = 0.0;  // overlap-based
    double cwc = 0.0;
    std::size_t zero_width_excluded = 0;  // targets skipped by pinaw/picp
};

double rmse(const std::vector<double>& truth, const std::vector<double>& pred);
double linex_metric(const std::vector<double>& truth, const std::vector<double>& pred, double a);

// mean of (pred width / target width); zero-width targets excluded + counted
double pinaw(const EvalArrays& e, std::size_t* excluded = nullptr);
// mean overlap(pred, target) / width(target), same exclusion rule
double picp_overlap(const EvalArrays& e, std::size_t* excluded = nullptr);
// fraction of pointwise y values inside [pred_lo, pred_hi]
double picp_indicator(const std::vector<double>& pred_lo, const std::vector<double>& pred_hi,
                      const std::vector<double>& y);
double cwc(double pinaw_value, double picp_value, double delta, double gamma);

// rmse/linex on both bounds + the coverage metrics in one pass.
MetricReport evaluate_bounds(const EvalArrays& e, double linex_a, double delta, double gamma);

}  // namespace ivp::obj
