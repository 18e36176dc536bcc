#include "ivprop/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace ivp::obj {

double rmse(const std::vector<double>& truth, const std::vector<double>& pred) {
    if (truth.size() != pred.size() || truth.empty())
        throw std::invalid_argument("rmse: bad lengths");
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - pred[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(truth.size()));
}

double linex_metric(const std::vector<double>& truth, const std::vector<double>& pred, double a) {
    if (truth.size() != pred.size() || truth.empty())
        throw std::invalid_argument("linex_metric: bad lengths");
    if (a == 0.0) throw std::invalid_argument("linex_metric: a == 0");
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = a * (truth[i] - pred[i]);
        acc += std::exp(d) - d - 1.0;
    }
    return acc / static_cast<double>(truth.size());
}

double pinaw(const EvalArrays& e, std::size_t* excluded) {
    double acc = 0.0;
    std::size_t n = 0, skip = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double tw = e.tgt_hi[i] - e.tgt_lo[i];
        if (tw <= 0.0) {
            ++skip;
            continue;
        }
        acc += (e.pred_hi[i] - e.pred_lo[i]) / tw;
        ++n;
    }
    if (excluded) *excluded = skip;
    if (n == 0) throw std::invalid_argument("pinaw: no nonzero-width targets");
    return acc / static_cast<double>(n);
}

double picp_overlap(const EvalArrays& e, std::size_t* excluded) {
    double acc = 0.0;
    std::size_t n = 0, skip = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double tw = e.tgt_hi[i] - e.tgt_lo[i];
        if (tw <= 0.0) {
            ++skip;
            continue;
        }
        const double ov =
            std::max(0.0, std::min(e.pred_hi[i], e.tgt_hi[i]) - std::max(e.pred_lo[i], e.tgt_lo[i]));
        acc += ov / tw;
        ++n;
    }
    if (excluded) *excluded = skip;
    if (n == 0) throw std::invalid_argument("picp_overlap: no nonzero-width targets");
    return acc / static_cast<double>(n);
}

double picp_indicator(const std::vector<double>& pred_lo, const std::vector<double>& pred_hi,
                      const std::vector<double>& y) {
    if (y.size() != pred_lo.size() || y.size() != pred_hi.size() || y.empty())
        throw std::invalid_argument("picp_indicator: bad lengths");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (pred_lo[i] <= y[i] && y[i] <= pred_hi[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

double cwc(double pinaw_value, double picp_value, double delta, double gamma) {
    return pinaw_value * (1.0 + std::exp(gamma * std::max(0.0, (1.0 - delta) - picp_value)));
}

MetricReport evaluate_bounds(const EvalArrays& e, double linex_a, double delta, double gamma) {
    MetricReport r;
    r.rmse_l = rmse(e.tgt_lo, e.pred_lo);
    r.rmse_u = rmse(e.tgt_hi, e.pred_hi);
    r.linex_l = linex_metric(e.tgt_lo, e.pred_lo, linex_a);
    r.linex_u = linex_metric(e.tgt_hi, e.pred_hi, linex_a);
    std::size_t skip_a = 0, skip_b = 0;
    r.pinaw = pinaw(e, &skip_a);
    r.picp = picp_overlap(e, &skip_b);
    r.cwc = cwc(r.pinaw, r.picp, delta, gamma);
    r.zero_width_excluded = skip_a;
    return r;
}

}  // namespace ivp::obj
