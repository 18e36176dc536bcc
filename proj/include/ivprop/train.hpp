#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ivprop/dataset.hpp"
#include "ivprop/deeponet.hpp"
#include "ivprop/inn.hpp"
#include "ivprop/layers.hpp"
#include "ivprop/losses.hpp"
#include "ivprop/metrics.hpp"

// Optimiser, training loops and the model wrappers shared by the experiment
// runner. One training run is single-threaded and fully determined by
// (seed, config, dataset).

namespace ivp::train {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m, v;
    std::size_t step = 0;

    void init(const std::vector<Tensor*>& params);
};

// Standard Adam update; throws TrainingDiverged on non-finite gradients.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& cfg);

class TrainingDiverged : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class LossKind { Rann, Bound, Midpoint, LinexBound, LinexMidpoint };
enum class MethodKind { Naive, Inn, Ibp, Crown, MidIbp, MidCrown, OptProp };

const char* loss_name(LossKind k);
LossKind loss_from_name(const std::string& s);
const char* method_name(MethodKind k);
MethodKind method_from_name(const std::string& s);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 2000;
    std::size_t batch_functions = 0;  // DeepONet function-major batch; 0 = full
    std::uint64_t seed = 0;
    LossKind loss = LossKind::Bound;
    obj::LossConfig loss_cfg;  // lambda, linex_a, ...
};

struct TrainTrace {
    std::vector<double> losses;  // one entry per epoch
    std::size_t epochs_run = 0;
    bool failed = false;
    std::string fail_reason;
};

// --- interval regressors (scalar-output problems) ---

struct RegressorArch {
    std::vector<std::size_t> hidden{16, 16, 16};
    double inn_radius_frac = 0.01;
};

struct IntervalRegressor {
    MethodKind method = MethodKind::Naive;
    nn::RannModel rann;   // Naive
    inn::InnModel innm;   // Inn
    nn::MlpModel mlp;     // Ibp / Crown / MidIbp / MidCrown

    void predict(const data::IntervalTable& inputs, std::vector<double>& lo,
                 std::vector<double>& hi) const;
};

IntervalRegressor make_regressor(MethodKind method, std::size_t d, const RegressorArch& arch,
                                 std::uint64_t seed);
TrainTrace train_interval_regressor(IntervalRegressor& model, const data::IntervalDataset& train,
                                    const TrainConfig& cfg);

// Crossing rate of predictions (fraction with lo > hi) on a dataset.
double crossing_fraction(const IntervalRegressor& model, const data::IntervalDataset& d);

// --- operator models (PDE problems) ---

struct OperatorArch {
    std::size_t q = 64;
    std::vector<std::size_t> branch_hidden{64, 64, 64, 64};
    std::vector<std::size_t> trunk_hidden{64, 64, 64, 64};
    double inn_radius_frac = 0.01;
};

struct OperatorModel {
    MethodKind method = MethodKind::Naive;
    onet::DeepONet donet;               // Ibp / Crown / MidIbp / MidCrown
    onet::NaiveIntervalDeepONet naive;  // Naive
    onet::InnDeepONet innd;             // Inn

    // Bounds over all coords for one interval sensor row.
    void predict_function(const Tensor& u_lo, const Tensor& u_hi, const Tensor& coords,
                          std::vector<double>& lo, std::vector<double>& hi) const;
};

OperatorModel make_operator_model(MethodKind method, std::size_t m, std::size_t coord_dim,
                                  const OperatorArch& arch, std::uint64_t seed);
TrainTrace train_operator_model(OperatorModel& model, const data::IntervalFunctionDataset& train,
                                const TrainConfig& cfg);

// --- pointwise surrogates (Opt-Prop, trained on interval centers) ---

TrainTrace train_pointwise_mlp(nn::MlpModel& model, const data::PointDataset& train,
                               const TrainConfig& cfg);

// --- evaluation ---

obj::EvalArrays eval_regressor(const IntervalRegressor& model, const data::IntervalDataset& test);
obj::EvalArrays eval_operator(const OperatorModel& model,
                              const data::IntervalFunctionDataset& test);

void write_loss_trace_csv(const std::string& path, const TrainTrace& trace);

}  // namespace ivp::train
