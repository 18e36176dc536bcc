#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ivprop/dataset.hpp"
#include "ivprop/metrics.hpp"
#include "ivprop/optprop.hpp"
#include "ivprop/train.hpp"

// Experiment runner: reproduces the study grid (problem x setting x method x
// n_train x seed) and emits machine-readable results. Cells are independent
// and scheduled over a small worker pool; each cell is single-threaded and
// deterministic per seed.

namespace ivp::exp {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Reg1dConfig {
    std::size_t pool_size = 500;        // ideal interval training pool
    std::size_t test_size = 200;
    std::size_t pointwise_pool = 200;   // augmented setting source points
    double width_min = 0.05, width_max = 0.3;
    double noise_std = 0.025;
    double noise_margin_sigmas = 2.0;
    std::vector<double> grid_resolutions;  // default 9 values 0.05..0.35
};

struct PdeConfig {
    std::size_t n_samples = 2000;
    std::size_t n_train_pool = 1000;
    std::size_t n_val = 100;
    std::size_t n_test = 900;
    double width_min = 0.05, width_max = 0.25;
    std::vector<std::size_t> cluster_sizes;  // default {5,6,7,8,10,25,50,150,300}
};

struct Recipe {
    double learning_rate = 1e-3;
    std::size_t epochs = 2000;
    std::size_t batch_functions = 0;
    double lambda = 10.0;
    double linex_a = 3.0;
    std::optional<train::LossKind> loss;  // resolved per method when unset
};

struct ExperimentConfig {
    std::string problem = "reg1d";   // reg1d | pde1d | pde2d
    std::string setting = "ideal";   // ideal | augmented
    std::vector<std::string> methods{"naive"};
    std::vector<std::size_t> n_train{100};
    std::vector<std::uint64_t> seeds{1};
    std::uint64_t data_seed = 9000;
    std::size_t workers = 2;
    std::string data_root = "data";
    std::string out_root = "runs";

    Reg1dConfig reg1d;
    PdeConfig pde1d;
    PdeConfig pde2d;

    train::RegressorArch reg_arch;
    train::OperatorArch pde1d_arch;
    train::OperatorArch pde2d_arch;
    opt::OptPropConfig optprop;

    // recipes keyed by "<problem>/<method>"; fall back to defaults
    std::vector<std::pair<std::string, Recipe>> recipes;

    std::string tag() const { return problem + "-" + setting; }
    std::string data_dir() const { return data_root + "/" + tag(); }
    std::string out_dir() const { return out_root + "/" + tag(); }
};

ExperimentConfig default_config();
ExperimentConfig load_config(const std::string& path);
// Built-in per-(problem, method) training recipe; config entries override.
Recipe resolve_recipe(const ExperimentConfig& cfg, const std::string& problem,
                      train::MethodKind method);
train::LossKind default_loss(const std::string& problem, train::MethodKind method);

// --- in-memory data bundles ---

struct Reg1dBundle {
    data::IntervalDataset pool;       // ideal interval pool (ideal setting)
    data::IntervalDataset test;       // ideal interval test set
    data::PointDataset pointwise;     // augmented-source points
    data::IntervalDataset augmented;  // augmented interval pool
};

struct PdeBundle {
    data::IntervalFunctionDataset train_pool;  // ideal
    data::IntervalFunctionDataset val;
    data::IntervalFunctionDataset test;
    data::FunctionDataset pointwise_pool;      // augmented source
    data::IntervalFunctionDataset augmented;   // augmented interval pool
};

// Deterministic from cfg.data_seed; `augmented` filled only when requested.
Reg1dBundle build_reg1d_bundle(const ExperimentConfig& cfg, bool with_augmented);
PdeBundle build_pde_bundle(const ExperimentConfig& cfg, bool pde2d, bool with_augmented);

data::IntervalDataset subsample(const data::IntervalDataset& pool, std::size_t n,
                                std::uint64_t seed);
data::IntervalFunctionDataset subsample(const data::IntervalFunctionDataset& pool, std::size_t n,
                                        std::uint64_t seed);

// --- cells and results ---

struct ResultRow {
    std::string method, problem, setting;
    std::size_t n_train = 0;
    std::uint64_t seed = 0;
    obj::MetricReport metrics;
    double train_s = 0.0, infer_s = 0.0;
    bool failed = false;
    std::string fail_reason;
};

ResultRow run_reg1d_cell(const ExperimentConfig& cfg, const Reg1dBundle& bundle,
                         train::MethodKind method, std::size_t n_train, std::uint64_t seed);
ResultRow run_pde_cell(const ExperimentConfig& cfg, const PdeBundle& bundle,
                       train::MethodKind method, std::size_t n_train, std::uint64_t seed);

// Full grid over methods x n_train x seeds, scheduled on cfg.workers threads.
std::vector<ResultRow> run_grid(const ExperimentConfig& cfg, const Reg1dBundle* reg,
                                const PdeBundle* pde);

// results.csv schema: method,problem,setting,n_train,seed,rmse_l,rmse_u,
// linex_l,linex_u,pinaw,picp,cwc,train_s,infer_s,failed
void upsert_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::string& path);

struct AggregateRow {
    std::string method;
    std::size_t n_train = 0;
    std::string metric;
    double mean = 0.0, stddev = 0.0;
    std::size_t failures = 0;
    std::size_t runs = 0;  // successful runs aggregated
};

// mean +- std over successful runs per (method, n_train, metric) plus the
// failure count; NaN never appears (all-failed cells emit empty mean/std).
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);
void write_report_csv(const std::string& path, const std::vector<AggregateRow>& agg);

// --- CLI command entry points (return process exit codes) ---

int cmd_gen_data(const ExperimentConfig& cfg);
int cmd_augment(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
int cmd_evaluate(const ExperimentConfig& cfg);
int cmd_baseline(const ExperimentConfig& cfg);
int cmd_report(const ExperimentConfig& cfg, bool emit_plot_data);

}  // namespace ivp::exp
