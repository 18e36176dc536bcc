#include "ivprop/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "ivprop/augment.hpp"
#include "ivprop/datagen.hpp"
#include "ivprop/model_io.hpp"
#include "ivprop/rng.hpp"

namespace ivp::exp {

namespace fs = std::filesystem;
using nlohmann::json;
using train::MethodKind;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.reg1d.grid_resolutions = {0.05, 0.0875, 0.125, 0.1625, 0.2, 0.2375, 0.275, 0.3125, 0.35};
    cfg.pde1d.cluster_sizes = {5, 6, 7, 8, 10, 25, 50, 150, 300};
    cfg.pde2d = cfg.pde1d;
    cfg.pde2d.n_samples = 1000;
    cfg.pde2d.n_train_pool = 750;
    cfg.pde2d.n_val = 50;
    cfg.pde2d.n_test = 200;
    cfg.pde1d_arch.q = 64;
    cfg.pde1d_arch.branch_hidden = {64, 64, 64, 64};
    cfg.pde1d_arch.trunk_hidden = {64, 64, 64, 64};
    cfg.pde2d_arch.q = 128;
    cfg.pde2d_arch.branch_hidden = {128};
    cfg.pde2d_arch.trunk_hidden = {128, 128};
    return cfg;
}

train::LossKind default_loss(const std::string& problem, MethodKind method) {
    const bool pde = problem != "reg1d";
    switch (method) {
        case MethodKind::Naive:
            // the naive head tracks targets quickly, so the asymmetric loss
            // stays in its stable range
            return pde ? train::LossKind::LinexBound : train::LossKind::Rann;
        case MethodKind::MidIbp:
        case MethodKind::MidCrown:
            return train::LossKind::Midpoint;
        default:
            // bound-propagated outputs start far too wide for an exponential
            // penalty (overflow stalls Adam); fit bounds with the MSE form and
            // report the Linex metrics
            return train::LossKind::Bound;
    }
}

Recipe resolve_recipe(const ExperimentConfig& cfg, const std::string& problem,
                      MethodKind method) {
    Recipe r;
    if (problem == "reg1d") {
        r.epochs = 2000;
        r.learning_rate = 1e-3;
        if (method == MethodKind::Inn) r.learning_rate = 5e-3;
    } else if (problem == "pde1d") {
        r.learning_rate = 2e-3;
        switch (method) {
            case MethodKind::Naive:
                r.epochs = 400;
                r.batch_functions = 100;
                break;
            case MethodKind::Crown:
            case MethodKind::MidCrown:
                r.epochs = 150;
                r.batch_functions = 64;
                break;
            case MethodKind::Inn:
                r.epochs = 150;
                r.batch_functions = 32;
                break;
            default:  // ibp, mid-ibp
                r.epochs = 400;
                r.batch_functions = 100;
                break;
        }
    } else {  // pde2d
        r.learning_rate = 1e-3;
        r.epochs = 150;
        r.batch_functions = 16;
    }
    const std::string key = problem + "/" + train::method_name(method);
    for (const auto& [k, rec] : cfg.recipes)
        if (k == key) {
            Recipe merged = rec;
            if (!merged.loss) merged.loss = default_loss(problem, method);
            return merged;
        }
    r.loss = default_loss(problem, method);
    return r;
}

namespace {

void from_json_recipe(const json& j, Recipe& r) {
    if (j.contains("learning_rate")) r.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("epochs")) r.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("batch_functions")) r.batch_functions = j["batch_functions"].get<std::size_t>();
    if (j.contains("lambda")) r.lambda = j["lambda"].get<double>();
    if (j.contains("linex_a")) r.linex_a = j["linex_a"].get<double>();
    if (j.contains("loss")) r.loss = train::loss_from_name(j["loss"].get<std::string>());
}

void from_json_pde(const json& j, PdeConfig& p) {
    if (j.contains("n_samples")) p.n_samples = j["n_samples"].get<std::size_t>();
    if (j.contains("n_train_pool")) p.n_train_pool = j["n_train_pool"].get<std::size_t>();
    if (j.contains("n_val")) p.n_val = j["n_val"].get<std::size_t>();
    if (j.contains("n_test")) p.n_test = j["n_test"].get<std::size_t>();
    if (j.contains("width_min")) p.width_min = j["width_min"].get<double>();
    if (j.contains("width_max")) p.width_max = j["width_max"].get<double>();
    if (j.contains("cluster_sizes"))
        p.cluster_sizes = j["cluster_sizes"].get<std::vector<std::size_t>>();
}

void from_json_arch(const json& j, train::OperatorArch& a) {
    if (j.contains("q")) a.q = j["q"].get<std::size_t>();
    if (j.contains("branch_hidden"))
        a.branch_hidden = j["branch_hidden"].get<std::vector<std::size_t>>();
    if (j.contains("trunk_hidden"))
        a.trunk_hidden = j["trunk_hidden"].get<std::vector<std::size_t>>();
    if (j.contains("inn_radius_frac")) a.inn_radius_frac = j["inn_radius_frac"].get<double>();
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    ExperimentConfig cfg = default_config();
    json j;
    try {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open config file: " + path);
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    try {
        if (j.contains("problem")) cfg.problem = j["problem"].get<std::string>();
        if (j.contains("setting")) cfg.setting = j["setting"].get<std::string>();
        if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
        if (j.contains("n_train")) cfg.n_train = j["n_train"].get<std::vector<std::size_t>>();
        if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("data_seed")) cfg.data_seed = j["data_seed"].get<std::uint64_t>();
        if (j.contains("workers")) cfg.workers = j["workers"].get<std::size_t>();
        if (j.contains("data_root")) cfg.data_root = j["data_root"].get<std::string>();
        if (j.contains("out_root")) cfg.out_root = j["out_root"].get<std::string>();
        if (j.contains("reg1d")) {
            const json& r = j["reg1d"];
            if (r.contains("pool_size")) cfg.reg1d.pool_size = r["pool_size"].get<std::size_t>();
            if (r.contains("test_size")) cfg.reg1d.test_size = r["test_size"].get<std::size_t>();
            if (r.contains("pointwise_pool"))
                cfg.reg1d.pointwise_pool = r["pointwise_pool"].get<std::size_t>();
            if (r.contains("width_min")) cfg.reg1d.width_min = r["width_min"].get<double>();
            if (r.contains("width_max")) cfg.reg1d.width_max = r["width_max"].get<double>();
            if (r.contains("noise_std")) cfg.reg1d.noise_std = r["noise_std"].get<double>();
            if (r.contains("noise_margin_sigmas"))
                cfg.reg1d.noise_margin_sigmas = r["noise_margin_sigmas"].get<double>();
            if (r.contains("grid_resolutions"))
                cfg.reg1d.grid_resolutions = r["grid_resolutions"].get<std::vector<double>>();
        }
        if (j.contains("pde1d")) from_json_pde(j["pde1d"], cfg.pde1d);
        if (j.contains("pde2d")) from_json_pde(j["pde2d"], cfg.pde2d);
        if (j.contains("reg_arch") && j["reg_arch"].contains("hidden"))
            cfg.reg_arch.hidden = j["reg_arch"]["hidden"].get<std::vector<std::size_t>>();
        if (j.contains("pde1d_arch")) from_json_arch(j["pde1d_arch"], cfg.pde1d_arch);
        if (j.contains("pde2d_arch")) from_json_arch(j["pde2d_arch"], cfg.pde2d_arch);
        if (j.contains("optprop")) {
            const json& o = j["optprop"];
            if (o.contains("multistarts")) cfg.optprop.multistarts = o["multistarts"].get<std::size_t>();
            if (o.contains("max_evals")) cfg.optprop.max_evals = o["max_evals"].get<std::size_t>();
        }
        if (j.contains("recipes")) {
            for (const auto& [prob, methods] : j["recipes"].items()) {
                for (const auto& [meth, body] : methods.items()) {
                    Recipe r = resolve_recipe(cfg, prob, train::method_from_name(meth));
                    from_json_recipe(body, r);
                    cfg.recipes.emplace_back(prob + "/" + meth, r);
                }
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("config field error in " + path + ": " + e.what());
    }
    if (const char* env_root = std::getenv("IVPROP_DATA_ROOT")) cfg.data_root = env_root;
    if (cfg.problem != "reg1d" && cfg.problem != "pde1d" && cfg.problem != "pde2d")
        throw ConfigError("unknown problem '" + cfg.problem + "'");
    if (cfg.setting != "ideal" && cfg.setting != "augmented")
        throw ConfigError("unknown setting '" + cfg.setting + "'");
    for (const std::string& m : cfg.methods) train::method_from_name(m);  // validates
    return cfg;
}

// --- bundles ---

Reg1dBundle build_reg1d_bundle(const ExperimentConfig& cfg, bool with_augmented) {
    Reg1dBundle b;
    const Reg1dConfig& rc = cfg.reg1d;
    gen::IdealReg1dConfig icfg;
    icfg.width_min = rc.width_min;
    icfg.width_max = rc.width_max;
    icfg.noise_std = rc.noise_std;
    icfg.noise_margin_sigmas = rc.noise_margin_sigmas;

    gen::Reg1dConfig pool_pts{rc.pool_size, derive_seed(cfg.data_seed, 11), rc.noise_std};
    icfg.seed = derive_seed(cfg.data_seed, 12);
    b.pool = gen::build_ideal_intervals_reg1d(gen_1d_regression(pool_pts), icfg);

    gen::Reg1dConfig test_pts{rc.test_size, derive_seed(cfg.data_seed, 21), rc.noise_std};
    icfg.seed = derive_seed(cfg.data_seed, 22);
    b.test = gen::build_ideal_intervals_reg1d(gen_1d_regression(test_pts), icfg);

    if (with_augmented) {
        gen::Reg1dConfig pw{rc.pointwise_pool, derive_seed(cfg.data_seed, 31), rc.noise_std};
        b.pointwise = gen_1d_regression(pw);
        aug::GridAugConfig gc;
        gc.resolutions = rc.grid_resolutions;
        b.augmented = aug::grid_intervals(b.pointwise, gc);
    }
    return b;
}

PdeBundle build_pde_bundle(const ExperimentConfig& cfg, bool pde2d, bool with_augmented) {
    const PdeConfig& pc = pde2d ? cfg.pde2d : cfg.pde1d;
    if (pc.n_train_pool + pc.n_val + pc.n_test > pc.n_samples)
        throw ConfigError("pde split exceeds n_samples");
    gen::PdeDatasetConfig gcfg;
    gcfg.n_samples = pc.n_samples;
    gcfg.seed = derive_seed(cfg.data_seed, pde2d ? 52 : 51);
    const data::FunctionDataset all = pde2d ? gen::gen_pde2d(gcfg) : gen::gen_pde1d(gcfg);

    auto slice = [&](std::size_t from, std::size_t count) {
        data::FunctionDataset d;
        d.coords = all.coords;
        d.samples.assign(all.samples.begin() + from, all.samples.begin() + from + count);
        return d;
    };
    const data::FunctionDataset train_pw = slice(0, pc.n_train_pool);
    const data::FunctionDataset val_pw = slice(pc.n_train_pool, pc.n_val);
    const data::FunctionDataset test_pw = slice(pc.n_train_pool + pc.n_val, pc.n_test);

    PdeBundle b;
    const std::uint64_t wseed = derive_seed(cfg.data_seed, pde2d ? 62 : 61);
    b.train_pool = gen::build_ideal_intervals_pde(train_pw, pc.width_min, pc.width_max,
                                                  derive_seed(wseed, 1), pde2d)
                       .dataset;
    b.val = gen::build_ideal_intervals_pde(val_pw, pc.width_min, pc.width_max,
                                           derive_seed(wseed, 2), pde2d)
                .dataset;
    b.test = gen::build_ideal_intervals_pde(test_pw, pc.width_min, pc.width_max,
                                            derive_seed(wseed, 3), pde2d)
                 .dataset;
    b.pointwise_pool = train_pw;

    if (with_augmented) {
        data::PointDataset pts;
        pts.inputs = train_pw.sensor_matrix();
        pts.outputs = train_pw.value_matrix();
        aug::ClusterAugConfig cc;
        cc.cluster_counts = aug::cluster_counts_from_sizes(pts.size(), pc.cluster_sizes);
        cc.seed = derive_seed(cfg.data_seed, pde2d ? 72 : 71);
        const data::IntervalDataset ds = aug::cluster_intervals(pts, cc);
        b.augmented.sensors = ds.inputs;
        b.augmented.values = ds.outputs;
        b.augmented.coords = all.coords;
    }
    return b;
}

data::IntervalDataset subsample(const data::IntervalDataset& pool, std::size_t n,
                                std::uint64_t seed) {
    const std::size_t total = pool.size();
    if (n > total)
        throw ConfigError("subsample: n_train " + std::to_string(n) + " exceeds pool " +
                          std::to_string(total));
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    const std::size_t d = pool.inputs.lo.shape[1], m = pool.outputs.lo.shape[1];
    data::IntervalDataset out;
    out.inputs.lo = Tensor::zeros({n, d});
    out.inputs.hi = Tensor::zeros({n, d});
    out.outputs.lo = Tensor::zeros({n, m});
    out.outputs.hi = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(pool.inputs.lo.row_ptr(idx[i]), pool.inputs.lo.row_ptr(idx[i]) + d,
                  out.inputs.lo.row_ptr(i));
        std::copy(pool.inputs.hi.row_ptr(idx[i]), pool.inputs.hi.row_ptr(idx[i]) + d,
                  out.inputs.hi.row_ptr(i));
        std::copy(pool.outputs.lo.row_ptr(idx[i]), pool.outputs.lo.row_ptr(idx[i]) + m,
                  out.outputs.lo.row_ptr(i));
        std::copy(pool.outputs.hi.row_ptr(idx[i]), pool.outputs.hi.row_ptr(idx[i]) + m,
                  out.outputs.hi.row_ptr(i));
    }
    return out;
}

data::IntervalFunctionDataset subsample(const data::IntervalFunctionDataset& pool, std::size_t n,
                                        std::uint64_t seed) {
    data::IntervalDataset as_ds{pool.sensors, pool.values};
    const data::IntervalDataset picked = subsample(as_ds, n, seed);
    return {picked.inputs, picked.outputs, pool.coords};
}

// --- cells ---

namespace {

train::TrainConfig make_train_cfg(const Recipe& r, train::LossKind fallback_loss,
                                  std::uint64_t seed) {
    train::TrainConfig tc;
    tc.learning_rate = r.learning_rate;
    tc.epochs = r.epochs;
    tc.batch_functions = r.batch_functions;
    tc.seed = seed;
    tc.loss = r.loss.value_or(fallback_loss);
    tc.loss_cfg.lambda = r.lambda;
    tc.loss_cfg.linex_a = r.linex_a;
    return tc;
}

ResultRow make_row(const ExperimentConfig& cfg, MethodKind method, std::size_t n_train,
                   std::uint64_t seed) {
    ResultRow row;
    row.method = train::method_name(method);
    row.problem = cfg.problem;
    row.setting = cfg.setting;
    row.n_train = n_train;
    row.seed = seed;
    return row;
}

std::uint64_t cell_seed(const ExperimentConfig& cfg, std::size_t n_train, std::uint64_t seed) {
    return derive_seed(derive_seed(cfg.data_seed, n_train), seed);
}

}  // namespace

ResultRow run_reg1d_cell(const ExperimentConfig& cfg, const Reg1dBundle& bundle,
                         MethodKind method, std::size_t n_train, std::uint64_t seed) {
    ResultRow row = make_row(cfg, method, n_train, seed);
    const bool augmented = cfg.setting == "augmented";
    const data::IntervalDataset train_set =
        subsample(augmented ? bundle.augmented : bundle.pool, n_train, cell_seed(cfg, n_train, seed));
    const Recipe recipe = resolve_recipe(cfg, cfg.problem, method);
    const train::TrainConfig tc = make_train_cfg(recipe, default_loss(cfg.problem, method), seed);

    if (method == MethodKind::OptProp) {
        // surrogate data: interval centers in the ideal setting, raw points in
        // the augmented one
        data::PointDataset centers;
        if (augmented) {
            const std::size_t total = bundle.pointwise.size();
            const std::size_t n = std::min(n_train, total);
            std::vector<std::size_t> idx(total);
            std::iota(idx.begin(), idx.end(), 0);
            Rng rng = make_rng(cell_seed(cfg, n_train, seed));
            std::shuffle(idx.begin(), idx.end(), rng);
            centers.inputs = Tensor::zeros({n, 1});
            centers.outputs = Tensor::zeros({n, 1});
            for (std::size_t i = 0; i < n; ++i) {
                centers.inputs.at(i, 0) = bundle.pointwise.inputs.at(idx[i], 0);
                centers.outputs.at(i, 0) = bundle.pointwise.outputs.at(idx[i], 0);
            }
        } else {
            const std::size_t n = train_set.size();
            centers.inputs = Tensor::zeros({n, 1});
            centers.outputs = Tensor::zeros({n, 1});
            for (std::size_t i = 0; i < n; ++i) {
                centers.inputs.at(i, 0) =
                    0.5 * (train_set.inputs.lo.at(i, 0) + train_set.inputs.hi.at(i, 0));
                centers.outputs.at(i, 0) =
                    0.5 * (train_set.outputs.lo.at(i, 0) + train_set.outputs.hi.at(i, 0));
            }
        }
        std::vector<std::size_t> dims{1};
        dims.insert(dims.end(), cfg.reg_arch.hidden.begin(), cfg.reg_arch.hidden.end());
        dims.push_back(1);
        nn::MlpModel surrogate =
            nn::make_mlp(dims, nn::Activation::Relu, nn::Activation::Linear, seed);
        const double t0 = now_seconds();
        const train::TrainTrace trace = train::train_pointwise_mlp(surrogate, centers, tc);
        row.train_s = now_seconds() - t0;
        if (trace.failed) {
            row.failed = true;
            row.fail_reason = trace.fail_reason;
            return row;
        }
        obj::EvalArrays e;
        opt::CostCounter counter;
        const double t1 = now_seconds();
        for (std::size_t i = 0; i < bundle.test.size(); ++i) {
            const IntervalVector box = bundle.test.input_row(i);
            const Interval out = opt::opt_prop(surrogate, box, cfg.optprop, &counter);
            e.push(out.lo, out.hi, bundle.test.outputs.lo.at(i, 0), bundle.test.outputs.hi.at(i, 0));
        }
        row.infer_s = now_seconds() - t1;
        row.metrics = obj::evaluate_bounds(e, tc.loss_cfg.linex_a, tc.loss_cfg.cwc_delta,
                                           tc.loss_cfg.cwc_gamma);
        return row;
    }

    train::IntervalRegressor model = train::make_regressor(method, 1, cfg.reg_arch, seed);
    const double t0 = now_seconds();
    const train::TrainTrace trace = train::train_interval_regressor(model, train_set, tc);
    row.train_s = now_seconds() - t0;
    if (trace.failed) {
        row.failed = true;
        row.fail_reason = trace.fail_reason;
        return row;
    }
    const double t1 = now_seconds();
    const obj::EvalArrays e = train::eval_regressor(model, bundle.test);
    row.infer_s = now_seconds() - t1;
    row.metrics =
        obj::evaluate_bounds(e, tc.loss_cfg.linex_a, tc.loss_cfg.cwc_delta, tc.loss_cfg.cwc_gamma);
    return row;
}

ResultRow run_pde_cell(const ExperimentConfig& cfg, const PdeBundle& bundle, MethodKind method,
                       std::size_t n_train, std::uint64_t seed) {
    ResultRow row = make_row(cfg, method, n_train, seed);
    if (method == MethodKind::OptProp)
        throw ConfigError("opt-prop baseline is defined for reg1d only");
    const bool augmented = cfg.setting == "augmented";
    const data::IntervalFunctionDataset train_set = subsample(
        augmented ? bundle.augmented : bundle.train_pool, n_train, cell_seed(cfg, n_train, seed));
    const Recipe recipe = resolve_recipe(cfg, cfg.problem, method);
    const train::TrainConfig tc = make_train_cfg(recipe, default_loss(cfg.problem, method), seed);
    const train::OperatorArch& arch = cfg.problem == "pde2d" ? cfg.pde2d_arch : cfg.pde1d_arch;

    train::OperatorModel model = train::make_operator_model(
        method, train_set.sensors.lo.shape[1], train_set.coords.shape[1], arch, seed);
    const double t0 = now_seconds();
    const train::TrainTrace trace = train::train_operator_model(model, train_set, tc);
    row.train_s = now_seconds() - t0;
    if (trace.failed) {
        row.failed = true;
        row.fail_reason = trace.fail_reason;
        return row;
    }
    const double t1 = now_seconds();
    const obj::EvalArrays e = train::eval_operator(model, bundle.test);
    row.infer_s = now_seconds() - t1;
    row.metrics =
        obj::evaluate_bounds(e, tc.loss_cfg.linex_a, tc.loss_cfg.cwc_delta, tc.loss_cfg.cwc_gamma);
    return row;
}

std::vector<ResultRow> run_grid(const ExperimentConfig& cfg, const Reg1dBundle* reg,
                                const PdeBundle* pde) {
    struct Cell {
        MethodKind method;
        std::size_t n_train;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const std::string& m : cfg.methods)
        for (std::size_t n : cfg.n_train)
            for (std::uint64_t s : cfg.seeds) cells.push_back({train::method_from_name(m), n, s});

    std::vector<ResultRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    const std::size_t workers = std::max<std::size_t>(1, cfg.workers);
    std::vector<std::thread> pool;
    std::atomic<bool> had_error{false};
    std::string first_error;
    std::mutex err_mu;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                try {
                    rows[i] = reg ? run_reg1d_cell(cfg, *reg, cells[i].method, cells[i].n_train,
                                                   cells[i].seed)
                                  : run_pde_cell(cfg, *pde, cells[i].method, cells[i].n_train,
                                                 cells[i].seed);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!had_error.exchange(true)) first_error = e.what();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (had_error) throw std::runtime_error("run_grid: cell failed: " + first_error);
    return rows;
}

// --- results csv ---

void upsert_results_csv(const std::string& path, const std::vector<ResultRow>& new_rows) {
    std::vector<ResultRow> rows;
    if (fs::exists(path)) rows = read_results_csv(path);
    for (const ResultRow& nr : new_rows) {
        bool replaced = false;
        for (ResultRow& r : rows) {
            if (r.method == nr.method && r.problem == nr.problem && r.setting == nr.setting &&
                r.n_train == nr.n_train && r.seed == nr.seed) {
                r = nr;
                replaced = true;
                break;
            }
        }
        if (!replaced) rows.push_back(nr);
    }
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.method, a.n_train, a.seed) < std::tie(b.method, b.n_train, b.seed);
    });
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "method,problem,setting,n_train,seed,rmse_l,rmse_u,linex_l,linex_u,pinaw,picp,cwc,"
          "train_s,infer_s,failed\n";
    for (const ResultRow& r : rows) {
        os << r.method << ',' << r.problem << ',' << r.setting << ',' << r.n_train << ','
           << r.seed << ',';
        if (r.failed) {
            os << ",,,,,,,";  // metric columns stay empty for failed runs
        } else {
            os << fmt(r.metrics.rmse_l) << ',' << fmt(r.metrics.rmse_u) << ','
               << fmt(r.metrics.linex_l) << ',' << fmt(r.metrics.linex_u) << ','
               << fmt(r.metrics.pinaw) << ',' << fmt(r.metrics.picp) << ',' << fmt(r.metrics.cwc)
               << ',';
        }
        os << fmt(r.train_s) << ',' << fmt(r.infer_s) << ',' << (r.failed ? 1 : 0) << '\n';
    }
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(is, line);  // header
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        while (cells.size() < 15) cells.push_back("");
        ResultRow r;
        r.method = cells[0];
        r.problem = cells[1];
        r.setting = cells[2];
        r.n_train = std::stoul(cells[3]);
        r.seed = std::stoull(cells[4]);
        r.failed = cells[14] == "1";
        if (!r.failed && !cells[5].empty()) {
            r.metrics.rmse_l = std::stod(cells[5]);
            r.metrics.rmse_u = std::stod(cells[6]);
            r.metrics.linex_l = std::stod(cells[7]);
            r.metrics.linex_u = std::stod(cells[8]);
            r.metrics.pinaw = std::stod(cells[9]);
            r.metrics.picp = std::stod(cells[10]);
            r.metrics.cwc = std::stod(cells[11]);
        }
        if (!cells[12].empty()) r.train_s = std::stod(cells[12]);
        if (!cells[13].empty()) r.infer_s = std::stod(cells[13]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
    struct Key {
        std::string method;
        std::size_t n_train;
        bool operator<(const Key& o) const {
            return std::tie(method, n_train) < std::tie(o.method, o.n_train);
        }
    };
    std::map<Key, std::vector<const ResultRow*>> groups;
    for (const ResultRow& r : rows) groups[{r.method, r.n_train}].push_back(&r);

    const std::vector<std::pair<std::string, double obj::MetricReport::*>> metrics = {
        {"rmse_l", &obj::MetricReport::rmse_l}, {"rmse_u", &obj::MetricReport::rmse_u},
        {"linex_l", &obj::MetricReport::linex_l}, {"linex_u", &obj::MetricReport::linex_u},
        {"pinaw", &obj::MetricReport::pinaw},   {"picp", &obj::MetricReport::picp},
        {"cwc", &obj::MetricReport::cwc},
    };

    std::vector<AggregateRow> out;
    for (const auto& [key, group] : groups) {
        std::size_t failures = 0;
        for (const ResultRow* r : group)
            if (r->failed) ++failures;
        auto emit = [&](const std::string& name, auto getter) {
            AggregateRow a;
            a.method = key.method;
            a.n_train = key.n_train;
            a.metric = name;
            a.failures = failures;
            std::vector<double> vals;
            for (const ResultRow* r : group)
                if (!r->failed) vals.push_back(getter(*r));
            a.runs = vals.size();
            if (!vals.empty()) {
                a.mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
                         static_cast<double>(vals.size());
                double var = 0.0;
                for (double v : vals) var += (v - a.mean) * (v - a.mean);
                a.stddev = vals.size() > 1
                               ? std::sqrt(var / static_cast<double>(vals.size() - 1))
                               : 0.0;
            }
            out.push_back(std::move(a));
        };
        for (const auto& [name, member] : metrics)
            emit(name, [member](const ResultRow& r) { return r.metrics.*member; });
        emit("train_s", [](const ResultRow& r) { return r.train_s; });
        emit("infer_s", [](const ResultRow& r) { return r.infer_s; });
    }
    return out;
}

void write_report_csv(const std::string& path, const std::vector<AggregateRow>& agg) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "method,n_train,metric,mean,std,failures\n";
    for (const AggregateRow& a : agg) {
        os << a.method << ',' << a.n_train << ',' << a.metric << ',';
        if (a.runs == 0)
            os << ",";  // all runs failed: no mean/std, never NaN
        else
            os << fmt(a.mean) << ',' << fmt(a.stddev);
        os << ',' << a.failures << '\n';
    }
}

// --- CLI commands ---

namespace {

std::string model_path(const ExperimentConfig& cfg, const std::string& method, std::size_t n,
                       std::uint64_t seed) {
    return cfg.out_dir() + "/models/" + method + "_n" + std::to_string(n) + "_s" +
           std::to_string(seed) + ".model";
}

json meta_json(const ResultRow& row, const train::TrainTrace& trace) {
    json j;
    j["failed"] = trace.failed;
    j["fail_reason"] = trace.fail_reason;
    j["epochs_run"] = trace.epochs_run;
    j["train_s"] = row.train_s;
    return j;
}

void ensure_dirs(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.data_dir());
    fs::create_directories(cfg.out_dir() + "/models");
    fs::create_directories(cfg.out_dir() + "/traces");
}

}  // namespace

int cmd_gen_data(const ExperimentConfig& cfg) {
    ensure_dirs(cfg);
    json manifest;
    manifest["problem"] = cfg.problem;
    manifest["setting"] = cfg.setting;
    manifest["data_seed"] = cfg.data_seed;
    if (cfg.problem == "reg1d") {
        const Reg1dBundle b = build_reg1d_bundle(cfg, cfg.setting == "augmented");
        data::write_interval_csv(cfg.data_dir() + "/pool.csv", b.pool);
        data::write_interval_csv(cfg.data_dir() + "/test.csv", b.test);
        manifest["widths"] = {cfg.reg1d.width_min, cfg.reg1d.width_max};
        manifest["files"] = {"pool.csv", "test.csv"};
        if (cfg.setting == "augmented") {
            data::write_point_csv(cfg.data_dir() + "/pointwise.csv", b.pointwise);
            manifest["files"].push_back("pointwise.csv");
        }
    } else {
        const bool pde2d = cfg.problem == "pde2d";
        const PdeBundle b = build_pde_bundle(cfg, pde2d, false);
        data::write_interval_function_dataset(cfg.data_dir(), "train_pool", b.train_pool);
        data::write_interval_function_dataset(cfg.data_dir(), "val", b.val);
        data::write_interval_function_dataset(cfg.data_dir(), "test", b.test);
        data::write_function_dataset(cfg.data_dir(), "pointwise_pool", b.pointwise_pool);
        const PdeConfig& pc = pde2d ? cfg.pde2d : cfg.pde1d;
        manifest["widths"] = {pc.width_min, pc.width_max};
        manifest["grid"] = pde2d ? gen::kDarcyGrid : gen::kPdeSensors;
        manifest["splits"] = {{"train_pool", pc.n_train_pool}, {"val", pc.n_val},
                              {"test", pc.n_test}};
    }
    data::write_manifest(cfg.data_dir() + "/manifest.json", manifest.dump(2));
    std::cout << "gen-data: wrote " << cfg.data_dir() << "\n";
    return 0;
}

int cmd_augment(const ExperimentConfig& cfg) {
    ensure_dirs(cfg);
    if (cfg.setting != "augmented")
        throw ConfigError("augment: config setting must be 'augmented'");
    if (cfg.problem == "reg1d") {
        const data::PointDataset pts = data::read_point_csv(cfg.data_dir() + "/pointwise.csv");
        aug::GridAugConfig gc;
        gc.resolutions = cfg.reg1d.grid_resolutions;
        const data::IntervalDataset ds = aug::grid_intervals(pts, gc);
        data::write_interval_csv(cfg.data_dir() + "/augmented_pool.csv", ds);
        std::cout << "augment: " << ds.size() << " interval samples -> "
                  << cfg.data_dir() + "/augmented_pool.csv\n";
    } else {
        const data::FunctionDataset pw =
            data::read_function_dataset(cfg.data_dir(), "pointwise_pool");
        data::PointDataset pts;
        pts.inputs = pw.sensor_matrix();
        pts.outputs = pw.value_matrix();
        const PdeConfig& pc = cfg.problem == "pde2d" ? cfg.pde2d : cfg.pde1d;
        aug::ClusterAugConfig cc;
        cc.cluster_counts = aug::cluster_counts_from_sizes(pts.size(), pc.cluster_sizes);
        cc.seed = derive_seed(cfg.data_seed, cfg.problem == "pde2d" ? 72 : 71);
        const data::IntervalDataset ds = aug::cluster_intervals(pts, cc);
        data::IntervalFunctionDataset out{ds.inputs, ds.outputs, pw.coords};
        data::write_interval_function_dataset(cfg.data_dir(), "augmented_pool", out);
        std::cout << "augment: " << ds.size() << " interval samples -> " << cfg.data_dir()
                  << "/augmented_pool_*.csv\n";
    }
    return 0;
}

namespace {

Reg1dBundle load_reg1d_bundle(const ExperimentConfig& cfg) {
    Reg1dBundle b;
    b.pool = data::read_interval_csv(cfg.data_dir() + "/pool.csv");
    b.test = data::read_interval_csv(cfg.data_dir() + "/test.csv");
    if (cfg.setting == "augmented") {
        b.pointwise = data::read_point_csv(cfg.data_dir() + "/pointwise.csv");
        b.augmented = data::read_interval_csv(cfg.data_dir() + "/augmented_pool.csv");
    }
    return b;
}

PdeBundle load_pde_bundle(const ExperimentConfig& cfg) {
    PdeBundle b;
    b.train_pool = data::read_interval_function_dataset(cfg.data_dir(), "train_pool");
    b.test = data::read_interval_function_dataset(cfg.data_dir(), "test");
    if (cfg.setting == "augmented")
        b.augmented = data::read_interval_function_dataset(cfg.data_dir(), "augmented_pool");
    return b;
}

void save_cell_model(const ExperimentConfig& cfg, const std::string& mpath,
                     const train::IntervalRegressor& reg) {
    switch (reg.method) {
        case MethodKind::Naive: io::save_model(mpath, reg.rann); break;
        case MethodKind::Inn: io::save_model(mpath, reg.innm); break;
        default: io::save_model(mpath, reg.mlp); break;
    }
    (void)cfg;
}

void save_cell_model(const ExperimentConfig& cfg, const std::string& mpath,
                     const train::OperatorModel& op) {
    switch (op.method) {
        case MethodKind::Naive: io::save_model(mpath, op.naive); break;
        case MethodKind::Inn: io::save_model(mpath, op.innd); break;
        default: io::save_model(mpath, op.donet); break;
    }
    (void)cfg;
}

}  // namespace

int cmd_train(const ExperimentConfig& cfg) {
    ensure_dirs(cfg);
    const bool is_reg = cfg.problem == "reg1d";
    Reg1dBundle reg;
    PdeBundle pde;
    if (is_reg) reg = load_reg1d_bundle(cfg);
    else pde = load_pde_bundle(cfg);

    for (const std::string& ms : cfg.methods) {
        const MethodKind method = train::method_from_name(ms);
        if (method == MethodKind::OptProp) continue;  // handled by `baseline`
        for (std::size_t n : cfg.n_train) {
            for (std::uint64_t s : cfg.seeds) {
                const std::string mpath = model_path(cfg, ms, n, s);
                const std::string meta_path = mpath + ".meta.json";
                if (fs::exists(meta_path)) {
                    std::cout << "train: skip existing " << mpath << "\n";
                    continue;
                }
                const Recipe recipe = resolve_recipe(cfg, cfg.problem, method);
                const train::TrainConfig tc =
                    make_train_cfg(recipe, default_loss(cfg.problem, method), s);
                ResultRow row = make_row(cfg, method, n, s);
                train::TrainTrace trace;
                const double t0 = now_seconds();
                if (is_reg) {
                    const data::IntervalDataset tr = subsample(
                        cfg.setting == "augmented" ? reg.augmented : reg.pool, n,
                        cell_seed(cfg, n, s));
                    train::IntervalRegressor model =
                        train::make_regressor(method, 1, cfg.reg_arch, s);
                    trace = train::train_interval_regressor(model, tr, tc);
                    row.train_s = now_seconds() - t0;
                    if (!trace.failed) save_cell_model(cfg, mpath, model);
                } else {
                    const data::IntervalFunctionDataset tr = subsample(
                        cfg.setting == "augmented" ? pde.augmented : pde.train_pool, n,
                        cell_seed(cfg, n, s));
                    const train::OperatorArch& arch =
                        cfg.problem == "pde2d" ? cfg.pde2d_arch : cfg.pde1d_arch;
                    train::OperatorModel model = train::make_operator_model(
                        method, tr.sensors.lo.shape[1], tr.coords.shape[1], arch, s);
                    trace = train::train_operator_model(model, tr, tc);
                    row.train_s = now_seconds() - t0;
                    if (!trace.failed) save_cell_model(cfg, mpath, model);
                }
                train::write_loss_trace_csv(
                    cfg.out_dir() + "/traces/" + ms + "_n" + std::to_string(n) + "_s" +
                        std::to_string(s) + ".csv",
                    trace);
                std::ofstream meta(meta_path);
                meta << meta_json(row, trace).dump(2) << "\n";
                std::cout << "train: " << ms << " n=" << n << " seed=" << s
                          << (trace.failed ? " FAILED (" + trace.fail_reason + ")" : " ok")
                          << "\n";
            }
        }
    }
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg) {
    ensure_dirs(cfg);
    const bool is_reg = cfg.problem == "reg1d";
    Reg1dBundle reg;
    PdeBundle pde;
    if (is_reg) reg = load_reg1d_bundle(cfg);
    else pde = load_pde_bundle(cfg);

    std::vector<ResultRow> rows;
    std::size_t zero_width_total = 0;
    for (const std::string& ms : cfg.methods) {
        const MethodKind method = train::method_from_name(ms);
        if (method == MethodKind::OptProp) continue;
        for (std::size_t n : cfg.n_train) {
            for (std::uint64_t s : cfg.seeds) {
                const std::string mpath = model_path(cfg, ms, n, s);
                const std::string meta_path = mpath + ".meta.json";
                if (!fs::exists(meta_path))
                    throw std::runtime_error("evaluate: missing " + meta_path +
                                             " (run `train` first)");
                const json meta = json::parse(data::read_text_file(meta_path));
                ResultRow row = make_row(cfg, method, n, s);
                row.train_s = meta["train_s"].get<double>();
                if (meta["failed"].get<bool>()) {
                    row.failed = true;
                    row.fail_reason = meta["fail_reason"].get<std::string>();
                    rows.push_back(row);
                    continue;
                }
                obj::EvalArrays e;
                const double t0 = now_seconds();
                const Recipe recipe = resolve_recipe(cfg, cfg.problem, method);
                if (is_reg) {
                    train::IntervalRegressor model;
                    model.method = method;
                    if (method == MethodKind::Naive) model.rann = io::load_rann(mpath);
                    else if (method == MethodKind::Inn) model.innm = io::load_inn(mpath);
                    else model.mlp = io::load_mlp(mpath);
                    e = train::eval_regressor(model, reg.test);
                } else {
                    train::OperatorModel model;
                    model.method = method;
                    if (method == MethodKind::Naive) model.naive = io::load_naive_deeponet(mpath);
                    else if (method == MethodKind::Inn) model.innd = io::load_inn_deeponet(mpath);
                    else model.donet = io::load_deeponet(mpath);
                    e = train::eval_operator(model, pde.test);
                }
                row.infer_s = now_seconds() - t0;
                row.metrics = obj::evaluate_bounds(e, recipe.linex_a, 0.0, 5.0);
                zero_width_total += row.metrics.zero_width_excluded;
                rows.push_back(row);
            }
        }
    }
    upsert_results_csv(cfg.out_dir() + "/results.csv", rows);
    if (zero_width_total > 0)
        std::cerr << "evaluate: " << zero_width_total
                  << " zero-width targets excluded from pinaw/picp\n";
    std::cout << "evaluate: " << rows.size() << " rows -> " << cfg.out_dir() << "/results.csv\n";
    return 0;
}

int cmd_baseline(const ExperimentConfig& cfg) {
    ensure_dirs(cfg);
    if (cfg.problem != "reg1d")
        throw ConfigError("baseline: opt-prop runs on reg1d only (PDE cost is prohibitive)");
    const Reg1dBundle reg = load_reg1d_bundle(cfg);
    std::vector<ResultRow> rows;
    for (std::size_t n : cfg.n_train)
        for (std::uint64_t s : cfg.seeds)
            rows.push_back(run_reg1d_cell(cfg, reg, MethodKind::OptProp, n, s));
    upsert_results_csv(cfg.out_dir() + "/results.csv", rows);
    std::cout << "baseline: " << rows.size() << " rows -> " << cfg.out_dir() << "/results.csv\n";
    return 0;
}

int cmd_report(const ExperimentConfig& cfg, bool emit_plot_data) {
    const std::string results = cfg.out_dir() + "/results.csv";
    const std::vector<ResultRow> rows = read_results_csv(results);
    const std::vector<AggregateRow> agg = aggregate(rows);
    write_report_csv(cfg.out_dir() + "/report.csv", agg);
    std::cout << "report: " << agg.size() << " rows -> " << cfg.out_dir() << "/report.csv\n";

    if (emit_plot_data) {
        // bounds vs truth over the domain for the first seed / largest n_train
        const std::size_t n = *std::max_element(cfg.n_train.begin(), cfg.n_train.end());
        const std::uint64_t s = cfg.seeds.front();
        if (cfg.problem == "reg1d") {
            const Reg1dBundle reg = load_reg1d_bundle(cfg);
            for (const std::string& ms : cfg.methods) {
                const MethodKind method = train::method_from_name(ms);
                if (method == MethodKind::OptProp) continue;
                const std::string mpath = model_path(cfg, ms, n, s);
                if (!fs::exists(mpath)) continue;
                train::IntervalRegressor model;
                model.method = method;
                if (method == MethodKind::Naive) model.rann = io::load_rann(mpath);
                else if (method == MethodKind::Inn) model.innm = io::load_inn(mpath);
                else model.mlp = io::load_mlp(mpath);
                std::vector<double> lo, hi;
                model.predict(reg.test.inputs, lo, hi);
                std::ofstream os(cfg.out_dir() + "/plot_" + ms + ".csv");
                os << "x_lo,x_hi,pred_lo,pred_hi,true_lo,true_hi\n";
                for (std::size_t i = 0; i < reg.test.size(); ++i)
                    os << fmt(reg.test.inputs.lo.at(i, 0)) << ',' << fmt(reg.test.inputs.hi.at(i, 0))
                       << ',' << fmt(lo[i]) << ',' << fmt(hi[i]) << ','
                       << fmt(reg.test.outputs.lo.at(i, 0)) << ','
                       << fmt(reg.test.outputs.hi.at(i, 0)) << '\n';
            }
        } else {
            const PdeBundle pde = load_pde_bundle(cfg);
            for (const std::string& ms : cfg.methods) {
                const MethodKind method = train::method_from_name(ms);
                if (method == MethodKind::OptProp) continue;
                const std::string mpath = model_path(cfg, ms, n, s);
                if (!fs::exists(mpath)) continue;
                train::OperatorModel model;
                model.method = method;
                if (method == MethodKind::Naive) model.naive = io::load_naive_deeponet(mpath);
                else if (method == MethodKind::Inn) model.innd = io::load_inn_deeponet(mpath);
                else model.donet = io::load_deeponet(mpath);
                std::vector<double> lo, hi;
                const Tensor ulo = Tensor::vector(std::vector<double>(
                    pde.test.sensors.lo.row_ptr(0),
                    pde.test.sensors.lo.row_ptr(0) + pde.test.sensors.lo.shape[1]));
                const Tensor uhi = Tensor::vector(std::vector<double>(
                    pde.test.sensors.hi.row_ptr(0),
                    pde.test.sensors.hi.row_ptr(0) + pde.test.sensors.hi.shape[1]));
                model.predict_function(ulo, uhi, pde.test.coords, lo, hi);
                std::ofstream os(cfg.out_dir() + "/plot_" + ms + ".csv");
                os << "coord,pred_lo,pred_hi,true_lo,true_hi\n";
                for (std::size_t j = 0; j < lo.size(); ++j)
                    os << fmt(pde.test.coords.at(j, 0)) << ',' << fmt(lo[j]) << ',' << fmt(hi[j])
                       << ',' << fmt(pde.test.values.lo.at(0, j)) << ','
                       << fmt(pde.test.values.hi.at(0, j)) << '\n';
            }
        }
    }
    return 0;
}

}  // namespace ivp::exp
