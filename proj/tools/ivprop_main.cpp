#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "ivprop/experiment.hpp"

// Experiment CLI. Exit codes: 0 success, 2 config error, 3 run failure.

namespace {

struct CommonOpts {
    std::string config_path;
    std::string problem, setting;
    std::vector<std::string> methods;
    std::vector<std::size_t> n_train;
    std::vector<std::uint64_t> seeds;
    std::size_t workers = 0;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config_path, "experiment config JSON")->required();
    sub->add_option("--problem", o.problem, "override: reg1d | pde1d | pde2d");
    sub->add_option("--setting", o.setting, "override: ideal | augmented");
    sub->add_option("--methods", o.methods, "override method list");
    sub->add_option("--n-train", o.n_train, "override training set sizes");
    sub->add_option("--seeds", o.seeds, "override seed list");
    sub->add_option("--workers", o.workers, "override worker count");
}

ivp::exp::ExperimentConfig resolve(const CommonOpts& o) {
    ivp::exp::ExperimentConfig cfg = ivp::exp::load_config(o.config_path);
    if (!o.problem.empty()) cfg.problem = o.problem;
    if (!o.setting.empty()) cfg.setting = o.setting;
    if (!o.methods.empty()) cfg.methods = o.methods;
    if (!o.n_train.empty()) cfg.n_train = o.n_train;
    if (!o.seeds.empty()) cfg.seeds = o.seeds;
    if (o.workers) cfg.workers = o.workers;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interval uncertainty propagation experiments"};
    app.require_subcommand(1);

    CommonOpts o;
    bool emit_plot_data = false;
    CLI::App* c_gen = app.add_subcommand("gen-data", "generate dataset files");
    CLI::App* c_aug = app.add_subcommand("augment", "build interval data from pointwise data");
    CLI::App* c_train = app.add_subcommand("train", "train models over the experiment grid");
    CLI::App* c_eval = app.add_subcommand("evaluate", "evaluate trained models on the test set");
    CLI::App* c_base = app.add_subcommand("baseline", "run the Opt-Prop baseline");
    CLI::App* c_rep = app.add_subcommand("report", "aggregate results (mean +- std, failures)");
    for (CLI::App* sub : {c_gen, c_aug, c_train, c_eval, c_base, c_rep}) add_common(sub, o);
    c_rep->add_flag("--emit-plot-data", emit_plot_data, "write bounds-vs-truth plot CSVs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        const ivp::exp::ExperimentConfig cfg = resolve(o);
        if (c_gen->parsed()) return ivp::exp::cmd_gen_data(cfg);
        if (c_aug->parsed()) return ivp::exp::cmd_augment(cfg);
        if (c_train->parsed()) return ivp::exp::cmd_train(cfg);
        if (c_eval->parsed()) return ivp::exp::cmd_evaluate(cfg);
        if (c_base->parsed()) return ivp::exp::cmd_baseline(cfg);
        if (c_rep->parsed()) return ivp::exp::cmd_report(cfg, emit_plot_data);
    } catch (const ivp::exp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
