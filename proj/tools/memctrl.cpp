#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "memctrl/error.hpp"
#include "memctrl/experiments.hpp"

#ifndef MEMCTRL_PRESET_DIR
#define MEMCTRL_PRESET_DIR "presets"
#endif

int main(int argc, char** argv) {
    using namespace memctrl;

    CLI::App app{"Approximate-controllability experiments for impulsive neutral equations with fading memory"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    bool timing = false;

    const char* names[] = {"resolvent", "gramian", "limit", "steer", "sweep", "paper-demo"};
    const char* help[] = {"build the resolvent family and report identity residuals",
                          "assemble the Gramian blocks and report positivity",
                          "regularized solutions x_alpha(h) over the alpha list",
                          "one fixed-point steering run (--alpha, default: smallest alpha)",
                          "terminal error over the alpha list",
                          "the reference preset end to end"};
    std::vector<CLI::App*> subs;
    for (int i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], help[i]);
        CLI::Option* cfg = sub->add_option("--config", config_path, "TOML configuration file");
        if (std::string(names[i]) != "paper-demo") cfg->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--alpha", alpha, "regularization parameter");
        sub->add_option("--seed", seed, "seed recorded in output metadata");
        sub->add_flag("--timing", timing, "record measured wall time in CSV outputs");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(kValidation);
    }

    std::string name;
    for (CLI::App* sub : subs) {
        if (sub->parsed()) name = sub->get_name();
    }

    RunOptions opts;
    opts.out_dir = out_dir;
    opts.seed = seed;
    opts.timing = timing;
    for (CLI::App* sub : subs) {
        if (sub->parsed() && sub->count("--alpha")) opts.alpha = alpha;
    }

    RunConfig cfg;
    try {
        if (config_path.empty()) config_path = std::string(MEMCTRL_PRESET_DIR) + "/paper_demo.toml";
        cfg = load_config(config_path);
        opts.threads = thread_budget();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
    return run_subcommand(name, cfg, opts, std::cout, std::cerr);
}
