// dgplace: power flow, DG benefit indices and GA placement studies.

#include <CLI11.hpp>
#include <iostream>

#include "dgplace/study.hpp"

int main(int argc, char** argv) {
    dgplace::study::CliOptions opts;
    CLI::App app{"DG placement and sizing studies on distribution feeders"};
    app.set_version_flag("--version", "dgplace " DGPLACE_VERSION);
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--feeder", opts.feeder, "feeder file");
        sub->add_option("--config", opts.config, "study config file");
        sub->add_option("--out", opts.out, "output directory (default: out)");
        sub->add_option("--weights", opts.weights, "index weights bw_vpi,bw_llr,bw_ltap");
        sub->add_option("--fitness-mode", opts.fitness_mode, "as-written or consistent");
    };

    auto* solve = app.add_subcommand("solve", "power flow of the feeder without DG");
    add_common(solve);
    auto* compare = app.add_subcommand("compare", "with/without-DG report for a fixed plan");
    add_common(compare);
    compare->add_option("--plan", opts.plan, "plan file, or inline bus:p_mw:q_mvar;...");
    auto* optimize = app.add_subcommand("optimize", "GA search for the best plan");
    add_common(optimize);
    auto* seed_opt = optimize->add_option("--seed", seed, "RNG seed (overrides the config)");
    auto* sweep = app.add_subcommand("sweep", "exhaustive scan of the GA decision space");
    add_common(sweep);
    auto* validate = app.add_subcommand("validate", "check feeder, plan and config without solving");
    add_common(validate);
    validate->add_option("--plan", opts.plan, "plan file, or inline bus:p_mw:q_mvar;...");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    opts.command = app.get_subcommands().front()->get_name();
    if (seed_opt->count() > 0) opts.seed = seed;
    return dgplace::study::run(opts, std::cout, std::cerr);
}
