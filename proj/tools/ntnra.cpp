#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ntnra/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Random access over non-terrestrial delays"};
    app.require_subcommand(1);

    std::string scenario;
    std::string out;
    std::uint64_t seed = 0;
    bool trace = false;
    bool gnuplot = false;
    std::string rtts;

    const auto add_common = [&](CLI::App* c, bool with_out) {
        c->add_option("scenario", scenario, "scenario file")->required();
        if (with_out) c->add_option("--out", out, "output CSV (relative paths honour $NTNRA_OUTPUT_DIR)");
        c->add_option("--seed", seed, "override the scenario seed");
    };

    auto* run = app.add_subcommand("run", "single run, KPI CSV");
    add_common(run, true);
    run->add_flag("--trace", trace, "also write the message trace");

    auto* sweep = app.add_subcommand("sweep", "access-time or coverage sweep");
    add_common(sweep, true);
    sweep->add_flag("--gnuplot", gnuplot, "write a gnuplot script next to the CSV");
    sweep->add_option("--rtt-list", rtts, "comma separated RTTs in ms, replaces the file's sweep");

    auto* ladder = app.add_subcommand("ladder", "enable the fixes one by one");
    add_common(ladder, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ntnra::cli::kConfigError;
    }

    ntnra::cli::Options opt;
    if (app.got_subcommand(run) ? run->count("--seed") : app.got_subcommand(sweep) ? sweep->count("--seed") : ladder->count("--seed"))
        opt.seed = seed;
    opt.trace = trace;
    opt.gnuplot = gnuplot;
    if (!rtts.empty()) opt.rtt_list = rtts;

    if (app.got_subcommand(run)) return ntnra::cli::cmd_run(scenario, out, opt, std::cout, std::cerr);
    if (app.got_subcommand(sweep)) return ntnra::cli::cmd_sweep(scenario, out, opt, std::cout, std::cerr);
    return ntnra::cli::cmd_ladder(scenario, opt, std::cout, std::cerr);
}
