#include <iostream>

#include <CLI11.hpp>

#include "wplap/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Weighted p-Laplacian solver and hypothesis certificate"};
    app.require_subcommand(1);
    std::string config;
    wplap::CommandOptions opt;
    double lambda = 0.0, mu = 0.0;
    unsigned seed = 42;

    for (const auto& [name, help] : {std::pair{"check", "Evaluate the hypothesis certificate"},
                                     std::pair{"solve", "Find critical points at one (lambda, mu)"},
                                     std::pair{"scan", "Solve on the configured (lambda, mu) grid"},
                                     std::pair{"oracle", "Enumerate 1D solutions by shooting"}}) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "Run configuration file")->required();
        sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
        sub->add_option("--lambda", lambda, "Override lambda");
        sub->add_option("--mu", mu, "Override mu");
        sub->add_option("--seed", seed, "Random seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wplap::exit_codes::config_error;
    }
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--lambda")) opt.lambda = lambda;
    if (sub->count("--mu")) opt.mu = mu;
    if (sub->count("--seed")) opt.seed = seed;
    return wplap::run_command(sub->get_name(), config, opt);
}
