#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qsd/cli.hpp"

namespace {

struct FlagSpec {
    const char* flag;
    const char* key;
    const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"--model", "model", "preset: ewma | shiryaev-roberts | cusum (or 'inline')"},
    {"--phi", "phi", "power:<alpha> | affine:<a> | max-one"},
    {"--innovation", "innovation", "lognormal:<mu>:<sigma> | lr-gaussian:<theta>:pre|post"},
    {"--A", "threshold", "threshold A (sweep: base threshold)"},
    {"--grid", "grid", "kind:n[:lower], kind = uniform | geometric"},
    {"--tol", "tol", "Yaglom L1 tolerance"},
    {"--max-iter", "max_iter", "Yaglom iteration cap"},
    {"--reps", "reps", "Monte Carlo replications"},
    {"--seed", "seed", "64-bit seed"},
    {"--step-cap", "step_cap", "per-replication step cap"},
    {"--y-factors", "y_factors", "comma-separated sweep factors starting at 1"},
    {"--couple", "couple", "scale factor y for the coupling simulation"},
    {"--paths", "paths", "coupling paths"},
    {"--steps", "steps", "coupling steps per path"},
    {"--mc", "mc", "sweep: also run Monte Carlo per row (true|false)"},
    {"--out", "out", "output path prefix"},
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Quasistationary distributions and exit times of multiplicative Markov chains"};
    app.require_subcommand(1);

    struct Parsed {
        std::string values[std::size(kFlags)];
        std::optional<std::string> config;
    };
    Parsed parsed;

    const char* commands[][2] = {
        {"solve", "compute Q_A, lambda and E T on a grid"},
        {"check-conditions", "scan the monotonicity conditions of the kernel"},
        {"simulate", "Monte Carlo exit times from Q_A (optionally the coupling check)"},
        {"sweep", "threshold sweep A, 2A, 4A, ... with monotonicity and dominance checks"},
    };
    std::vector<CLI::App*> subs;
    std::vector<std::vector<CLI::Option*>> options;
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        std::vector<CLI::Option*> opts;
        for (std::size_t i = 0; i < std::size(kFlags); ++i) {
            opts.push_back(sub->add_option(kFlags[i].flag, parsed.values[i], kFlags[i].help));
        }
        sub->add_option_function<std::string>(
            "--config", [&parsed](const std::string& p) { parsed.config = p; },
            "key=value config file or manifest; flags override it");
        subs.push_back(sub);
        options.push_back(std::move(opts));
    }

    CLI11_PARSE(app, argc, argv);

    for (std::size_t s = 0; s < subs.size(); ++s) {
        if (!subs[s]->parsed()) {
            continue;
        }
        qsd::cli::KeyValues flags;
        for (std::size_t i = 0; i < std::size(kFlags); ++i) {
            if (options[s][i]->count() > 0) {
                flags[kFlags[i].key] = parsed.values[i];
            }
        }
        return qsd::cli::run_command(subs[s]->get_name(), flags, parsed.config, std::cout, std::cerr);
    }
    return qsd::cli::kConfigError;
}
