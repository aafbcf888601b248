#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qsd/grid.hpp"
#include "qsd/kernel.hpp"
#include "qsd/monte_carlo.hpp"
#include "qsd/qsd_engine.hpp"

namespace qsd::cli {

/// Exit-code taxonomy shared by every subcommand.
enum ExitCode : int {
    kOk = 0,
    kConfigError = 1,
    kNotConverged = 2,
    kConditionFailed = 3,
    kTheoremViolated = 4,
};

using KeyValues = std::map<std::string, std::string>;

/// Fully resolved, validated configuration of one run.
struct RunConfig {
    std::string command;
    /// Preset name, or "inline" for an explicit phi/innovation pair.
    std::string model;
    MultiplicativeKernel kernel{PhiFunction::max_one(), InnovationDistribution::lognormal(0.0, 1.0), 0.0};
    /// Required except by check-conditions, whose scans do not involve A.
    std::optional<double> threshold;
    GridTemplate grid;
    YaglomOptions yaglom;
    McOptions mc;
    std::vector<double> y_factors{1.0, 2.0, 4.0, 8.0};
    std::optional<double> couple;
    std::size_t couple_paths = 10'000;
    std::size_t couple_steps = 100;
    bool sweep_mc = false;
    std::string out = "qsd";

    /// Canonical key=value pairs in fixed order; feeding them back through
    /// resolve_config reproduces this config exactly.
    std::vector<std::pair<std::string, std::string>> manifest() const;
};

/// Keys accepted in config files and manifests.
const std::vector<std::string>& config_keys();

/// Flat key=value text; '#' starts a comment line, blank lines are skipped.
KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::string& path);

/// Merges file values with flag values (flags win) and validates everything
/// against the preconditions of the operations they feed. Throws ConfigError.
RunConfig resolve_config(const std::string& command, const KeyValues& file_values,
                         const KeyValues& flag_values);

std::vector<double> parse_y_factors(const std::string& text);
PhiFunction parse_phi(const std::string& text);
InnovationDistribution parse_innovation(const std::string& text);
GridTemplate parse_grid(const std::string& text);

int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_check_conditions(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Resolves the configuration and dispatches; maps failures onto exit codes.
int run_command(const std::string& command, const KeyValues& flag_values,
                const std::optional<std::string>& config_path, std::ostream& out, std::ostream& err);

/// Write-to-temporary then rename, so readers never see partial files.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace qsd::cli
