#include "qsd/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "qsd/conditions.hpp"
#include "qsd/errors.hpp"
#include "qsd/experiments.hpp"
#include "qsd/format.hpp"

namespace qsd::cli {

namespace {

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& field, const std::string& text)
{
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ConfigError(field, "'" + text + "' is not a finite number");
    }
    return v;
}

std::uint64_t parse_count(const std::string& field, const std::string& text)
{
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec == std::errc{} && ptr == end) {
        return v;
    }
    // Accept integral scientific notation such as 1e6.
    const double d = parse_real(field, text);
    if (d < 0.0 || d != std::floor(d) || d > 1.8e19) {
        throw ConfigError(field, "'" + text + "' is not a nonnegative integer");
    }
    return static_cast<std::uint64_t>(d);
}

bool parse_bool(const std::string& field, const std::string& text)
{
    if (text == "true" || text == "1" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "off") {
        return false;
    }
    throw ConfigError(field, "'" + text + "' is not a boolean");
}

std::string bool_text(bool v) { return v ? "true" : "false"; }

std::string grid_text(const GridTemplate& g)
{
    std::string s = to_string(g.kind) + ":" + std::to_string(g.n_cells);
    if (g.lower) {
        s += ":" + format_real(*g.lower);
    }
    return s;
}

std::string y_factors_text(const std::vector<double>& ys)
{
    std::string s;
    for (double y : ys) {
        if (!s.empty()) {
            s += ',';
        }
        s += format_real(y);
    }
    return s;
}

std::string kv_text(const std::vector<std::pair<std::string, std::string>>& pairs)
{
    std::string s;
    for (const auto& [k, v] : pairs) {
        s += k + "=" + v + "\n";
    }
    return s;
}

struct Solved {
    KilledKernel kk;
    QsdSolution sol;
    double conditioned_l1;
    double fundamental;
};

Solved solve_config(const RunConfig& c, double threshold)
{
    const auto grid = grid_for_threshold(c.grid, threshold, c.kernel.state_space_floor);
    Solved s{build_killed_kernel(c.kernel, threshold, grid), {}, std::nan(""), std::nan("")};
    s.sol = yaglom_iterate(s.kk, {}, c.yaglom);
    try {
        s.conditioned_l1 = l1_distance(stationary_of_conditioned(s.kk, c.yaglom).weights, s.sol.weights);
    } catch (const DegenerateKernelError&) {
    }
    try {
        s.fundamental = expected_exit_time_fundamental(s.kk, s.sol.weights);
    } catch (const SingularSystemError&) {
    }
    return s;
}

void write_manifest(const RunConfig& c) { write_file_atomic(c.out + ".manifest", kv_text(c.manifest())); }

std::string mc_result_text(const McEstimate& est, const GeometricFitReport* fit, const QsdSolution& sol)
{
    std::vector<std::pair<std::string, std::string>> kv{
        {"mean", format_real(est.mean)},
        {"stderr", format_real(est.std_error)},
        {"n_reps", std::to_string(est.n_reps)},
        {"seed", std::to_string(est.seed)},
        {"capped", std::to_string(est.capped)},
        {"histogram_overflow", std::to_string(est.histogram_overflow)},
        {"lambda", format_real(sol.lambda)},
        {"expected_exit_time", format_real(sol.expected_exit_time)},
        {"geometric_fit_passed", fit ? bool_text(fit->passed) : "false"},
        {"max_log_survival_deviation", fit ? format_real(fit->max_log_survival_deviation) : "nan"},
        {"max_standardized_deviation", fit ? format_real(fit->max_standardized_deviation) : "nan"},
    };
    return kv_text(kv);
}

std::string histogram_csv(const McEstimate& est)
{
    std::string s = "t,count\n";
    for (std::size_t t = 1; t <= est.histogram.size(); ++t) {
        s += std::to_string(t) + "," + std::to_string(est.histogram[t - 1]) + "\n";
    }
    return s;
}

} // namespace

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys{
        "command", "model", "phi",     "innovation", "threshold", "grid",  "tol",   "max_iter", "reps",
        "seed",    "step_cap", "y_factors", "couple", "paths",   "steps", "mc",    "out"};
    return keys;
}

std::vector<std::pair<std::string, std::string>> RunConfig::manifest() const
{
    return {
        {"command", command},
        {"model", model},
        {"phi", kernel.phi.describe()},
        {"innovation", kernel.innovation.describe()},
        {"threshold", threshold ? format_real(*threshold) : "none"},
        {"grid", grid_text(grid)},
        {"tol", format_real(yaglom.tol)},
        {"max_iter", std::to_string(yaglom.max_iter)},
        {"reps", std::to_string(mc.n_reps)},
        {"seed", std::to_string(mc.seed)},
        {"step_cap", std::to_string(mc.step_cap)},
        {"y_factors", y_factors_text(y_factors)},
        {"couple", couple ? format_real(*couple) : "none"},
        {"paths", std::to_string(couple_paths)},
        {"steps", std::to_string(couple_steps)},
        {"mc", bool_text(sweep_mc)},
        {"out", out},
    };
}

KeyValues parse_key_values(std::istream& in)
{
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config", "line " + std::to_string(lineno) + " is not key=value");
        }
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

KeyValues load_key_values(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config", "cannot open '" + path + "'");
    }
    return parse_key_values(in);
}

PhiFunction parse_phi(const std::string& text)
{
    const auto p = split(text, ':');
    try {
        if (p.size() == 1 && p[0] == "max-one") {
            return PhiFunction::max_one();
        }
        if (p.size() == 2 && p[0] == "power") {
            return PhiFunction::power(parse_real("phi", p[1]));
        }
        if (p.size() == 2 && p[0] == "affine") {
            return PhiFunction::affine(parse_real("phi", p[1]));
        }
    } catch (const DomainError& e) {
        throw ConfigError("phi", e.what());
    }
    throw ConfigError("phi", "'" + text + "' is not one of power:<alpha>, affine:<a>, max-one");
}

InnovationDistribution parse_innovation(const std::string& text)
{
    const auto p = split(text, ':');
    try {
        if (p.size() == 3 && p[0] == "lognormal") {
            return InnovationDistribution::lognormal(parse_real("innovation", p[1]),
                                                     parse_real("innovation", p[2]));
        }
        if (p.size() == 3 && p[0] == "lr-gaussian" && (p[2] == "pre" || p[2] == "post")) {
            return InnovationDistribution::likelihood_ratio_gaussian(
                parse_real("innovation", p[1]), p[2] == "pre" ? Measure::pre : Measure::post);
        }
    } catch (const DomainError& e) {
        throw ConfigError("innovation", e.what());
    }
    throw ConfigError("innovation", "'" + text +
                                        "' is not one of lognormal:<mu>:<sigma>, lr-gaussian:<theta>:pre|post");
}

GridTemplate parse_grid(const std::string& text)
{
    const auto p = split(text, ':');
    if (p.size() < 2 || p.size() > 3 || (p[0] != "uniform" && p[0] != "geometric")) {
        throw ConfigError("grid", "'" + text + "' is not kind:n[:lower] with kind uniform|geometric");
    }
    GridTemplate g;
    g.kind = p[0] == "uniform" ? GridKind::uniform : GridKind::geometric;
    g.n_cells = parse_count("grid", p[1]);
    if (g.n_cells < 2) {
        throw ConfigError("grid", "need at least 2 cells");
    }
    if (p.size() == 3) {
        g.lower = parse_real("grid", p[2]);
        if (*g.lower < 0.0 || (g.kind == GridKind::geometric && *g.lower <= 0.0)) {
            throw ConfigError("grid", "lower edge must be >= 0 (> 0 for geometric grids)");
        }
    }
    return g;
}

std::vector<double> parse_y_factors(const std::string& text)
{
    std::vector<double> ys;
    for (const auto& part : split(text, ',')) {
        ys.push_back(parse_real("y_factors", trim(part)));
    }
    if (ys.front() != 1.0) {
        throw ConfigError("y_factors", "must start at 1");
    }
    for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
        if (!(ys[i] < ys[i + 1])) {
            throw ConfigError("y_factors", "must be strictly increasing");
        }
    }
    return ys;
}

RunConfig resolve_config(const std::string& command, const KeyValues& file_values,
                         const KeyValues& flag_values)
{
    static const std::vector<std::string> commands{"solve", "check-conditions", "simulate", "sweep"};
    if (std::find(commands.begin(), commands.end(), command) == commands.end()) {
        throw ConfigError("command", "unknown command '" + command + "'");
    }
    KeyValues kv = file_values;
    for (const auto& [k, v] : flag_values) {
        kv[k] = v;
    }
    const auto& keys = config_keys();
    for (const auto& [k, v] : kv) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
            throw ConfigError(k, "unknown configuration key");
        }
    }
    if (auto it = kv.find("command"); it != kv.end() && it->second != command) {
        throw ConfigError("command", "config was written for '" + it->second + "', not '" + command + "'");
    }
    auto get = [&kv](const std::string& k) -> std::optional<std::string> {
        const auto it = kv.find(k);
        if (it == kv.end()) {
            return std::nullopt;
        }
        return it->second;
    };

    RunConfig c;
    c.command = command;

    std::optional<ModelPreset> preset;
    const auto model = get("model");
    if (model && *model != "inline") {
        preset = make_preset(*model);
        c.model = preset->name;
        c.kernel = preset->kernel;
    } else if (get("phi") && get("innovation")) {
        c.model = "inline";
    } else if (model) {
        throw ConfigError("model", "inline model needs both phi and innovation");
    } else {
        throw ConfigError("model", "missing model: give a preset or both phi and innovation");
    }
    if (const auto phi = get("phi")) {
        c.kernel.phi = parse_phi(*phi);
    }
    if (const auto innov = get("innovation")) {
        c.kernel.innovation = parse_innovation(*innov);
    }
    if (c.model == "inline") {
        // Power kernels have phi(0) = 0; keep grids off the origin.
        c.kernel.state_space_floor = std::holds_alternative<PhiFunction::Power>(c.kernel.phi.variant())
                                         ? std::numeric_limits<double>::min()
                                         : 0.0;
    }

    if (const auto a = get("threshold"); a && *a != "none") {
        c.threshold = parse_real("threshold", *a);
    } else if (preset) {
        c.threshold = preset->default_thresholds.front();
    } else if (command != "check-conditions") {
        throw ConfigError("threshold", "missing threshold A");
    }
    if (c.threshold && !(*c.threshold > 0.0)) {
        throw ConfigError("threshold", "A must be > 0");
    }
    if (c.threshold && preset && !(*c.threshold > preset->min_threshold)) {
        throw ConfigError("threshold", preset->name + " requires A > " + format_real(preset->min_threshold) +
                                           " (log A > 0)");
    }

    if (const auto g = get("grid")) {
        c.grid = parse_grid(*g);
    }
    if (c.grid.lower && c.threshold && !(*c.grid.lower < *c.threshold)) {
        throw ConfigError("grid", "lower edge must be below A");
    }
    if (c.grid.lower && *c.grid.lower < c.kernel.state_space_floor) {
        throw ConfigError("grid", "lower edge below the state-space floor");
    }

    if (const auto v = get("tol")) {
        c.yaglom.tol = parse_real("tol", *v);
        if (!(c.yaglom.tol > 0.0)) {
            throw ConfigError("tol", "must be > 0");
        }
    }
    if (const auto v = get("max_iter")) {
        c.yaglom.max_iter = parse_count("max_iter", *v);
        if (c.yaglom.max_iter < 1) {
            throw ConfigError("max_iter", "must be >= 1");
        }
    }
    if (const auto v = get("reps")) {
        c.mc.n_reps = parse_count("reps", *v);
    }
    if (c.mc.n_reps < 2) {
        throw ConfigError("reps", "need at least 2 replications");
    }
    if (const auto v = get("seed")) {
        c.mc.seed = parse_count("seed", *v);
    }
    if (const auto v = get("step_cap")) {
        c.mc.step_cap = parse_count("step_cap", *v);
        if (c.mc.step_cap < 1) {
            throw ConfigError("step_cap", "must be >= 1");
        }
    }
    if (const auto v = get("y_factors")) {
        c.y_factors = parse_y_factors(*v);
    }
    if (const auto v = get("couple"); v && *v != "none") {
        c.couple = parse_real("couple", *v);
        if (!(*c.couple >= 1.0)) {
            throw ConfigError("couple", "y must be >= 1");
        }
    }
    if (const auto v = get("paths")) {
        c.couple_paths = parse_count("paths", *v);
        if (c.couple_paths < 1) {
            throw ConfigError("paths", "must be >= 1");
        }
    }
    if (const auto v = get("steps")) {
        c.couple_steps = parse_count("steps", *v);
        if (c.couple_steps < 1) {
            throw ConfigError("steps", "must be >= 1");
        }
    }
    if (const auto v = get("mc")) {
        c.sweep_mc = parse_bool("mc", *v);
    }
    if (const auto v = get("out")) {
        c.out = *v;
    }
    if (c.out.empty()) {
        throw ConfigError("out", "output prefix must not be empty");
    }
    return c;
}

void write_file_atomic(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot write '" + tmp.string() + "'");
        }
        f << content;
        f.flush();
        if (!f) {
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, target);
}

int cmd_solve(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    const Solved s = solve_config(c, *c.threshold);
    const auto& sol = s.sol;

    std::string csv = "x_edge,cdf,cell_mass\n";
    for (std::size_t j = 0; j < sol.grid.edges.size(); ++j) {
        const double mass = j == 0 ? 0.0 : sol.weights[static_cast<Eigen::Index>(j - 1)];
        csv += format_real(sol.grid.edges[j]) + "," + format_real(sol.cumulative[j]) + "," +
               format_real(mass) + "\n";
    }
    const std::vector<std::pair<std::string, std::string>> result{
        {"lambda", format_real(sol.lambda)},
        {"expected_exit_time", format_real(sol.expected_exit_time)},
        {"expected_exit_time_fundamental", format_real(s.fundamental)},
        {"iterations", std::to_string(sol.iterations)},
        {"residual", format_real(sol.residual)},
        {"eigen_residual", format_real(sol.eigen_residual)},
        {"converged", bool_text(sol.converged)},
        {"qsd_vs_conditioned_l1", format_real(s.conditioned_l1)},
        {"n_cells", std::to_string(sol.grid.n_cells())},
        {"threshold", format_real(*c.threshold)},
    };
    write_file_atomic(c.out + ".qsd.csv", csv);
    write_file_atomic(c.out + ".result", kv_text(result));
    write_manifest(c);

    out << "lambda=" << format_real(sol.lambda) << "\n"
        << "expected_exit_time=" << format_real(sol.expected_exit_time) << "\n"
        << "qsd_vs_conditioned_l1=" << format_real(s.conditioned_l1) << "\n";
    if (!sol.converged) {
        err << "Yaglom iteration did not converge after " << sol.iterations
            << " iterations (residual " << format_real(sol.residual) << ")\n";
        return kNotConverged;
    }
    return kOk;
}

int cmd_check_conditions(const RunConfig& c, std::ostream& out, std::ostream& /*err*/)
{
    const auto reports = check_all_conditions(c.kernel, default_scan(c.kernel));
    std::string csv = "condition_id,passed,worst_violation,witness\n";
    for (const auto& r : reports) {
        csv += std::string(to_string(r.id)) + "," + bool_text(r.passed) + "," +
               format_real(r.worst_violation) + "," + r.witness_text() + "\n";
        out << to_string(r.id) << (r.passed ? " pass" : " FAIL")
            << (r.heuristic ? " (heuristic)" : "") << "\n";
    }
    write_file_atomic(c.out + ".conditions.csv", csv);
    write_manifest(c);
    return required_conditions_passed(reports) ? kOk : kConditionFailed;
}

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    const Solved s = solve_config(c, *c.threshold);
    if (!s.sol.converged) {
        err << "QSD solve did not converge; refusing to simulate from it\n";
        return kNotConverged;
    }

    int code = kOk;
    McEstimate est;
    try {
        est = simulate_exit_time(c.kernel, *c.threshold, s.sol, c.mc);
    } catch (const CapDominatedError& e) {
        err << e.what() << "\n";
        est = e.estimate();
        code = kNotConverged;
    }
    std::optional<GeometricFitReport> fit;
    if (!est.histogram.empty() && s.sol.lambda > 0.0 && s.sol.lambda < 1.0) {
        fit = geometric_fit_test(est, s.sol.lambda);
    }
    write_file_atomic(c.out + ".mc.csv", histogram_csv(est));
    write_file_atomic(c.out + ".mc.result", mc_result_text(est, fit ? &*fit : nullptr, s.sol));

    out << "mean=" << format_real(est.mean) << " stderr=" << format_real(est.std_error)
        << " expected_exit_time=" << format_real(s.sol.expected_exit_time)
        << " geometric_fit_passed=" << bool_text(fit && fit->passed) << "\n";

    if (c.couple) {
        const double y = *c.couple;
        const auto trace = coupled_dominance_sim(
            c.kernel, *c.threshold, y, s.sol, CouplingOptions{c.couple_paths, c.couple_steps, c.mc.seed, 1e-12});
        const auto states = log_spaced(s.sol.grid.lower() * y, y * *c.threshold, 64);
        std::vector<double> us;
        for (int k = 1; k < 64; ++k) {
            us.push_back(k / 64.0);
        }
        const auto one_step = check_one_step_coupling(c.kernel, *c.threshold, y, states, us);
        std::vector<std::pair<std::string, std::string>> kv{
            {"y", format_real(trace.y)},
            {"n_paths", std::to_string(trace.n_paths)},
            {"n_steps", std::to_string(trace.n_steps)},
            {"violations", std::to_string(trace.violations)},
            {"max_violation_magnitude", format_real(trace.max_violation_magnitude)},
            {"one_step_worst_violation", format_real(one_step.worst_violation)},
            {"one_step_passed", bool_text(one_step.passed)},
        };
        for (std::size_t i = 0; i < trace.dump.size(); ++i) {
            const auto& v = trace.dump[i];
            kv.emplace_back("violation" + std::to_string(i),
                            "path=" + std::to_string(v.path) + ";step=" + std::to_string(v.step) +
                                ";v=" + format_real(v.v) + ";w=" + format_real(v.w));
        }
        write_file_atomic(c.out + ".coupling.result", kv_text(kv));
        out << "coupling y=" << format_real(y) << " violations=" << trace.violations << "\n";
        if (trace.violations > 0) {
            // Only a theorem failure when the hypotheses hold.
            const auto reports = check_all_conditions(c.kernel, default_scan(c.kernel), kDefaultMonotonicityTolerance, false);
            if (required_conditions_passed(reports)) {
                err << "coupling violated V_n <= W_n although the conditions hold\n";
                code = kTheoremViolated;
            }
        }
    }
    write_manifest(c);
    return code;
}

int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    SweepOptions opts;
    opts.y_factors = c.y_factors;
    opts.grid = c.grid;
    opts.yaglom = c.yaglom;
    opts.monte_carlo = c.sweep_mc;
    opts.mc = c.mc;
    const auto result = run_threshold_sweep(c.kernel, c.model, *c.threshold, opts);
    write_file_atomic(c.out + ".sweep.csv", emit_report(result, ReportFormat::csv));
    write_manifest(c);
    out << emit_report(result, ReportFormat::structured_text);

    if (result.theorem_violation()) {
        err << "theorem-backed assertion failed: monotone=" << bool_text(result.monotone)
            << " dominance_ok=" << bool_text(result.dominance_ok) << "\n";
        return kTheoremViolated;
    }
    if (!result.all_converged) {
        err << "some sweep rows did not converge\n";
        return kNotConverged;
    }
    return kOk;
}

int run_command(const std::string& command, const KeyValues& flag_values,
                const std::optional<std::string>& config_path, std::ostream& out, std::ostream& err)
{
    RunConfig config;
    try {
        const KeyValues file = config_path ? load_key_values(*config_path) : KeyValues{};
        config = resolve_config(command, file, flag_values);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (command == "solve") {
            return cmd_solve(config, out, err);
        }
        if (command == "check-conditions") {
            return cmd_check_conditions(config, out, err);
        }
        if (command == "simulate") {
            return cmd_simulate(config, out, err);
        }
        return cmd_sweep(config, out, err);
    } catch (const VacuousThresholdError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kNotConverged;
    }
}

} // namespace qsd::cli
