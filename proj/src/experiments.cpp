#include "qsd/experiments.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qsd/errors.hpp"
#include "qsd/format.hpp"
#include "qsd/parallel.hpp"

namespace qsd {

ModelPreset ewma_preset(double alpha, double mu, double sigma)
{
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw DomainError("EWMA preset needs 0 <= alpha < 1");
    }
    ModelPreset p{
        "ewma",
        MultiplicativeKernel{PhiFunction::power(alpha), InnovationDistribution::lognormal(mu, sigma),
                             std::numeric_limits<double>::min()},
        {std::numbers::e, std::exp(2.0), std::exp(3.0)},
        0.0,
        "Exponentiated EWMA Y' = alpha*Y + xi, xi ~ N(mu, sigma^2); phi(t) = t^alpha. "
        "Defaults alpha=0.5, N(0,1) are arbitrary desk-scale choices.",
    };
    return p;
}

ModelPreset shiryaev_roberts_preset(double theta, Measure measure)
{
    return ModelPreset{
        "shiryaev-roberts",
        MultiplicativeKernel{PhiFunction::affine(1.0),
                             InnovationDistribution::likelihood_ratio_gaussian(theta, measure), 0.0},
        {std::exp(2.0), std::exp(3.0)},
        0.0,
        "Shiryaev-Roberts statistic M' = (M + 1) * f1(X)/f0(X), f0 = N(0,1), f1 = N(theta,1).",
    };
}

ModelPreset cusum_preset(double theta, Measure measure)
{
    return ModelPreset{
        "cusum",
        MultiplicativeKernel{PhiFunction::max_one(),
                             InnovationDistribution::likelihood_ratio_gaussian(theta, measure), 0.0},
        {std::exp(2.0), std::exp(3.0)},
        1.0,
        "CUSUM as exp of the reflected random walk: M' = max(M, 1) * f1(X)/f0(X). Needs log A > 0.",
    };
}

ModelPreset make_preset(std::string_view name)
{
    if (name == "ewma") {
        return ewma_preset();
    }
    if (name == "shiryaev-roberts") {
        return shiryaev_roberts_preset();
    }
    if (name == "cusum") {
        return cusum_preset();
    }
    throw ConfigError("model", "unknown preset '" + std::string(name) +
                                   "' (expected ewma, shiryaev-roberts or cusum)");
}

SweepResult run_threshold_sweep(const MultiplicativeKernel& kernel, std::string model_name,
                                double base_A, const SweepOptions& options)
{
    const auto& ys = options.y_factors;
    if (ys.empty() || ys.front() != 1.0) {
        throw DomainError("y_factors must start at 1");
    }
    for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
        if (!(ys[i] < ys[i + 1])) {
            throw DomainError("y_factors must be strictly increasing");
        }
    }
    if (!(base_A > 0.0)) {
        throw DomainError("base threshold must be > 0");
    }

    SweepResult result;
    result.model = std::move(model_name);
    result.slack = options.slack > 0.0 ? options.slack : default_dominance_slack(options.grid.n_cells);

    const ConditionScan scan = options.scan.s.empty() ? default_scan(kernel) : options.scan;
    result.conditions = check_all_conditions(kernel, scan, options.monotonicity_tolerance, false);
    result.conditions_passed = required_conditions_passed(result.conditions);

    const std::size_t n = ys.size();
    std::vector<SweepRow> rows(n);
    std::vector<std::optional<QsdSolution>> sols(n);
    parallel_for(n, [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.y = ys[i];
        row.A = ys[i] * base_A;
        row.conditions_passed = result.conditions_passed;
        row.lambda = row.expected_exit_time = row.mc_mean = row.mc_stderr = std::nan("");
        row.dominance_worst_gap = row.qsd_vs_conditioned_l1 = std::nan("");
        try {
            const auto grid =
                grid_for_threshold(scaled(options.grid, ys[i]), row.A, kernel.state_space_floor);
            const auto kk = build_killed_kernel(kernel, row.A, grid);
            auto sol = yaglom_iterate(kk, {}, options.yaglom);
            row.lambda = sol.lambda;
            row.iterations = sol.iterations;
            row.converged = sol.converged;
            if (!sol.converged) {
                return;
            }
            row.expected_exit_time = expected_exit_time_geometric(sol);
            try {
                row.qsd_vs_conditioned_l1 =
                    l1_distance(stationary_of_conditioned(kk, options.yaglom).weights, sol.weights);
            } catch (const DegenerateKernelError&) {
            }
            if (options.monte_carlo) {
                McOptions mc = options.mc;
                mc.seed = options.mc.seed + 0x9E3779B97F4A7C15ULL * i;
                const auto est = simulate_exit_time(kernel, row.A, sol, mc);
                row.mc_mean = est.mean;
                row.mc_stderr = est.std_error;
            }
            sols[i] = std::move(sol);
        } catch (const std::runtime_error&) {
            // Solver failures mark the row non-converged; the sweep continues.
            row.converged = false;
        }
    });

    result.all_converged = true;
    for (std::size_t i = 0; i < n; ++i) {
        result.all_converged = result.all_converged && rows[i].converged;
        if (!sols[i]) {
            continue;
        }
        const std::size_t prev = i == 0 ? 0 : i - 1;
        if (!sols[prev]) {
            continue;
        }
        const double y = rows[i].A / rows[prev].A;
        const auto dom = compare_scaled_cdfs(*sols[prev], *sols[i], i == 0 ? 1.0 : y, result.slack);
        rows[i].dominance_worst_gap = dom.worst_gap;
        if (i > 0) {
            if (!dom.passed) {
                result.dominance_ok = false;
            }
            const double a = rows[prev].expected_exit_time;
            if (rows[i].expected_exit_time < a - 1e-9 * a) {
                result.monotone = false;
            }
        }
    }
    if (!result.conditions_passed) {
        // Hypotheses fail: nothing is claimed.
        result.monotone = true;
        result.dominance_ok = true;
    }
    result.rows = std::move(rows);
    return result;
}

SweepResult run_threshold_sweep(const ModelPreset& preset, double base_A, const SweepOptions& options)
{
    if (!(base_A > preset.min_threshold)) {
        throw DomainError(preset.name + " needs thresholds above " + format_real(preset.min_threshold));
    }
    return run_threshold_sweep(preset.kernel, preset.name, base_A, options);
}

std::string emit_report(const SweepResult& result, ReportFormat format)
{
    if (result.rows.empty()) {
        throw std::invalid_argument("emit_report: sweep has no rows");
    }
    std::ostringstream out;
    auto b = [](bool v) { return v ? "true" : "false"; };
    if (format == ReportFormat::csv) {
        out << "A,y,lambda,E_T_numeric,E_T_mc_mean,E_T_mc_stderr,dominance_worst_gap,"
               "qsd_vs_conditioned_L1,conditions_passed,converged\n";
        for (const auto& r : result.rows) {
            out << format_real(r.A) << ',' << format_real(r.y) << ',' << format_real(r.lambda) << ','
                << format_real(r.expected_exit_time) << ',' << format_real(r.mc_mean) << ','
                << format_real(r.mc_stderr) << ',' << format_real(r.dominance_worst_gap) << ','
                << format_real(r.qsd_vs_conditioned_l1) << ',' << b(r.conditions_passed) << ','
                << b(r.converged) << '\n';
        }
        return out.str();
    }

    out << "model=" << result.model << '\n'
        << "rows=" << result.rows.size() << '\n'
        << "conditions_passed=" << b(result.conditions_passed) << '\n'
        << "all_converged=" << b(result.all_converged) << '\n'
        << "monotone=" << b(result.monotone) << '\n'
        << "dominance_ok=" << b(result.dominance_ok) << '\n'
        << "slack=" << format_real(result.slack) << '\n';
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& r = result.rows[i];
        const std::string p = "row" + std::to_string(i) + "_";
        out << p << "a=" << format_real(r.A) << '\n'
            << p << "y=" << format_real(r.y) << '\n'
            << p << "lambda=" << format_real(r.lambda) << '\n'
            << p << "e_t_numeric=" << format_real(r.expected_exit_time) << '\n'
            << p << "e_t_mc_mean=" << format_real(r.mc_mean) << '\n'
            << p << "e_t_mc_stderr=" << format_real(r.mc_stderr) << '\n'
            << p << "dominance_worst_gap=" << format_real(r.dominance_worst_gap) << '\n'
            << p << "qsd_vs_conditioned_l1=" << format_real(r.qsd_vs_conditioned_l1) << '\n'
            << p << "conditions_passed=" << b(r.conditions_passed) << '\n'
            << p << "converged=" << b(r.converged) << '\n'
            << p << "iterations=" << r.iterations << '\n';
    }
    return out.str();
}

} // namespace qsd
