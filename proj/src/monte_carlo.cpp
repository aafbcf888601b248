#include "qsd/monte_carlo.hpp"

#include <algorithm>
#include <cmath>

#include "qsd/errors.hpp"
#include "qsd/parallel.hpp"
#include "qsd/rng.hpp"

namespace qsd {

namespace {

void require_reps(const McOptions& options)
{
    if (options.n_reps < 2) {
        throw DomainError("Monte Carlo needs at least two replications");
    }
    if (options.step_cap == 0) {
        throw DomainError("step cap must be positive");
    }
}

McEstimate finish_run(const std::vector<std::uint64_t>& times, const McOptions& options)
{
    McEstimate est = summarize_exit_times(times, options.seed, options.histogram_cap);
    if (static_cast<double>(est.capped) > 0.01 * static_cast<double>(est.n_reps)) {
        throw CapDominatedError(std::to_string(est.capped) + " of " + std::to_string(est.n_reps) +
                                    " replications hit the step cap",
                                std::move(est));
    }
    return est;
}

} // namespace

McEstimate summarize_exit_times(std::span<const std::uint64_t> times, std::uint64_t seed,
                                std::uint64_t histogram_cap)
{
    McEstimate est;
    est.n_reps = times.size();
    est.seed = seed;

    // Welford in replication order.
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t k = 0;
    for (std::uint64_t t : times) {
        if (t == kCappedExit) {
            ++est.capped;
            continue;
        }
        ++k;
        const double x = static_cast<double>(t);
        const double d = x - mean;
        mean += d / static_cast<double>(k);
        m2 += d * (x - mean);
        if (t > histogram_cap) {
            ++est.histogram_overflow;
        } else {
            if (est.histogram.size() < t) {
                est.histogram.resize(t, 0);
            }
            ++est.histogram[t - 1];
        }
    }
    est.mean = k > 0 ? mean : std::nan("");
    est.std_error = k > 1 ? std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;
    return est;
}

double sample_from_qsd(const QsdSolution& sol, double u)
{
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError("sample_from_qsd: u must lie in (0, 1)");
    }
    const auto& c = sol.cumulative;
    const auto& e = sol.grid.edges;
    const std::size_t n = sol.grid.n_cells();
    auto k = static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), u) - c.begin());
    k = std::clamp<std::size_t>(k, 1, n);
    const std::size_t j = k - 1;
    const double w = c[j + 1] - c[j];
    const double frac = w > 0.0 ? std::clamp((u - c[j]) / w, 0.0, 1.0) : 1.0;
    return std::min(e[j] + frac * (e[j + 1] - e[j]), e.back());
}

McEstimate simulate_exit_time(const MultiplicativeKernel& kernel, double A, const QsdSolution& sol,
                              const McOptions& options)
{
    require_reps(options);
    std::vector<std::uint64_t> times(options.n_reps, kCappedExit);
    parallel_for(options.n_reps, [&](std::size_t r) {
        RandomStream rng(options.seed, r);
        double m = sample_from_qsd(sol, rng.uniform());
        for (std::uint64_t n = 1; n <= options.step_cap; ++n) {
            m = sample_step(kernel, m, rng.uniform());
            if (m > A) {
                times[r] = n;
                return;
            }
        }
    });
    return finish_run(times, options);
}

McEstimate simulate_exit_time_discrete(const KilledKernel& kk, const Eigen::VectorXd& start,
                                       const McOptions& options)
{
    require_reps(options);
    const std::size_t n = kk.size();
    if (static_cast<std::size_t>(start.size()) != n) {
        throw DomainError("start distribution has the wrong length");
    }
    std::vector<double> start_cum(n);
    std::vector<std::vector<double>> row_cum(n, std::vector<double>(n));
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += start[static_cast<Eigen::Index>(i)];
        start_cum[i] = acc;
        double r = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            r += kk.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            row_cum[i][j] = r;
        }
    }
    for (auto& v : start_cum) {
        v /= acc;
    }

    std::vector<std::uint64_t> times(options.n_reps, kCappedExit);
    parallel_for(options.n_reps, [&](std::size_t r) {
        RandomStream rng(options.seed, r);
        const double u0 = rng.uniform();
        std::size_t cell = std::min<std::size_t>(
            static_cast<std::size_t>(std::lower_bound(start_cum.begin(), start_cum.end(), u0) -
                                     start_cum.begin()),
            n - 1);
        for (std::uint64_t step = 1; step <= options.step_cap; ++step) {
            const double u = rng.uniform();
            const auto& rc = row_cum[cell];
            if (u >= rc.back()) {
                times[r] = step;
                return;
            }
            cell = static_cast<std::size_t>(std::upper_bound(rc.begin(), rc.end(), u) - rc.begin());
        }
    });
    return finish_run(times, options);
}

GeometricFitReport geometric_fit_test(const McEstimate& estimate, double lambda)
{
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw DomainError("geometric_fit_test: lambda must lie in (0, 1)");
    }
    if (estimate.histogram.empty() || estimate.n_reps == 0) {
        throw DomainError("geometric_fit_test: empty histogram");
    }
    const auto total = static_cast<double>(estimate.n_reps);

    GeometricFitReport r;
    r.passed = true;
    std::uint64_t exited = 0;
    for (std::size_t n = 1; n <= estimate.histogram.size(); ++n) {
        exited += estimate.histogram[n - 1];
        const double survival = 1.0 - static_cast<double>(exited) / total;
        const double expected = std::pow(lambda, static_cast<double>(n));
        const double se = std::sqrt(expected * (1.0 - expected) / total);
        const double dev = std::abs(survival - expected);
        r.max_standardized_deviation = std::max(r.max_standardized_deviation, se > 0.0 ? dev / se : 0.0);
        if (dev > 4.0 * se) {
            r.passed = false;
        }
        if (survival > 0.0) {
            r.max_log_survival_deviation =
                std::max(r.max_log_survival_deviation,
                         std::abs(std::log(survival) - static_cast<double>(n) * std::log(lambda)));
        }
        ++r.points_compared;
        if (static_cast<double>(exited) >= 0.99 * total) {
            break;
        }
    }
    return r;
}

CouplingTrace coupled_dominance_sim(const MultiplicativeKernel& kernel, double A, double y,
                                    const QsdSolution& sol_a, const CouplingOptions& options)
{
    if (!(y >= 1.0)) {
        throw DomainError("coupling needs y >= 1");
    }
    const double ya = y * A;
    struct PathResult {
        std::uint64_t violations = 0;
        double worst = 0.0;
        std::vector<CouplingViolation> first;
    };
    std::vector<PathResult> paths(options.n_paths);
    parallel_for(options.n_paths, [&](std::size_t p) {
        RandomStream rng(options.seed, p);
        PathResult& out = paths[p];
        double u_state = sample_from_qsd(sol_a, rng.uniform());
        double v_state = y * u_state;
        for (std::size_t step = 1; step <= options.n_steps; ++step) {
            const double u = rng.uniform();
            u_state = sample_step_conditioned(kernel, u_state, A, u);
            v_state = sample_step_conditioned(kernel, v_state, ya, u);
            const double w_state = y * u_state;
            if (v_state > w_state + options.tolerance) {
                ++out.violations;
                out.worst = std::max(out.worst, v_state - w_state);
                if (out.first.size() < 16) {
                    out.first.push_back({p, step, v_state, w_state});
                }
            }
        }
    });

    CouplingTrace trace;
    trace.y = y;
    trace.n_steps = options.n_steps;
    trace.n_paths = options.n_paths;
    for (auto& p : paths) {
        trace.violations += p.violations;
        trace.max_violation_magnitude = std::max(trace.max_violation_magnitude, p.worst);
        for (const auto& v : p.first) {
            if (trace.dump.size() < 16) {
                trace.dump.push_back(v);
            }
        }
    }
    return trace;
}

OneStepCouplingReport check_one_step_coupling(const MultiplicativeKernel& kernel, double A, double y,
                                              const std::vector<double>& states,
                                              const std::vector<double>& uniforms, double tolerance)
{
    if (!(y >= 1.0)) {
        throw DomainError("coupling needs y >= 1");
    }
    const double ya = y * A;
    OneStepCouplingReport r;
    auto offer = [&](double v, double w, double u) {
        ++r.points;
        if (v > r.worst_violation) {
            r.worst_violation = v;
            r.witness_state = w;
            r.witness_u = u;
        }
    };
    for (double u : uniforms) {
        double prev = std::nan("");
        for (double w : states) {
            if (!(w > 0.0) || w > ya) {
                throw DomainError("one-step coupling states must lie in (0, yA]");
            }
            const double v_next = sample_step_conditioned(kernel, w, ya, u);
            const double w_next = y * sample_step_conditioned(kernel, w / y, A, u);
            offer(v_next - w_next, w, u);
            if (!std::isnan(prev)) {
                offer(prev - v_next, w, u);
            }
            prev = v_next;
        }
    }
    r.passed = r.worst_violation <= tolerance;
    return r;
}

} // namespace qsd
