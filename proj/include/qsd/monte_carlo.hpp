#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsd/kernel.hpp"
#include "qsd/qsd_engine.hpp"

namespace qsd {

struct McOptions {
    std::size_t n_reps = 100'000;
    std::uint64_t seed = 12345;
    std::uint64_t step_cap = 10'000'000;
    /// Exit times above this land in the histogram overflow bucket.
    std::uint64_t histogram_cap = 1'000'000;
};

/// Monte Carlo estimate of an exit time. Replications that hit the step cap
/// are excluded from mean/stderr and counted in `capped`.
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_reps = 0;
    std::uint64_t seed = 0;
    /// histogram[t - 1] = number of replications with exit time t.
    std::vector<std::uint64_t> histogram;
    std::uint64_t histogram_overflow = 0;
    std::uint64_t capped = 0;

    std::size_t finished() const noexcept { return n_reps - static_cast<std::size_t>(capped); }
    bool cap_warning() const noexcept { return capped > 0; }
};

/// Thrown when more than 1% of replications hit the step cap.
class CapDominatedError : public std::runtime_error {
public:
    CapDominatedError(const std::string& what, McEstimate estimate)
        : std::runtime_error(what), estimate_(std::move(estimate)) {}
    const McEstimate& estimate() const noexcept { return estimate_; }

private:
    McEstimate estimate_;
};

/// Exit-time value recorded for a replication that hit the step cap.
inline constexpr std::uint64_t kCappedExit = 0;

/// Aggregates per-replication exit times (kCappedExit marks capped runs), in
/// the given order.
McEstimate summarize_exit_times(std::span<const std::uint64_t> times, std::uint64_t seed,
                                std::uint64_t histogram_cap);

/// Inverse of the piecewise-linear QSD CDF at u in (0, 1).
double sample_from_qsd(const QsdSolution& sol, double u);

/// T = min{n >= 1 : M_n > A} with M_0 drawn from sol and M_n from sample_step.
McEstimate simulate_exit_time(const MultiplicativeKernel& kernel, double A, const QsdSolution& sol,
                              const McOptions& options);

/// Same experiment on the discrete chain itself: start cell drawn from
/// `start`, each step moves to cell j with probability mass(i, j) and exits
/// with probability 1 - survival(i).
McEstimate simulate_exit_time_discrete(const KilledKernel& kk, const Eigen::VectorXd& start,
                                       const McOptions& options);

struct GeometricFitReport {
    bool passed = false;
    /// max |log P(T > n) - n log lambda| over the compared range.
    double max_log_survival_deviation = 0.0;
    /// max |P(T > n) - lambda^n| / binomial standard error.
    double max_standardized_deviation = 0.0;
    std::size_t points_compared = 0;
};

/// Compares the empirical survival of T against lambda^n for n up to the 99th
/// percentile of T, within a 4-standard-error binomial band.
GeometricFitReport geometric_fit_test(const McEstimate& estimate, double lambda);

struct CouplingOptions {
    std::size_t n_paths = 10'000;
    std::size_t n_steps = 100;
    std::uint64_t seed = 12345;
    double tolerance = 1e-12;
};

struct CouplingViolation {
    std::size_t path;
    std::size_t step;
    double v;
    double w;
};

/// Pathwise comparison of V (conditioned at yA) against W = y U (U conditioned
/// at A), both driven by the same uniforms from V_0 = W_0 = y U_0, U_0 ~ Q_A.
struct CouplingTrace {
    double y = 1.0;
    std::size_t n_steps = 0;
    std::size_t n_paths = 0;
    std::uint64_t violations = 0;
    double max_violation_magnitude = 0.0;
    /// Up to the first 16 violations in (path, step) order.
    std::vector<CouplingViolation> dump;
};

CouplingTrace coupled_dominance_sim(const MultiplicativeKernel& kernel, double A, double y,
                                    const QsdSolution& sol_a, const CouplingOptions& options);

struct OneStepCouplingReport {
    bool passed = false;
    double worst_violation = 0.0;
    double witness_state = 0.0;
    double witness_u = 0.0;
    std::size_t points = 0;
};

/// Checks the one-step ingredients of the pathwise ordering on a (state, u)
/// grid: the conditioned quantile at yA is nondecreasing in the state, and at
/// state w it does not exceed y times the quantile at A from w / y.
OneStepCouplingReport check_one_step_coupling(const MultiplicativeKernel& kernel, double A, double y,
                                              const std::vector<double>& states,
                                              const std::vector<double>& uniforms,
                                              double tolerance = 1e-12);

} // namespace qsd
