#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qsd/conditions.hpp"
#include "qsd/grid.hpp"
#include "qsd/kernel.hpp"
#include "qsd/monte_carlo.hpp"
#include "qsd/qsd_engine.hpp"

namespace qsd {

/// One of the three worked processes: EWMA, Shiryaev-Roberts, CUSUM.
struct ModelPreset {
    std::string name;
    MultiplicativeKernel kernel;
    std::vector<double> default_thresholds;
    /// Thresholds must exceed this (CUSUM needs log A > 0).
    double min_threshold = 0.0;
    std::string notes;
};

/// Y' = alpha Y + xi, xi ~ N(mu, sigma^2), M = exp(Y): phi(t) = t^alpha.
ModelPreset ewma_preset(double alpha = 0.5, double mu = 0.0, double sigma = 1.0);
/// M' = (M + 1) Lambda with a Gaussian likelihood ratio Lambda.
ModelPreset shiryaev_roberts_preset(double theta = 1.0, Measure measure = Measure::pre);
/// M' = max(M, 1) Lambda, the exponentiated reflected random walk.
ModelPreset cusum_preset(double theta = 1.0, Measure measure = Measure::pre);

/// "ewma", "shiryaev-roberts" or "cusum" with default parameters.
ModelPreset make_preset(std::string_view name);

inline constexpr std::string_view kPresetNames[] = {"ewma", "shiryaev-roberts", "cusum"};

struct SweepOptions {
    std::vector<double> y_factors{1.0, 2.0, 4.0, 8.0};
    GridTemplate grid;
    YaglomOptions yaglom;
    /// Defaults to 5 / n_cells when <= 0.
    double slack = 0.0;
    bool monte_carlo = false;
    McOptions mc{10'000, 12345, 10'000'000, 1'000'000};
    /// Condition scan; empty axes select default_scan(kernel).
    ConditionScan scan;
    double monotonicity_tolerance = kDefaultMonotonicityTolerance;
};

struct SweepRow {
    double A = 0.0;
    double y = 1.0;
    double lambda = 0.0;
    double expected_exit_time = 0.0;
    double mc_mean = 0.0;
    double mc_stderr = 0.0;
    /// Worst gap of the scaled-CDF comparison against the previous row
    /// (the first row compares with itself).
    double dominance_worst_gap = 0.0;
    double qsd_vs_conditioned_l1 = 0.0;
    bool conditions_passed = false;
    bool converged = false;
    std::size_t iterations = 0;
};

struct SweepResult {
    std::string model;
    std::vector<SweepRow> rows;
    std::vector<ConditionReport> conditions;
    bool conditions_passed = false;
    bool all_converged = false;
    /// Only meaningful when conditions_passed; vacuously true otherwise.
    bool monotone = true;
    bool dominance_ok = true;
    double slack = 0.0;

    /// A theorem-backed assertion failed although its hypotheses were verified.
    bool theorem_violation() const { return conditions_passed && (!monotone || !dominance_ok); }
};

/// Solves the QSD at y * base_A for each y (grid scaled with the threshold),
/// then checks E T monotonicity and scaled-CDF dominance between consecutive rows.
SweepResult run_threshold_sweep(const MultiplicativeKernel& kernel, std::string model_name,
                                double base_A, const SweepOptions& options);

SweepResult run_threshold_sweep(const ModelPreset& preset, double base_A, const SweepOptions& options);

enum class ReportFormat { csv, structured_text };

/// Deterministic serialization. CSV columns:
/// A,y,lambda,E_T_numeric,E_T_mc_mean,E_T_mc_stderr,dominance_worst_gap,
/// qsd_vs_conditioned_L1,conditions_passed,converged
std::string emit_report(const SweepResult& result, ReportFormat format);

} // namespace qsd
