#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qsd/grid.hpp"
#include "qsd/kernel.hpp"

namespace qsd {

/// Sub-stochastic restriction of the transition law to [0, A] on a grid.
/// mass(i, j) is the probability of moving from points[i] into cell j; the
/// lowest cell also collects everything below the first edge, so each row
/// sums to survival(i) = rho(points[i], A).
struct KilledKernel {
    GridSpec grid;
    Eigen::MatrixXd mass;
    Eigen::VectorXd survival;

    std::size_t size() const noexcept { return static_cast<std::size_t>(survival.size()); }

    /// Wraps an explicit sub-stochastic matrix (synthetic chains). The grid is
    /// a placeholder uniform partition of [0, 1].
    static KilledKernel from_mass(Eigen::MatrixXd mass);
};

KilledKernel build_killed_kernel(const MultiplicativeKernel& kernel, double A, const GridSpec& grid);

struct YaglomOptions {
    double tol = 1e-12;
    std::size_t max_iter = 1'000'000;
};

/// Quasistationary law on a grid together with its survival eigenvalue.
struct QsdSolution {
    GridSpec grid;
    Eigen::VectorXd weights;
    /// cumulative[j] = total weight below edges[j]; cumulative[0] = 0, back() = 1.
    std::vector<double> cumulative;
    double lambda = 0.0;
    double expected_exit_time = 0.0;
    std::size_t iterations = 0;
    /// L1 change of the iterate at the final step.
    double residual = 0.0;
    /// ||w^T K - lambda w^T||_1 of the returned weights.
    double eigen_residual = 0.0;
    bool converged = false;

    /// Piecewise-linear CDF through the cumulative weights at the edges;
    /// 0 at and below the lower edge, 1 at and above A.
    double cdf(double x) const;

    /// Builds a solution from explicit weights, filling lambda and the residuals
    /// from the kernel. Weights are renormalized to sum to one.
    static QsdSolution from_weights(const KilledKernel& kk, Eigen::VectorXd weights,
                                    std::size_t iterations = 0, double residual = 0.0,
                                    bool converged = true);
};

/// Kill-and-renormalize iteration q <- q^T K / ||q^T K||_1 from `initial`
/// (uniform when absent). Hitting max_iter yields converged == false.
QsdSolution yaglom_iterate(const KilledKernel& kk, const std::optional<Eigen::VectorXd>& initial = {},
                           const YaglomOptions& options = {});

/// 1 / (1 - lambda).
double expected_exit_time_geometric(double lambda);
double expected_exit_time_geometric(const QsdSolution& sol);

/// start^T (I - K)^{-1} 1: exact expected exit time of the discrete chain.
double expected_exit_time_fundamental(const KilledKernel& kk, const Eigen::VectorXd& start);

struct ConditionedStationary {
    Eigen::VectorXd weights;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Stationary law of the one-step-conditioned chain mass(i, j) / survival(i).
ConditionedStationary stationary_of_conditioned(const KilledKernel& kk,
                                                const YaglomOptions& options = {});

double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct DominanceReport {
    bool passed = false;
    /// min over evaluation points of cdf_{yA}(y x) - cdf_A(x). Never positive,
    /// since both CDFs equal one at x = A.
    double worst_gap = 0.0;
    double witness_x = 0.0;
    double slack = 0.0;
};

/// Compares Q_{yA}(y x) against Q_A(x) at every edge of the A-grid.
DominanceReport compare_scaled_cdfs(const QsdSolution& sol_a, const QsdSolution& sol_ya, double y,
                                    double slack);

DominanceReport check_scaling_dominance(const MultiplicativeKernel& kernel, double A, double y,
                                        const GridSpec& grid_a, const GridSpec& grid_ya,
                                        const YaglomOptions& options, double slack);

inline double default_dominance_slack(std::size_t n_cells) { return 5.0 / static_cast<double>(n_cells); }

struct RefinementLevel {
    std::size_t n_cells;
    double lambda;
    /// |lambda - lambda of the previous level|; NaN on the first level.
    double change;
};

/// Solves on n, 2n, 4n, ... cells and records how lambda settles.
std::vector<RefinementLevel> refinement_study(const MultiplicativeKernel& kernel, double A,
                                              const GridTemplate& base, std::size_t levels,
                                              const YaglomOptions& options = {});

} // namespace qsd
