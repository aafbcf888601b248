#include "qsd/qsd_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsd/errors.hpp"
#include "qsd/format.hpp"
#include "qsd/parallel.hpp"

namespace qsd {

namespace {

Eigen::VectorXd normalized_start(const std::optional<Eigen::VectorXd>& initial, std::size_t n)
{
    if (!initial) {
        return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
    }
    if (static_cast<std::size_t>(initial->size()) != n) {
        throw DomainError("initial distribution has the wrong length");
    }
    if ((initial->array() < 0.0).any() || !initial->allFinite()) {
        throw DomainError("initial distribution must be nonnegative");
    }
    const double total = initial->sum();
    if (std::abs(total - 1.0) > 1e-12) {
        throw DomainError("initial distribution must sum to 1");
    }
    return *initial / total;
}

std::vector<double> cumulative_of(const Eigen::VectorXd& w)
{
    std::vector<double> c(static_cast<std::size_t>(w.size()) + 1, 0.0);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        c[static_cast<std::size_t>(i) + 1] = c[static_cast<std::size_t>(i)] + w[i];
    }
    c.back() = 1.0;
    return c;
}

} // namespace

KilledKernel KilledKernel::from_mass(Eigen::MatrixXd mass)
{
    if (mass.rows() != mass.cols() || mass.rows() == 0) {
        throw DomainError("killed kernel must be a nonempty square matrix");
    }
    if ((mass.array() < 0.0).any() || !mass.allFinite()) {
        throw DomainError("killed kernel entries must be finite and nonnegative");
    }
    KilledKernel kk;
    kk.grid = make_grid(GridKind::uniform, static_cast<std::size_t>(mass.rows()), 0.0, 1.0);
    kk.survival = mass.rowwise().sum();
    if ((kk.survival.array() > 1.0 + 1e-12).any()) {
        throw DomainError("killed kernel rows must sum to at most 1");
    }
    kk.mass = std::move(mass);
    return kk;
}

KilledKernel build_killed_kernel(const MultiplicativeKernel& kernel, double A, const GridSpec& grid)
{
    if (grid.n_cells() == 0 || grid.upper() != A) {
        throw DomainError("grid must end exactly at the threshold A = " + format_real(A));
    }
    const auto n = static_cast<Eigen::Index>(grid.n_cells());
    KilledKernel kk;
    kk.grid = grid;
    kk.mass.resize(n, n);
    kk.survival.resize(n);

    // Rows are independent; each worker fills its own row.
    std::vector<std::vector<double>> rows(grid.n_cells());
    parallel_for(grid.n_cells(), [&](std::size_t i) {
        auto& row = rows[i];
        row.resize(grid.n_cells() + 1);
        const double s = grid.points[i];
        row[0] = 0.0;
        for (std::size_t j = 1; j <= grid.n_cells(); ++j) {
            row[j] = rho_eval(kernel, s, grid.edges[j]);
        }
    });
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j) {
            kk.mass(i, j) = row[static_cast<std::size_t>(j) + 1] - row[static_cast<std::size_t>(j)];
        }
        kk.survival[i] = row.back();
    }

    if ((kk.survival.array() >= 1.0 - 1e-15).all()) {
        throw VacuousThresholdError("every grid state stays below A = " + format_real(A) +
                                    " with probability one");
    }
    return kk;
}

double QsdSolution::cdf(double x) const
{
    const auto& e = grid.edges;
    if (x <= e.front()) {
        return 0.0;
    }
    if (x >= e.back()) {
        return 1.0;
    }
    const auto j = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), x) - e.begin()) - 1;
    const double frac = (x - e[j]) / (e[j + 1] - e[j]);
    return cumulative[j] + frac * (cumulative[j + 1] - cumulative[j]);
}

QsdSolution QsdSolution::from_weights(const KilledKernel& kk, Eigen::VectorXd weights,
                                      std::size_t iterations, double residual, bool converged)
{
    if (static_cast<std::size_t>(weights.size()) != kk.size()) {
        throw DomainError("weights length does not match the kernel");
    }
    const double total = weights.sum();
    if (!(total > 0.0)) {
        throw DomainError("weights must have positive total mass");
    }
    QsdSolution sol;
    sol.grid = kk.grid;
    sol.weights = weights / total;
    sol.cumulative = cumulative_of(sol.weights);
    sol.lambda = sol.weights.dot(kk.survival);
    sol.eigen_residual = (kk.mass.transpose() * sol.weights - sol.lambda * sol.weights).lpNorm<1>();
    sol.expected_exit_time = sol.lambda < 1.0 - 1e-15 ? 1.0 / (1.0 - sol.lambda)
                                                      : std::numeric_limits<double>::infinity();
    sol.iterations = iterations;
    sol.residual = residual;
    sol.converged = converged;
    return sol;
}

QsdSolution yaglom_iterate(const KilledKernel& kk, const std::optional<Eigen::VectorXd>& initial,
                           const YaglomOptions& options)
{
    if (!(options.tol > 0.0)) {
        throw DomainError("Yaglom tolerance must be > 0");
    }
    const Eigen::MatrixXd kt = kk.mass.transpose();
    Eigen::VectorXd q = normalized_start(initial, kk.size());
    Eigen::VectorXd next(q.size());

    std::size_t iter = 0;
    double change = std::numeric_limits<double>::infinity();
    bool converged = false;
    while (iter < options.max_iter) {
        next.noalias() = kt * q;
        const double total = next.sum();
        if (!(total > std::numeric_limits<double>::min())) {
            throw ExtinctionError("conditioned distribution lost all mass after " +
                                  std::to_string(iter + 1) + " steps");
        }
        next /= total;
        change = (next - q).lpNorm<1>();
        q.swap(next);
        ++iter;
        if (change <= options.tol) {
            converged = true;
            break;
        }
    }
    return QsdSolution::from_weights(kk, std::move(q), iter, change, converged);
}

double expected_exit_time_geometric(double lambda)
{
    if (!(lambda >= 0.0)) {
        throw DomainError("survival probability must be >= 0");
    }
    if (lambda >= 1.0 - 1e-15) {
        throw DivergenceError("survival probability " + format_real(lambda) +
                              " leaves the exit time unbounded");
    }
    return 1.0 / (1.0 - lambda);
}

double expected_exit_time_geometric(const QsdSolution& sol)
{
    return expected_exit_time_geometric(sol.lambda);
}

double expected_exit_time_fundamental(const KilledKernel& kk, const Eigen::VectorXd& start)
{
    if (static_cast<std::size_t>(start.size()) != kk.size()) {
        throw DomainError("start distribution has the wrong length");
    }
    const auto n = static_cast<Eigen::Index>(kk.size());
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - kk.mass;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    if (!(lu.rcond() > 1e3 * std::numeric_limits<double>::epsilon())) {
        throw SingularSystemError("I - K is numerically singular");
    }
    const Eigen::VectorXd h = lu.solve(Eigen::VectorXd::Ones(n));
    if (!h.allFinite()) {
        throw SingularSystemError("fundamental-matrix solve produced non-finite values");
    }
    return start.dot(h);
}

ConditionedStationary stationary_of_conditioned(const KilledKernel& kk, const YaglomOptions& options)
{
    if ((kk.survival.array() <= 0.0).any()) {
        throw DegenerateKernelError("a grid row has zero survival; the conditioned chain is undefined");
    }
    const Eigen::MatrixXd pt = (kk.survival.cwiseInverse().asDiagonal() * kk.mass).transpose();
    Eigen::VectorXd pi = normalized_start({}, kk.size());
    Eigen::VectorXd next(pi.size());

    ConditionedStationary out;
    while (out.iterations < options.max_iter) {
        next.noalias() = pt * pi;
        next /= next.sum();
        const double change = (next - pi).lpNorm<1>();
        pi.swap(next);
        ++out.iterations;
        if (change <= options.tol) {
            out.converged = true;
            break;
        }
    }
    out.weights = std::move(pi);
    return out;
}

double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).lpNorm<1>(); }

DominanceReport compare_scaled_cdfs(const QsdSolution& sol_a, const QsdSolution& sol_ya, double y,
                                    double slack)
{
    if (!(y >= 1.0)) {
        throw DomainError("scaling factor y must be >= 1");
    }
    DominanceReport r;
    r.slack = slack;
    r.witness_x = sol_a.grid.upper();
    for (double x : sol_a.grid.edges) {
        const double gap = sol_ya.cdf(y * x) - sol_a.cdf(x);
        if (gap < r.worst_gap) {
            r.worst_gap = gap;
            r.witness_x = x;
        }
    }
    r.passed = r.worst_gap >= -slack;
    return r;
}

DominanceReport check_scaling_dominance(const MultiplicativeKernel& kernel, double A, double y,
                                        const GridSpec& grid_a, const GridSpec& grid_ya,
                                        const YaglomOptions& options, double slack)
{
    if (!(y >= 1.0)) {
        throw DomainError("scaling factor y must be >= 1");
    }
    const auto sol_a = yaglom_iterate(build_killed_kernel(kernel, A, grid_a), {}, options);
    const auto sol_ya = yaglom_iterate(build_killed_kernel(kernel, y * A, grid_ya), {}, options);
    if (!sol_a.converged || !sol_ya.converged) {
        throw DivergenceError("Yaglom iteration did not converge for the dominance check");
    }
    return compare_scaled_cdfs(sol_a, sol_ya, y, slack);
}

std::vector<RefinementLevel> refinement_study(const MultiplicativeKernel& kernel, double A,
                                              const GridTemplate& base, std::size_t levels,
                                              const YaglomOptions& options)
{
    std::vector<RefinementLevel> out;
    GridTemplate tmpl = base;
    for (std::size_t k = 0; k < levels; ++k) {
        const auto grid = grid_for_threshold(tmpl, A, kernel.state_space_floor);
        const auto sol = yaglom_iterate(build_killed_kernel(kernel, A, grid), {}, options);
        const double change = out.empty() ? std::nan("") : std::abs(sol.lambda - out.back().lambda);
        out.push_back({tmpl.n_cells, sol.lambda, change});
        tmpl.n_cells *= 2;
    }
    return out;
}

} // namespace qsd
