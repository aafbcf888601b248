#include "doctest.h"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

#include "qsd/errors.hpp"
#include "qsd/experiments.hpp"

using namespace qsd;

namespace {

std::size_t count_lines(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

SweepOptions quick(std::vector<double> ys, std::size_t n = 200)
{
    SweepOptions o;
    o.y_factors = std::move(ys);
    o.grid.n_cells = n;
    o.scan = default_scan(shiryaev_roberts_preset().kernel, 16);
    return o;
}

} // namespace

TEST_CASE("presets")
{
    CHECK(make_preset("ewma").kernel.phi.describe() == "power:0.5");
    CHECK(make_preset("shiryaev-roberts").kernel.innovation.describe() == "lr-gaussian:1:pre");
    CHECK(make_preset("cusum").min_threshold == 1.0);
    CHECK(make_preset("ewma").kernel.state_space_floor > 0.0);
    CHECK_THROWS_AS(make_preset("page"), ConfigError);
    CHECK_THROWS_AS(ewma_preset(1.0), DomainError);
}

TEST_CASE("single-row sweep")
{
    const auto r = run_threshold_sweep(shiryaev_roberts_preset(), std::exp(2.0), quick({1.0}));
    REQUIRE(r.rows.size() == 1);
    CHECK(r.monotone);
    CHECK(r.dominance_ok);
    CHECK(r.rows[0].converged);
    CHECK(r.rows[0].dominance_worst_gap >= -1e-12);
    CHECK_FALSE(r.theorem_violation());

    const auto csv = emit_report(r, ReportFormat::csv);
    CHECK(count_lines(csv) == 2);
    CHECK(csv.rfind("A,y,lambda,E_T_numeric,E_T_mc_mean,E_T_mc_stderr,dominance_worst_gap,"
                    "qsd_vs_conditioned_L1,conditions_passed,converged\n",
                    0) == 0);
}

TEST_CASE("report rows built from discrete chains with known eigenvalues")
{
    // Two synthetic kernels standing in for thresholds A and 2A: the second
    // survives more, lambda 0.7 then 0.9 by the dense eigen oracle.
    Eigen::MatrixXd k1(2, 2), k2(2, 2);
    k1 << 0.5, 0.2, 0.3, 0.4;
    k2 << 0.6, 0.3, 0.4, 0.5;
    SweepResult res;
    res.model = "synthetic";
    res.conditions_passed = true;
    res.all_converged = true;
    double A = 1.0;
    for (const auto* m : {&k1, &k2}) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(m->transpose());
        const double oracle = std::max(es.eigenvalues()[0].real(), es.eigenvalues()[1].real());
        const auto sol = yaglom_iterate(KilledKernel::from_mass(*m));
        CHECK(sol.lambda == doctest::Approx(oracle).epsilon(1e-10));
        SweepRow row;
        row.A = A;
        row.y = A;
        row.lambda = sol.lambda;
        row.expected_exit_time = expected_exit_time_geometric(sol);
        row.converged = true;
        row.conditions_passed = true;
        res.rows.push_back(row);
        A *= 2.0;
    }
    CHECK(res.rows[0].expected_exit_time == doctest::Approx(10.0 / 3.0).epsilon(1e-9));
    CHECK(res.rows[1].expected_exit_time == doctest::Approx(10.0).epsilon(1e-9));

    const auto txt = emit_report(res, ReportFormat::structured_text);
    CHECK(txt.find("row1_e_t_numeric=") != std::string::npos);
    CHECK(txt.find("model=synthetic\n") == 0);
    CHECK(count_lines(emit_report(res, ReportFormat::csv)) == 3);
}

TEST_CASE("empty report is rejected")
{
    CHECK_THROWS_AS(emit_report(SweepResult{}, ReportFormat::csv), std::invalid_argument);
}

TEST_CASE("SR sweep is increasing and dominated")
{
    auto opts = quick({1.0, 2.0, 4.0, 8.0}, 400);
    const auto r = run_threshold_sweep(shiryaev_roberts_preset(), std::exp(2.0), opts);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.conditions_passed);
    CHECK(r.all_converged);
    CHECK(r.monotone);
    CHECK(r.dominance_ok);
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(r.rows[i].A > r.rows[i - 1].A);
        CHECK(r.rows[i].expected_exit_time > r.rows[i - 1].expected_exit_time);
        CHECK(r.rows[i].dominance_worst_gap >= -r.slack);
    }
    CHECK(r.slack == doctest::Approx(5.0 / 400));
    CHECK(r.rows[0].A == doctest::Approx(std::exp(2.0)));
}

TEST_CASE("sweep with Monte Carlo columns")
{
    auto opts = quick({1.0, 2.0}, 200);
    opts.monte_carlo = true;
    opts.mc.n_reps = 20'000;
    const auto r = run_threshold_sweep(shiryaev_roberts_preset(), std::exp(2.0), opts);
    for (const auto& row : r.rows) {
        CHECK(std::abs(row.mc_mean - row.expected_exit_time) <= 4.0 * row.mc_stderr);
    }
    const auto again = run_threshold_sweep(shiryaev_roberts_preset(), std::exp(2.0), opts);
    CHECK(emit_report(r, ReportFormat::csv) == emit_report(again, ReportFormat::csv));
}

TEST_CASE("failed hypotheses make the monotonicity checks vacuous")
{
    const MultiplicativeKernel k{PhiFunction::power(2.0), InnovationDistribution::lognormal(-1.0, 0.5),
                                 std::numeric_limits<double>::min()};
    auto opts = quick({1.0, 2.0}, 100);
    opts.scan = default_scan(k, 16);
    const auto r = run_threshold_sweep(k, "power2", 2.0, opts);
    CHECK_FALSE(r.conditions_passed);
    CHECK_FALSE(r.theorem_violation());
    CHECK_FALSE(r.rows[0].conditions_passed);
}

TEST_CASE("sweep input validation")
{
    CHECK_THROWS_AS(run_threshold_sweep(cusum_preset(), 1.0, quick({1.0})), DomainError);
    CHECK_THROWS_AS(run_threshold_sweep(shiryaev_roberts_preset(), 2.0, quick({2.0, 4.0})), DomainError);
    CHECK_THROWS_AS(run_threshold_sweep(shiryaev_roberts_preset(), 2.0, quick({1.0, 4.0, 2.0})), DomainError);
}
