#include "doctest.h"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>

#include "qsd/conditions.hpp"
#include "qsd/experiments.hpp"

using namespace qsd;

namespace {

double witness_value(const ConditionReport& r, const std::string& name)
{
    for (const auto& c : r.witness) {
        if (c.name == name) {
            return c.value;
        }
    }
    return std::nan("");
}

ConditionScan small_scan(const MultiplicativeKernel& k)
{
    auto scan = default_scan(k, 24);
    scan.d5_paths = 200;
    scan.d5_steps = 2000;
    return scan;
}

} // namespace

TEST_CASE("condition ids round-trip through text")
{
    for (auto id : {ConditionId::C2, ConditionId::C5, ConditionId::D4, ConditionId::D5Heuristic}) {
        CHECK(parse_condition_id(to_string(id)) == id);
    }
    CHECK(to_string(ConditionId::D5Heuristic) == "D5-heuristic");
    CHECK_FALSE(parse_condition_id("C9").has_value());
}

TEST_CASE("log_spaced endpoints and ratio")
{
    const auto v = log_spaced(1e-3, 1e3, 7);
    REQUIRE(v.size() == 7);
    CHECK(v.front() == 1e-3);
    CHECK(v.back() == 1e3);
    CHECK(v[3] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("all three presets satisfy every required condition")
{
    for (auto name : kPresetNames) {
        const auto preset = make_preset(name);
        const auto reports = check_all_conditions(preset.kernel, default_scan(preset.kernel), 1e-9, false);
        REQUIRE(reports.size() == kRequiredConditions.size());
        for (const auto& r : reports) {
            INFO(std::string(name) << " " << to_string(r.id) << " worst " << r.worst_violation);
            CHECK(r.passed);
            CHECK(r.worst_violation <= 1e-9);
            CHECK(r.points_scanned > 0);
        }
        CHECK(required_conditions_passed(reports));
    }
}

TEST_CASE("power 2 breaks D4 and C3 with a concrete witness")
{
    const MultiplicativeKernel k{PhiFunction::power(2.0), InnovationDistribution::lognormal(0.0, 1.0), 0.0};
    const auto scan = default_scan(k);

    const auto d4 = check_condition(k, ConditionId::D4, scan);
    CHECK_FALSE(d4.passed);
    const double t = witness_value(d4, "t");
    const double t_next = witness_value(d4, "t_next");
    REQUIRE(t < t_next);
    // t / t^2 = 1/t really decreases between the witness points.
    CHECK(1.0 / t_next < 1.0 / t);
    CHECK(d4.worst_violation == doctest::Approx(1.0 / t - 1.0 / t_next).epsilon(1e-12));

    const auto c3 = check_condition(k, ConditionId::C3, scan);
    CHECK_FALSE(c3.passed);
    const double s = witness_value(c3, "s");
    const double x = witness_value(c3, "x");
    const double t0 = witness_value(c3, "t");
    const double t1 = witness_value(c3, "t_next");
    CHECK(rho_eval(k, t1 * s, t1 * x) < rho_eval(k, t0 * s, t0 * x));
    CHECK_FALSE(c3.witness_text().empty());

    CHECK(check_condition(k, ConditionId::D3, scan).passed);
}

TEST_CASE("max-one passes D3")
{
    const auto k = cusum_preset().kernel;
    const auto r = check_condition(k, ConditionId::D3, default_scan(k));
    CHECK(r.passed);
    CHECK(r.worst_violation == 0.0);
    CHECK(r.witness_text().empty());
}

TEST_CASE("D2 for the likelihood-ratio law agrees with a dense independent scan")
{
    // F(t x) / F(t A) with x = 1, A = e on 1e5 log-spaced t in [1e-3, 1e3],
    // F(u) = Phi(log u + 1/2) evaluated by boost.
    const boost::math::normal_distribution<double> nd(0.0, 1.0);
    const double A = std::numbers::e;
    const int n = 100000;
    double worst = 0.0;
    double prev = -1.0;
    for (int i = 0; i < n; ++i) {
        const double t = std::exp(std::log(1e-3) + (std::log(1e3) - std::log(1e-3)) * i / (n - 1));
        const double r = boost::math::cdf(nd, std::log(t) + 0.5) / boost::math::cdf(nd, std::log(t * A) + 0.5);
        if (prev >= 0.0) {
            worst = std::max(worst, prev - r);
        }
        prev = r;
    }
    CHECK(worst <= 1e-12);

    const auto k = cusum_preset().kernel;
    ConditionScan scan;
    scan.t = log_spaced(1e-3, 1e3, 512);
    scan.x = {1.0, 2.0};
    scan.A = {A, 2.0 * A};
    scan.s = {1.0};
    const auto r = check_condition(k, ConditionId::D2, scan);
    CHECK(r.passed);
    CHECK(r.worst_violation <= 1e-12);
}

TEST_CASE("generic transition CDFs")
{
    auto scan = default_scan(ewma_preset().kernel, 16);

    // An exponential law whose mean grows with s: rho decreases in s, passes C2.
    const TransitionCdf exp_law = [](double s, double x) { return -std::expm1(-x / (1.0 + s)); };
    CHECK(check_transition_condition(exp_law, ConditionId::C2, scan).passed);

    // Mean shrinking with s breaks C2.
    const TransitionCdf shrinking = [](double s, double x) { return -std::expm1(-x * (1.0 + s)); };
    const auto bad = check_transition_condition(shrinking, ConditionId::C2, scan);
    CHECK_FALSE(bad.passed);
    CHECK(bad.worst_violation > 0.0);

    CHECK_THROWS_AS(check_transition_condition(exp_law, ConditionId::D4, scan), std::invalid_argument);
}

TEST_CASE("D5 heuristic: presets keep mass, a collapsing chain does not")
{
    for (auto name : kPresetNames) {
        const auto k = make_preset(name).kernel;
        const auto r = check_condition(k, ConditionId::D5Heuristic, small_scan(k));
        INFO(name);
        CHECK(r.heuristic);
        CHECK(r.passed);
    }
    // M' = M * Lambda with E log Lambda < 0 drifts to zero.
    const MultiplicativeKernel collapse{PhiFunction::power(1.0), InnovationDistribution::lognormal(-1.0, 0.5), 0.0};
    const auto r = check_condition(collapse, ConditionId::D5Heuristic, small_scan(collapse));
    CHECK_FALSE(r.passed);
    CHECK(r.heuristic);

    // D5 is never part of the required set.
    auto reports = check_all_conditions(collapse, small_scan(collapse), 1e-9, true);
    CHECK(reports.back().id == ConditionId::D5Heuristic);
}

TEST_CASE("condition scans are deterministic")
{
    const auto k = shiryaev_roberts_preset().kernel;
    const auto scan = small_scan(k);
    const auto a = check_all_conditions(k, scan);
    const auto b = check_all_conditions(k, scan);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].worst_violation == b[i].worst_violation);
        CHECK(a[i].witness_text() == b[i].witness_text());
    }
}
