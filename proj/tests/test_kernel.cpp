#include "doctest.h"

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>

#include "qsd/errors.hpp"
#include "qsd/kernel.hpp"
#include "qsd/rng.hpp"

using namespace qsd;

namespace {

const boost::math::normal_distribution<double> kStd(0.0, 1.0);

MultiplicativeKernel cusum_kernel()
{
    return {PhiFunction::max_one(), InnovationDistribution::likelihood_ratio_gaussian(1.0, Measure::pre), 0.0};
}

} // namespace

TEST_CASE("phi variants")
{
    CHECK(PhiFunction::max_one()(0.5) == 1.0);
    CHECK(PhiFunction::max_one()(3.0) == 3.0);
    CHECK(PhiFunction::power(0.5)(4.0) == 2.0);
    CHECK(PhiFunction::affine(1.0)(0.0) == 1.0);
    CHECK(PhiFunction::power(0.0)(0.0) == 1.0);
    CHECK_THROWS_AS(PhiFunction::max_one()(-1.0), DomainError);
    CHECK_THROWS_AS(PhiFunction::affine(0.0), DomainError);
    CHECK_THROWS_AS(PhiFunction::power(-0.1), DomainError);
    CHECK(PhiFunction::power(0.5).describe() == "power:0.5");
    CHECK(PhiFunction::max_one().describe() == "max-one");
}

TEST_CASE("innovation laws match boost lognormal")
{
    const auto ln = InnovationDistribution::lognormal(0.3, 0.7);
    const boost::math::lognormal_distribution<double> oracle(0.3, 0.7);
    for (double u : {1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0}) {
        CHECK(ln.cdf(u) == doctest::Approx(boost::math::cdf(oracle, u)).epsilon(1e-13));
        CHECK(ln.ccdf(u) == doctest::Approx(boost::math::cdf(boost::math::complement(oracle, u))).epsilon(1e-13));
    }
    for (double p : {1e-6, 0.2, 0.5, 0.9}) {
        CHECK(ln.quantile(p) == doctest::Approx(boost::math::quantile(oracle, p)).epsilon(1e-12));
    }
    CHECK(ln.cdf(0.0) == 0.0);

    // log Lambda ~ N(-theta^2/2, theta^2) before the change, N(+theta^2/2, theta^2) after.
    const auto pre = InnovationDistribution::likelihood_ratio_gaussian(1.5, Measure::pre);
    const auto post = InnovationDistribution::likelihood_ratio_gaussian(1.5, Measure::post);
    CHECK(pre.log_mean() == doctest::Approx(-1.125));
    CHECK(post.log_mean() == doctest::Approx(1.125));
    CHECK(pre.log_sd() == doctest::Approx(1.5));
    CHECK_THROWS_AS(InnovationDistribution::likelihood_ratio_gaussian(0.0, Measure::pre), DomainError);
    CHECK_THROWS_AS(InnovationDistribution::lognormal(0.0, 0.0), DomainError);
}

TEST_CASE("pre-change likelihood ratio has unit mean")
{
    // E_0[f1/f0] = 1: integrate u dF(u) with the sampler at midpoints of a fine u-grid.
    const auto pre = InnovationDistribution::likelihood_ratio_gaussian(1.0, Measure::pre);
    const int n = 200000;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        sum += pre.sample((k + 0.5) / n);
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("rho_eval examples")
{
    const auto k = cusum_kernel();
    CHECK(rho_eval(k, 0.5, 1.0) == doctest::Approx(boost::math::cdf(kStd, 0.5)).epsilon(1e-14));
    CHECK(rho_eval(k, 0.5, 1.0) == doctest::Approx(0.691462).epsilon(1e-6));
    CHECK(rho_eval(k, 0.5, 0.0) == 0.0);

    const MultiplicativeKernel ew{PhiFunction::power(0.5), InnovationDistribution::lognormal(0.0, 1.0), 0.0};
    CHECK(rho_eval(ew, 4.0, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rho_eval(k, 2.0, 5.0) + rho_tail(k, 2.0, 5.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(rho_eval(k, -1.0, 1.0), DomainError);
}

TEST_CASE("rho_conditioned examples")
{
    const auto k = cusum_kernel();
    const double e = std::numbers::e;
    CHECK(rho_conditioned(k, 1.0, e, e) == 1.0);
    CHECK(rho_conditioned(k, 1.0, 0.0, e) == 0.0);
    const double oracle = boost::math::cdf(kStd, 0.5) / boost::math::cdf(kStd, 1.5);
    CHECK(rho_conditioned(k, 1.0, 1.0, e) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(rho_conditioned(k, 1.0, 1.0, e) == doctest::Approx(0.740965).epsilon(1e-6));
    CHECK_THROWS_AS(rho_conditioned(k, 1.0, 3.0, e), DomainError);

    // Threshold far below any reachable mass: the conditioning event has probability zero.
    const MultiplicativeKernel tight{PhiFunction::max_one(), InnovationDistribution::lognormal(50.0, 0.01), 0.0};
    CHECK_THROWS_AS(rho_conditioned(tight, 1.0, 0.5, 1.0), DegenerateKernelError);
}

TEST_CASE("sample_step examples")
{
    const MultiplicativeKernel ew{PhiFunction::power(0.5), InnovationDistribution::lognormal(0.0, 1.0), 0.0};
    CHECK(sample_step(ew, 4.0, 0.5) == doctest::Approx(2.0).epsilon(1e-14));

    // u with F^{-1}(u) = 2 under SR: sample is (0 + 1) * 2.
    const MultiplicativeKernel sr{PhiFunction::affine(1.0),
                                  InnovationDistribution::likelihood_ratio_gaussian(1.0, Measure::pre), 0.0};
    const double u2 = boost::math::cdf(kStd, std::log(2.0) + 0.5);
    CHECK(sample_step(sr, 0.0, u2) == doctest::Approx(2.0).epsilon(1e-12));

    // Unit innovation reproduces phi(s).
    const double u1 = sr.innovation.cdf(1.0);
    for (double s : {0.0, 0.5, 3.0}) {
        CHECK(sample_step(sr, s, u1) == doctest::Approx(s + 1.0).epsilon(1e-12));
    }
}

TEST_CASE("sample_step_conditioned examples")
{
    const auto k = cusum_kernel();
    const double e = std::numbers::e;
    const double expected = std::exp(boost::math::quantile(kStd, 0.5 * boost::math::cdf(kStd, 1.5)) - 0.5);
    CHECK(sample_step_conditioned(k, 1.0, e, 0.5) == doctest::Approx(expected).epsilon(1e-12));

    CHECK(sample_step_conditioned(k, 1.0, e, 1.0 - 1e-15) <= e);
    CHECK(sample_step_conditioned(k, 1.0, e, 1.0 - 1e-15) == doctest::Approx(e).epsilon(1e-9));

    // Conditioning on a sure event changes nothing.
    const MultiplicativeKernel low{PhiFunction::max_one(), InnovationDistribution::lognormal(-60.0, 0.5), 0.0};
    for (double u : {0.01, 0.3, 0.9}) {
        CHECK(sample_step_conditioned(low, 2.0, 1.0, u) == doctest::Approx(sample_step(low, 2.0, u)).epsilon(1e-14));
    }
}

TEST_CASE("conditioned draws stay in [0, A] and are monotone in u")
{
    const auto k = cusum_kernel();
    RandomStream rng(7, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const double s = std::exp(8.0 * rng.uniform() - 4.0);
        const double A = std::exp(6.0 * rng.uniform() - 1.0);
        double prev = 0.0;
        for (double u = 0.01; u < 1.0; u += 0.01) {
            const double v = sample_step_conditioned(k, s, A, u);
            CHECK(v >= 0.0);
            CHECK(v <= A);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("quantile inverts cdf across the support")
{
    const auto pre = InnovationDistribution::likelihood_ratio_gaussian(2.0, Measure::post);
    for (double u : {1e-5, 0.01, 0.5, 1.0, 7.0, 300.0}) {
        const double p = pre.cdf(u);
        const double back = p <= 0.5 ? pre.quantile(p) : pre.upper_quantile(pre.ccdf(u));
        CHECK(back == doctest::Approx(u).epsilon(1e-11));
    }
}
