#include "qsd/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "qsd/errors.hpp"
#include "qsd/format.hpp"
#include "qsd/normal.hpp"

namespace qsd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_unit_open(double u, const char* what)
{
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError(std::string(what) + ": uniform variate must lie in (0, 1)");
    }
}

double checked_phi(const MultiplicativeKernel& k, double s)
{
    const double p = k.phi(s);
    if (!(p > 0.0)) {
        throw DomainError("phi(" + format_real(s) + ") = 0 for " + k.phi.describe());
    }
    return p;
}

} // namespace

PhiFunction PhiFunction::power(double alpha)
{
    if (!std::isfinite(alpha) || alpha < 0.0) {
        throw DomainError("power phi: alpha must be finite and >= 0");
    }
    return PhiFunction(Power{alpha});
}

PhiFunction PhiFunction::affine(double a)
{
    if (!std::isfinite(a) || !(a > 0.0)) {
        throw DomainError("affine phi: a must be finite and > 0");
    }
    return PhiFunction(Affine{a});
}

PhiFunction PhiFunction::max_one() { return PhiFunction(MaxOne{}); }

double PhiFunction::operator()(double t) const
{
    if (!(t >= 0.0)) {
        throw DomainError("phi: state must be >= 0");
    }
    return std::visit(overloaded{
                          [t](const Power& p) { return std::pow(t, p.alpha); },
                          [t](const Affine& a) { return t + a.a; },
                          [t](const MaxOne&) { return std::max(1.0, t); },
                      },
                      v_);
}

std::string PhiFunction::describe() const
{
    return std::visit(overloaded{
                          [](const Power& p) { return "power:" + format_real(p.alpha); },
                          [](const Affine& a) { return "affine:" + format_real(a.a); },
                          [](const MaxOne&) { return std::string("max-one"); },
                      },
                      v_);
}

InnovationDistribution InnovationDistribution::lognormal(double mu, double sigma)
{
    if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0)) {
        throw DomainError("lognormal innovation: need finite mu and sigma > 0");
    }
    return InnovationDistribution(LogNormal{mu, sigma}, mu, sigma);
}

InnovationDistribution InnovationDistribution::likelihood_ratio_gaussian(double theta, Measure measure)
{
    if (!std::isfinite(theta) || theta == 0.0) {
        throw DomainError("likelihood-ratio innovation: theta must be finite and nonzero");
    }
    const double half = 0.5 * theta * theta;
    return InnovationDistribution(LikelihoodRatioGaussian{theta, measure},
                                  measure == Measure::pre ? -half : half, std::abs(theta));
}

double InnovationDistribution::cdf(double u) const
{
    if (!(u > 0.0)) {
        return 0.0;
    }
    if (std::isinf(u)) {
        return 1.0;
    }
    return normal_cdf((std::log(u) - mu_) / sigma_);
}

double InnovationDistribution::ccdf(double u) const
{
    if (!(u > 0.0)) {
        return 1.0;
    }
    if (std::isinf(u)) {
        return 0.0;
    }
    return normal_ccdf((std::log(u) - mu_) / sigma_);
}

double InnovationDistribution::quantile(double p) const
{
    return std::exp(mu_ + sigma_ * normal_quantile(p));
}

double InnovationDistribution::upper_quantile(double q) const
{
    return std::exp(mu_ + sigma_ * normal_upper_quantile(q));
}

double InnovationDistribution::sample(double u) const
{
    require_unit_open(u, "innovation sample");
    return u <= 0.5 ? quantile(u) : upper_quantile(1.0 - u);
}

std::string InnovationDistribution::describe() const
{
    return std::visit(overloaded{
                          [](const LogNormal& l) {
                              return "lognormal:" + format_real(l.mu) + ":" + format_real(l.sigma);
                          },
                          [](const LikelihoodRatioGaussian& g) {
                              return "lr-gaussian:" + format_real(g.theta) +
                                     (g.measure == Measure::pre ? ":pre" : ":post");
                          },
                      },
                      v_);
}

std::string MultiplicativeKernel::describe() const
{
    return "phi=" + phi.describe() + " innovation=" + innovation.describe();
}

double rho_eval(const MultiplicativeKernel& kernel, double s, double x)
{
    if (!(s >= 0.0) || !(x >= 0.0)) {
        throw DomainError("rho: states must be >= 0");
    }
    return kernel.innovation.cdf(x / checked_phi(kernel, s));
}

double rho_tail(const MultiplicativeKernel& kernel, double s, double x)
{
    if (!(s >= 0.0) || !(x >= 0.0)) {
        throw DomainError("rho: states must be >= 0");
    }
    return kernel.innovation.ccdf(x / checked_phi(kernel, s));
}

double rho_conditioned(const MultiplicativeKernel& kernel, double s, double x, double A)
{
    if (!(x >= 0.0) || !(x <= A)) {
        throw DomainError("rho_conditioned: need 0 <= x <= A");
    }
    const double den = rho_eval(kernel, s, A);
    if (!(den > 0.0)) {
        throw DegenerateKernelError("rho(" + format_real(s) + ", A) = 0");
    }
    return rho_eval(kernel, s, x) / den;
}

double sample_step(const MultiplicativeKernel& kernel, double s, double u)
{
    require_unit_open(u, "sample_step");
    if (!(s >= 0.0)) {
        throw DomainError("sample_step: state must be >= 0");
    }
    return checked_phi(kernel, s) * kernel.innovation.sample(u);
}

double sample_step_conditioned(const MultiplicativeKernel& kernel, double s, double A, double u)
{
    require_unit_open(u, "sample_step_conditioned");
    if (!(s >= 0.0) || !(A > 0.0)) {
        throw DomainError("sample_step_conditioned: need s >= 0 and A > 0");
    }
    const double scale = checked_phi(kernel, s);
    const double cut = A / scale;
    const double lower = u * kernel.innovation.cdf(cut);
    if (!(lower > 0.0)) {
        throw DegenerateKernelError("rho(" + format_real(s) + ", A) = 0");
    }
    double lambda;
    if (lower <= 0.5) {
        lambda = kernel.innovation.quantile(lower);
    } else {
        // lower > 0.5 forces u > 0.5, so 1 - u is exact.
        const double upper = (1.0 - u) + u * kernel.innovation.ccdf(cut);
        lambda = kernel.innovation.upper_quantile(upper);
    }
    return std::min(scale * lambda, A);
}

} // namespace qsd
