#pragma once

#include <string>
#include <variant>

namespace qsd {

/// Deterministic part of the multiplicative recursion M' = phi(M) * Lambda.
class PhiFunction {
public:
    struct Power {
        double alpha;
    };
    struct Affine {
        double a;
    };
    struct MaxOne {};
    using Variant = std::variant<Power, Affine, MaxOne>;

    /// t^alpha. The model family needs 0 <= alpha < 1; larger exponents are
    /// accepted so the condition checkers can be exercised on them.
    static PhiFunction power(double alpha);
    /// t + a, a > 0.
    static PhiFunction affine(double a);
    /// max(1, t).
    static PhiFunction max_one();

    double operator()(double t) const;

    const Variant& variant() const noexcept { return v_; }

    /// Round-trippable text form: "power:0.5", "affine:1", "max-one".
    std::string describe() const;

private:
    explicit PhiFunction(Variant v) : v_(v) {}
    Variant v_;
};

enum class Measure { pre, post };

/// Law of the iid positive multiplier Lambda. Both variants are log-normal;
/// the likelihood-ratio variant is parametrized by the Gaussian mean shift.
class InnovationDistribution {
public:
    struct LogNormal {
        double mu;
        double sigma;
    };
    /// Lambda = f1(X)/f0(X) with f0 = N(0,1), f1 = N(theta,1) and X drawn from
    /// f0 (pre) or f1 (post). log Lambda ~ N(-+theta^2/2, theta^2).
    struct LikelihoodRatioGaussian {
        double theta;
        Measure measure;
    };
    using Variant = std::variant<LogNormal, LikelihoodRatioGaussian>;

    static InnovationDistribution lognormal(double mu, double sigma);
    static InnovationDistribution likelihood_ratio_gaussian(double theta, Measure measure);

    double log_mean() const noexcept { return mu_; }
    double log_sd() const noexcept { return sigma_; }

    double cdf(double u) const;
    /// 1 - cdf(u) without cancellation.
    double ccdf(double u) const;
    double quantile(double p) const;
    /// u with ccdf(u) == q.
    double upper_quantile(double q) const;
    /// Inverse-CDF draw; monotone nondecreasing in u.
    double sample(double u) const;

    const Variant& variant() const noexcept { return v_; }

    /// "lognormal:0:1", "lr-gaussian:1:pre".
    std::string describe() const;

private:
    InnovationDistribution(Variant v, double mu, double sigma) : v_(v), mu_(mu), sigma_(sigma) {}
    Variant v_;
    double mu_;
    double sigma_;
};

/// rho(s, x) = P(M' <= x | M = s) = F(x / phi(s)).
struct MultiplicativeKernel {
    PhiFunction phi;
    InnovationDistribution innovation;
    /// Infimum of reachable states. Only grid builders consult it.
    double state_space_floor = 0.0;

    std::string describe() const;
};

double rho_eval(const MultiplicativeKernel& kernel, double s, double x);

/// Upper tail 1 - rho(s, x), computed without cancellation.
double rho_tail(const MultiplicativeKernel& kernel, double s, double x);

/// One-step law conditioned on staying in [0, A]: rho(s, x) / rho(s, A).
double rho_conditioned(const MultiplicativeKernel& kernel, double s, double x, double A);

/// phi(s) * F^{-1}(u).
double sample_step(const MultiplicativeKernel& kernel, double s, double u);

/// u-quantile of the conditioned one-step law, phi(s) * F^{-1}(u * F(A / phi(s))).
/// Never exceeds A.
double sample_step_conditioned(const MultiplicativeKernel& kernel, double s, double A, double u);

} // namespace qsd
