#pragma once

namespace qsd {

/// Standard normal CDF, evaluated through erfc so both tails keep relative accuracy.
double normal_cdf(double z);

/// Upper tail 1 - Phi(z).
double normal_ccdf(double z);

/// Inverse of normal_cdf for p in (0, 1). Accurate to a few ulps in z.
double normal_quantile(double p);

/// z such that normal_ccdf(z) == q. Use this instead of normal_quantile(1 - q)
/// when q is small, since forming 1 - q discards the information in q.
double normal_upper_quantile(double q);

double normal_pdf(double z);

} // namespace qsd
