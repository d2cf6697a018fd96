#pragma once

namespace sarvb {

/// Standard normal cumulative distribution function.
double normal_cdf(double x) noexcept;

/// E|b| for b ~ N(mu, sd^2).
double folded_normal_mean(double mu, double sd);

/// log K_nu(x), the modified Bessel function of the second kind, for any real
/// order and x > 0. Evaluated from exponentially scaled values (Temme series
/// for x < 2, Steed's continued fraction otherwise) and forward recurrence in
/// the order with running log rescaling, so it stays finite where K_nu itself
/// under- or overflows.
double log_bessel_k(double nu, double x);

/// Mean of the generalised inverse Gaussian giG(p, a, b) with density
/// proportional to x^(p-1) exp(-(a x + b / x) / 2):
///   sqrt(b / a) K_{p+1}(sqrt(ab)) / K_p(sqrt(ab)).
/// For b = 0 and p > 0 the Gamma(p, a / 2) limit 2p / a is returned.
double gig_mean(double p, double a, double b);

}  // namespace sarvb
