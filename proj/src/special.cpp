#include "sarvb/special.hpp"

#include "sarvb/types.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sarvb {

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double folded_normal_mean(double mu, double sd) {
    if (!(sd > 0.0)) throw ConfigError("folded_normal_mean needs sd > 0");
    const double z = mu / sd;
    return sd * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * z * z) + mu * (1.0 - 2.0 * normal_cdf(-z));
}

namespace {

// Taylor coefficients of 1/Gamma(z) = sum_k c_k z^k (Abramowitz & Stegun 6.1.34), c_1 .. c_26.
constexpr std::array<double, 26> kRecipGamma = {
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
};

struct TemmeGammas {
    double gam1;   // (1/G(1-mu) - 1/G(1+mu)) / (2 mu)
    double gam2;   // (1/G(1-mu) + 1/G(1+mu)) / 2
    double gampl;  // 1/G(1+mu)
    double gammi;  // 1/G(1-mu)
};

// 1/Gamma(1+z) = sum_{k>=0} c_{k+1} z^k, split into odd and even parts.
TemmeGammas temme_gammas(double mu) {
    const double mu2 = mu * mu;
    double odd = 0.0;
    double even = 0.0;
    double pw = 1.0;
    for (std::size_t k = 1; k < kRecipGamma.size(); k += 2) {
        odd += kRecipGamma[k] * pw;  // c_{k+1}, coefficient of z^k with k odd
        if (k + 1 < kRecipGamma.size()) even += kRecipGamma[k + 1] * pw * mu2;
        pw *= mu2;
    }
    TemmeGammas g{};
    g.gam1 = -odd;
    g.gam2 = 1.0 + even;
    g.gampl = g.gam2 - mu * g.gam1;
    g.gammi = g.gam2 + mu * g.gam1;
    return g;
}

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;

// exp(x) K_mu(x) and exp(x) K_{mu+1}(x) for |mu| <= 1/2.
std::pair<double, double> scaled_bessel_k_pair(double mu, double x) {
    const double mu2 = mu * mu;
    if (x < 2.0) {
        const double x2 = 0.5 * x;
        const double pimu = std::numbers::pi * mu;
        const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
        double d = -std::log(x2);
        double e = mu * d;
        const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
        const TemmeGammas g = temme_gammas(mu);
        double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
        double sum = ff;
        e = std::exp(e);
        double p = 0.5 * e / g.gampl;
        double q = 0.5 / (e * g.gammi);
        double c = 1.0;
        d = x2 * x2;
        double sum1 = p;
        for (int i = 1; i <= kMaxIter; ++i) {
            ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
            c *= d / i;
            p /= (i - mu);
            q /= (i + mu);
            const double del = c * ff;
            sum += del;
            sum1 += c * (p - i * ff);
            if (std::abs(del) < std::abs(sum) * kEps) break;
        }
        const double scale = std::exp(x);
        return {sum * scale, sum1 * (2.0 / x) * scale};
    }
    // Steed's continued fraction.
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= kMaxIter; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) break;
    }
    h = a1 * h;
    const double kmu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    return {kmu, kmu * (mu + x + 0.5 - h) / x};
}

struct LogBessel {
    double log_k;  // log K_nu(x)
    double ratio;  // K_{nu+1}(x) / K_nu(x)
};

LogBessel log_bessel_k_with_ratio(double nu, double x) {
    nu = std::abs(nu);
    const double n = std::floor(nu + 0.5);
    const double mu = nu - n;
    auto [k0, k1] = scaled_bessel_k_pair(mu, x);
    double log_scale = 0.0;
    const auto steps = static_cast<long>(n);
    for (long i = 1; i <= steps; ++i) {
        const double k2 = 2.0 * (mu + static_cast<double>(i)) / x * k1 + k0;
        k0 = k1;
        k1 = k2;
        if (k1 > 1e250) {
            log_scale += std::log(k1);
            k0 /= k1;
            k1 = 1.0;
        }
    }
    return {std::log(k0) + log_scale - x, k1 / k0};
}

}  // namespace

double log_bessel_k(double nu, double x) {
    if (!(x > 0.0)) throw ConfigError("log_bessel_k needs x > 0");
    return log_bessel_k_with_ratio(nu, x).log_k;
}

double gig_mean(double p, double a, double b) {
    if (!(a > 0.0) || !(b >= 0.0) || !std::isfinite(p)) {
        std::ostringstream msg;
        msg << "gig_mean: invalid parameters p=" << p << " a=" << a << " b=" << b;
        throw ConfigError(msg.str());
    }
    if (b == 0.0) {
        if (p <= 0.0) throw ConfigError("gig_mean: mean undefined for b = 0 and p <= 0");
        return 2.0 * p / a;
    }
    const double omega = std::sqrt(a * b);
    const double scale = std::sqrt(b / a);
    double ratio;
    if (p >= 0.0) {
        ratio = log_bessel_k_with_ratio(p, omega).ratio;
    } else if (p <= -1.0) {
        // K_{p+1} / K_p = K_{|p|-1} / K_{|p|}
        ratio = 1.0 / log_bessel_k_with_ratio(-p - 1.0, omega).ratio;
    } else {
        ratio = std::exp(log_bessel_k_with_ratio(p + 1.0, omega).log_k - log_bessel_k_with_ratio(-p, omega).log_k);
    }
    return scale * ratio;
}

}  // namespace sarvb
