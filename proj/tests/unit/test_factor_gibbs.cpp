#include "sarvb/factor_gibbs.hpp"
#include "sarvb/metrics.hpp"

#include "support.hpp"

#include "doctest.h"

#include <cmath>
#include <functional>

using namespace sarvb;

namespace {

struct Moments {
    double mean;
    double var;
};

// Mean and variance of the density exp(log_density) by Simpson's rule on a
// window that covers the mass.
Moments quadrature_moments(const std::function<double(double)>& log_density, double centre, double half_width) {
    const int n = 400000;
    const double lo = centre - half_width;
    const double h = 2.0 * half_width / n;
    double peak = -1e300;
    for (int i = 0; i <= n; i += 100) peak = std::max(peak, log_density(lo + i * h));
    double z = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double v = lo + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double d = w * std::exp(log_density(v) - peak);
        z += d;
        m1 += d * v;
        m2 += d * v * v;
    }
    const double mean = m1 / z;
    return {mean, m2 / z - mean * mean};
}

Matrix one_factor_data(Index t, Index n, double noise, std::uint64_t seed, Matrix* f_out) {
    Rng rng(seed);
    const Matrix f = test::normal_matrix(t, 1, rng);
    const Matrix lambda = test::normal_matrix(1, n, rng);
    if (f_out) *f_out = f;
    return f * lambda + test::normal_matrix(t, n, rng, noise);
}

}  // namespace

TEST_CASE("conditionals match quadrature of the unnormalised densities at T = 3, N = 2, l = 1") {
    Matrix e(3, 2);
    e << 0.7, -1.1, 1.9, 0.4, -0.6, 1.3;
    Matrix f(3, 1);
    f << 0.9, -0.4, 1.6;
    Matrix lambda(1, 2);
    lambda << 1.2, -0.7;
    Vector s(2);
    s << 2.5, 0.8;  // idiosyncratic precisions
    for (double c : {1e-3, 0.5}) {
        CAPTURE(c);
        for (Index j = 0; j < 2; ++j) {
            const auto log_density = [&](double l) {
                double ssr = 0.0;
                for (Index t = 0; t < 3; ++t) ssr += std::pow(e(t, j) - f(t, 0) * l, 2);
                return -0.5 * s[j] * ssr - 0.5 * c * l * l * f.squaredNorm();
            };
            const Moments q = quadrature_moments(log_density, 0.0, 30.0);
            const GaussianConditional g = loading_conditional(e.col(j), f, s[j], c);
            CHECK(std::abs(g.mean(0, 0) - q.mean) < 1e-4);
            CHECK(std::abs(g.covariance(0, 0) - q.var) < 1e-4);
        }
        const GaussianConditional g = factor_conditional(e, lambda, s, c);
        for (Index t = 0; t < 3; ++t) {
            const auto log_density = [&](double v) {
                double acc = -0.5 * v * v - 0.5 * c * v * v * lambda.squaredNorm();
                for (Index j = 0; j < 2; ++j) acc -= 0.5 * s[j] * std::pow(e(t, j) - v * lambda(0, j), 2);
                return acc;
            };
            const Moments q = quadrature_moments(log_density, 0.0, 30.0);
            CHECK(std::abs(g.mean(0, t) - q.mean) < 1e-4);
            CHECK(std::abs(g.covariance(0, 0) - q.var) < 1e-4);
        }
    }
}

TEST_CASE("loading conditional approaches least squares as c vanishes") {
    Rng rng(4);
    const Matrix f = test::normal_matrix(12, 3, rng);
    const Vector e = test::normal_matrix(12, 1, rng);
    const GaussianConditional g = loading_conditional(e, f, 1.7, 1e-10);
    const Vector ls = (f.transpose() * f).ldlt().solve(f.transpose() * e);
    CHECK((g.mean.col(0) - ls).cwiseAbs().maxCoeff() < 1e-6);
    CHECK_THROWS_AS(loading_conditional(Vector::Zero(5), f, 1.0, 1e-3), DimensionError);
}

TEST_CASE("one factor with tiny noise is recovered") {
    Matrix f_true;
    const Matrix e = one_factor_data(50, 20, 1e-3, 7, &f_true);
    FactorGibbsConfig cfg;
    cfg.l_factors = 1;
    cfg.n_draws = 1000;
    cfg.n_burn = 500;
    cfg.seed = 3;
    const FactorPosterior post = sample_factors(e, cfg);
    CHECK(match_factors(f_true, post.f_mean).abs_corr[0] >= 0.99);
    CHECK((post.common_component_mean - e).norm() / e.norm() < 0.01);
    CHECK((post.sigma2_mean.array() > 0.0).all());
    CHECK((post.f_mean * post.lambda_mean - e).norm() / e.norm() < 0.01);
}

TEST_CASE("common component agrees across seeds") {
    Rng rng(15);
    const Matrix f = test::normal_matrix(20, 3, rng);
    const Matrix lambda = test::normal_matrix(3, 30, rng);
    const Matrix e = f * lambda + test::normal_matrix(20, 30, rng);
    FactorGibbsConfig cfg;
    cfg.l_factors = 3;
    cfg.n_draws = 4000;
    cfg.seed = 1;
    const FactorPosterior a = sample_factors(e, cfg);
    cfg.seed = 2;
    const FactorPosterior b = sample_factors(e, cfg);
    const double rel = (a.common_component_mean - b.common_component_mean).norm() / a.common_component_mean.norm();
    CHECK(rel < 0.05);
}

TEST_CASE("masked loadings stay exactly zero in every draw") {
    Rng rng(16);
    const Index n = 9;
    std::vector<std::vector<Index>> groups{{0, 1, 2, 3, 4, 5, 6, 7, 8}, {0, 1, 2, 3}, {4, 5, 6, 7, 8}};
    const BoolMatrix mask = block_mask(n, groups);
    Matrix lambda = test::normal_matrix(3, n, rng);
    for (Index q = 0; q < 3; ++q)
        for (Index j = 0; j < n; ++j)
            if (!mask(q, j)) lambda(q, j) = 0.0;
    const Matrix e = test::normal_matrix(25, 3, rng) * lambda + test::normal_matrix(25, n, rng, 0.3);
    FactorGibbsConfig cfg;
    cfg.l_factors = 3;
    cfg.loading_mask = mask;
    cfg.n_draws = 200;
    cfg.n_burn = 100;
    cfg.keep_draws = true;
    const FactorPosterior post = sample_factors(e, cfg);
    REQUIRE(post.lambda_draws.size() == 200);
    for (const Matrix& draw : post.lambda_draws)
        for (Index q = 0; q < 3; ++q)
            for (Index j = 0; j < n; ++j)
                if (!mask(q, j)) REQUIRE(draw(q, j) == 0.0);
    for (Index q = 0; q < 3; ++q)
        for (Index j = 0; j < n; ++j)
            if (!mask(q, j)) CHECK(post.lambda_mean(q, j) == 0.0);
    CHECK_NOTHROW(post.structure(mask).validate());
}

TEST_CASE("a single free loading") {
    Rng rng(17);
    const Matrix e = test::normal_matrix(10, 5, rng);
    BoolMatrix mask = BoolMatrix::Constant(2, 5, false);
    mask(1, 3) = true;
    FactorGibbsConfig cfg;
    cfg.l_factors = 2;
    cfg.loading_mask = mask;
    cfg.n_draws = 100;
    cfg.n_burn = 50;
    const FactorPosterior post = sample_factors(e, cfg);
    for (Index q = 0; q < 2; ++q)
        for (Index j = 0; j < 5; ++j)
            if (!(q == 1 && j == 3)) CHECK(post.lambda_mean(q, j) == 0.0);
    CHECK(post.lambda_mean(1, 3) != 0.0);
}

TEST_CASE("sampler configuration errors") {
    const Matrix e = Matrix::Ones(6, 4);
    FactorGibbsConfig cfg;
    cfg.l_factors = 4;
    CHECK_THROWS_AS(sample_factors(e, cfg), ConfigError);
    cfg.l_factors = 1;
    cfg.c_lambda = 0.0;
    CHECK_THROWS_AS(sample_factors(e, cfg), ConfigError);
    cfg.c_lambda = 1e-3;
    cfg.loading_mask = BoolMatrix::Constant(2, 4, true);
    CHECK_THROWS_AS(sample_factors(e, cfg), DimensionError);
    cfg.loading_mask.reset();
    Matrix bad = e;
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(sample_factors(bad, cfg), DataError);
}

TEST_CASE("sampler is reproducible") {
    const Matrix e = one_factor_data(15, 8, 0.5, 20, nullptr);
    FactorGibbsConfig cfg;
    cfg.l_factors = 2;
    cfg.n_draws = 50;
    cfg.n_burn = 10;
    cfg.seed = 9;
    CHECK(sample_factors(e, cfg).common_component_mean == sample_factors(e, cfg).common_component_mean);
}

TEST_CASE("variance decomposition limits") {
    Rng rng(21);
    const Matrix f = test::normal_matrix(40, 1, rng);
    const Matrix lambda = test::normal_matrix(1, 6, rng);
    const Matrix e = f * lambda;
    const Matrix y = 2.0 * e + test::normal_matrix(40, 6, rng);
    FactorPosterior post;
    post.f_mean = f;
    post.lambda_mean = lambda;
    const VarianceDecomposition d = variance_decomposition(post, e, y);
    CHECK(d.residual_share_total >= 0.99);
    CHECK(d.residual_share_total == doctest::Approx(d.residual_share_per_factor.sum()));
    CHECK(d.total_share_total < d.residual_share_total);

    post.lambda_mean.setZero();
    const VarianceDecomposition z = variance_decomposition(post, e, y);
    CHECK(z.residual_share_total == 0.0);
    CHECK(z.total_share_total == 0.0);

    CHECK_THROWS_AS(variance_decomposition(post, Matrix::Zero(40, 6), y), DataError);
    CHECK_THROWS_AS(variance_decomposition(post, e, Matrix::Zero(40, 5)), DimensionError);
}

TEST_CASE("block mask") {
    const BoolMatrix m = block_mask(4, {{0, 1, 2, 3}, {2}});
    CHECK(m.rows() == 2);
    CHECK(m.row(0).all());
    CHECK(m.row(1).count() == 1);
    CHECK(m(1, 2));
    CHECK_THROWS_AS(block_mask(4, {{5}}), DataError);
}
