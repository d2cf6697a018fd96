#include "sarvb/metrics.hpp"

#include "support.hpp"

#include "doctest.h"

#include <cmath>

using namespace sarvb;

namespace {

// Zhou et al. per-window SSIM with uniform weights and two-pass moments,
// averaged over every window position.
double reference_ssim(const Matrix& a, const Matrix& b, int win) {
    double hi = a(0, 0);
    double lo = a(0, 0);
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) {
            hi = std::max({hi, a(i, j), b(i, j)});
            lo = std::min({lo, a(i, j), b(i, j)});
        }
    const double l = hi - lo;
    const double c1 = (0.01 * l) * (0.01 * l);
    const double c2 = (0.03 * l) * (0.03 * l);
    double sum = 0.0;
    int windows = 0;
    for (Index r0 = 0; r0 + win <= a.rows(); ++r0) {
        for (Index s0 = 0; s0 + win <= a.cols(); ++s0) {
            const double n = win * win;
            double ma = 0.0;
            double mb = 0.0;
            for (int r = 0; r < win; ++r)
                for (int s = 0; s < win; ++s) {
                    ma += a(r0 + r, s0 + s) / n;
                    mb += b(r0 + r, s0 + s) / n;
                }
            double va = 0.0;
            double vb = 0.0;
            double cab = 0.0;
            for (int r = 0; r < win; ++r)
                for (int s = 0; s < win; ++s) {
                    const double da = a(r0 + r, s0 + s) - ma;
                    const double db = b(r0 + r, s0 + s) - mb;
                    va += da * da / n;
                    vb += db * db / n;
                    cab += da * db / n;
                }
            sum += (2 * ma * mb + c1) * (2 * cab + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++windows;
        }
    }
    return sum / windows;
}

Matrix neumann_effects(const Matrix& w, const Vector& theta_r) {
    const Index n = w.rows();
    Matrix term = Matrix::Identity(n, n);
    Matrix acc = term;
    for (int p = 1; p <= 50; ++p) {
        term = term * w;
        acc += term;
    }
    return acc * theta_r.asDiagonal();
}

}  // namespace

TEST_CASE("corr2 identities") {
    Rng rng(1);
    const Matrix a = test::normal_matrix(5, 7, rng);
    const Matrix b = test::normal_matrix(5, 7, rng);
    CHECK(corr2(a, a) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(corr2(a, (3.0 - a.array()).matrix()) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(corr2(a, b) == doctest::Approx(corr2(b, a)).epsilon(1e-15));
    CHECK(std::abs(corr2(a, b)) <= 1.0);
    CHECK(corr2((2.5 * a.array() + 4.0).matrix(), b) == doctest::Approx(corr2(a, b)).epsilon(1e-12));
}

TEST_CASE("corr2 by hand on a 2x2 pair") {
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    Matrix b(2, 2);
    b << 1, 2, 3, 5;
    // means 2.5 and 2.75; deviations (-1.5,-0.5,0.5,1.5) and (-1.75,-0.75,0.25,2.25)
    const double num = 2.625 + 0.375 + 0.125 + 3.375;
    const double den = std::sqrt(5.0 * (3.0625 + 0.5625 + 0.0625 + 5.0625));
    CHECK(corr2(a, b) == doctest::Approx(num / den).epsilon(1e-15));
}

TEST_CASE("corr2 errors") {
    CHECK_THROWS_AS(corr2(Matrix::Ones(2, 2), Matrix::Identity(2, 2)), DataError);
    try {
        corr2(Matrix::Identity(2, 2), Matrix::Identity(3, 3));
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x2") != std::string::npos);
        CHECK(msg.find("3x3") != std::string::npos);
    }
}

TEST_CASE("ssim matches an independent per-window implementation") {
    Rng rng(42);
    const Matrix a = test::normal_matrix(8, 8, rng);
    const Matrix b = a + test::normal_matrix(8, 8, rng, 0.5);
    CHECK(std::abs(ssim(a, b) - reference_ssim(a, b, 8)) < 1e-10);
    const Matrix c = test::normal_matrix(13, 11, rng);
    const Matrix d = test::normal_matrix(13, 11, rng);
    CHECK(std::abs(ssim(c, d) - reference_ssim(c, d, 8)) < 1e-10);
    SsimParams p;
    p.window = 3;
    CHECK(std::abs(ssim(c, d, p) - reference_ssim(c, d, 3)) < 1e-10);
    SsimParams whole;
    whole.global = true;
    const Matrix e = c.topLeftCorner(11, 11);
    const Matrix f = d.topLeftCorner(11, 11);
    CHECK(std::abs(ssim(e, f, whole) - reference_ssim(e, f, 11)) < 1e-10);
}

TEST_CASE("ssim properties") {
    Rng rng(43);
    const Matrix a = test::normal_matrix(10, 10, rng);
    const Matrix b = test::normal_matrix(10, 10, rng);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-14));
    CHECK(ssim(a, (a.array() + 50.0).matrix()) < 1.0);
    SsimParams g;
    g.gaussian = true;
    CHECK(ssim(a, a, g) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ssim(a, b, g) == doctest::Approx(ssim(b, a, g)).epsilon(1e-14));
    SsimParams whole;
    whole.global = true;
    CHECK(ssim(a, a, whole) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ssim(a, b, whole) >= -1.0);
    CHECK_THROWS_AS(ssim(Matrix::Zero(5, 5), Matrix::Zero(5, 5)), DimensionError);
}

TEST_CASE("effects matrix hand cases") {
    const EffectsMatrix z = effects_matrix(WeightsMatrix::zeros(2), CoefficientMatrix((Matrix(2, 1) << 0.5, 0.7).finished()), 0);
    CHECK(z.values.isApprox((Matrix(2, 2) << 0.5, 0, 0, 0.7).finished()));
    CHECK(z.indirect_matrix().isZero(0.0));
    Matrix w(2, 2);
    w << 0, 0.5, 0.5, 0;
    const EffectsMatrix e = effects_matrix(WeightsMatrix(w), CoefficientMatrix(Matrix::Ones(2, 1)), 0);
    Matrix expected(2, 2);
    expected << 4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0;
    CHECK((e.values - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(e.direct() == e.values.diagonal());
    CHECK(e.direct_matrix()(0, 1) == 0.0);
    CHECK(e.indirect_matrix()(1, 1) == 0.0);
    CHECK(e.indirect_matrix()(1, 0) == e.values(1, 0));
}

TEST_CASE("effects matrix matches the Neumann series") {
    Rng rng(44);
    for (int rep = 0; rep < 5; ++rep) {
        Matrix w = test::normal_matrix(15, 15, rng);
        w.diagonal().setZero();
        w *= 0.6 / w.cwiseAbs().rowwise().sum().maxCoeff();
        const Matrix theta = test::normal_matrix(15, 3, rng);
        for (Index r = 0; r < 3; ++r) {
            const EffectsMatrix e = effects_matrix(WeightsMatrix(w), CoefficientMatrix(theta), r);
            CHECK((e.values - neumann_effects(w, theta.col(r))).cwiseAbs().maxCoeff() < 1e-8);
            // recomputable to 1e-10 from (W, theta)
            const Matrix again = (Matrix::Identity(15, 15) - w).inverse() * theta.col(r).asDiagonal();
            CHECK((e.values - again).cwiseAbs().maxCoeff() < 1e-10);
            // direct effects are theta (1 + d_i), d = diag of sum_{p >= 2} W^p
            const Matrix higher = (Matrix::Identity(15, 15) - w).inverse() - Matrix::Identity(15, 15) - w;
            for (Index i = 0; i < 15; ++i)
                CHECK(std::abs(e.values(i, i) - theta(i, r) * (1.0 + higher(i, i))) < 1e-12);
        }
    }
}

TEST_CASE("effects matrix errors") {
    Matrix w(2, 2);
    w << 0, 1, 1, 0;
    CHECK_THROWS_AS(effects_matrix(WeightsMatrix(w), CoefficientMatrix(Matrix::Ones(2, 1)), 0), NumericalError);
    CHECK_THROWS_AS(effects_matrix(WeightsMatrix::zeros(2), CoefficientMatrix(Matrix::Ones(2, 1)), 1), ConfigError);
    CHECK_THROWS_AS(effects_matrix(WeightsMatrix::zeros(3), CoefficientMatrix(Matrix::Ones(2, 1)), 0), DimensionError);
}

TEST_CASE("factor matching") {
    Rng rng(45);
    const Matrix f = test::normal_matrix(30, 3, rng);
    const FactorMatch same = match_factors(f, f);
    CHECK((same.abs_corr.array() - 1.0).abs().maxCoeff() < 1e-14);
    CHECK(same.assignment == std::vector<Index>{0, 1, 2});

    Matrix swapped(30, 2);
    swapped.col(0) = -f.col(1);
    swapped.col(1) = -f.col(0);
    const FactorMatch m = match_factors(f.leftCols(2), swapped);
    CHECK(m.assignment == std::vector<Index>{1, 0});
    CHECK((m.sign.array() == -1.0).all());
    CHECK((m.abs_corr.array() - 1.0).abs().maxCoeff() < 1e-14);

    const Matrix noisy = f + test::normal_matrix(30, 3, rng, 0.8);
    Matrix perturbed(30, 3);
    perturbed.col(0) = -noisy.col(2);
    perturbed.col(1) = noisy.col(0);
    perturbed.col(2) = -noisy.col(1);
    const FactorMatch base = match_factors(f, noisy);
    const FactorMatch moved = match_factors(f, perturbed);
    CHECK((base.abs_corr - moved.abs_corr).cwiseAbs().maxCoeff() < 1e-14);

    Matrix flat = f;
    flat.col(1).setConstant(2.0);
    CHECK_THROWS_AS(match_factors(f, flat), DataError);
}

TEST_CASE("similarity summary with the truth as estimate") {
    Rng rng(46);
    Matrix w = test::normal_matrix(10, 10, rng);
    w.diagonal().setZero();
    w *= 0.5 / w.cwiseAbs().rowwise().sum().maxCoeff();
    const WeightsMatrix wt(w);
    const CoefficientMatrix theta(test::normal_matrix(10, 2, rng));
    const SimilarityReport r = similarity_summary(wt, theta, {{wt, theta}}, 1);
    for (const SimilarityBlock* b : {&r.weights, &r.direct, &r.indirect}) {
        CHECK(b->of_mean.corr2 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(b->of_mean.ssim == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(b->mean_of_replications.corr2 == doctest::Approx(1.0).epsilon(1e-12));
        REQUIRE(b->per_replication.size() == 1);
    }
    CHECK(r.direct.truth(0, 1) == 0.0);
    CHECK(r.indirect.truth(3, 3) == 0.0);
}

TEST_CASE("similarity summary averages W and theta before the effects") {
    Rng rng(47);
    Matrix w = test::normal_matrix(9, 9, rng);
    w.diagonal().setZero();
    w *= 0.4 / w.cwiseAbs().rowwise().sum().maxCoeff();
    const CoefficientMatrix theta(test::normal_matrix(9, 1, rng));
    Matrix w1 = w + test::normal_matrix(9, 9, rng, 0.05);
    w1.diagonal().setZero();
    const Matrix w2 = 2.0 * w - w1;
    const CoefficientMatrix t1(theta.matrix().array() + 0.1);
    const CoefficientMatrix t2(theta.matrix().array() - 0.1);
    const SimilarityReport r = similarity_summary(WeightsMatrix(w), theta, {{WeightsMatrix(w1), t1}, {WeightsMatrix(w2), t2}}, 0);
    CHECK((r.weights.mean_estimate - w).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(r.weights.of_mean.corr2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.direct.of_mean.corr2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.weights.mean_of_replications.corr2 < 1.0);
    CHECK_THROWS_AS(similarity_summary(WeightsMatrix(w), theta, {}, 0), ConfigError);
}

TEST_CASE("singular replications give NaN effects similarities") {
    Matrix w(3, 3);
    w << 0, 0.2, 0.1, 0.3, 0, 0.2, 0.1, 0.1, 0;
    Matrix sing(3, 3);
    sing << 0, 1, 0, 1, 0, 0, 0, 0, 0;
    const CoefficientMatrix theta((Matrix(3, 1) << 1, 2, 3).finished());
    SsimParams p;
    p.window = 3;
    const SimilarityReport r =
        similarity_summary(WeightsMatrix(w), theta, {{WeightsMatrix(w), theta}, {WeightsMatrix(sing), theta}}, 0, p);
    CHECK(std::isnan(r.direct.per_replication[1].corr2));
    CHECK(std::isfinite(r.direct.per_replication[0].corr2));
    CHECK(std::isfinite(r.direct.of_mean.corr2));
}
