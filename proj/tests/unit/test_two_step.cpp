#include "sarvb/dgp.hpp"
#include "sarvb/metrics.hpp"
#include "sarvb/model.hpp"
#include "sarvb/two_step.hpp"

#include "support.hpp"

#include "doctest.h"

using namespace sarvb;

namespace {

// W = 0, theta from U(0,1), noise sd 0.1.
PanelDataset null_w_panel(Index n, Index t, Index k, std::uint64_t seed, Matrix* theta_out = nullptr) {
    Rng rng(seed);
    const Matrix x = test::normal_matrix(t, n * k, rng);
    Matrix theta(n, k);
    for (Index i = 0; i < n; ++i)
        for (Index r = 0; r < k; ++r) theta(i, r) = rng.uniform();
    const Matrix e = test::normal_matrix(t, n, rng, 0.1);
    const Matrix y = simulate_outcomes(WeightsMatrix::zeros(n), CoefficientMatrix(theta), x, e);
    if (theta_out) *theta_out = theta;
    return test::make_panel(y, x, k);
}

double corr(const Vector& a, const Vector& b) {
    const Vector ac = a.array() - a.mean();
    const Vector bc = b.array() - b.mean();
    return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

struct SmallMc {
    DgpConfig cfg;
    DgpTruth truth;
    Replication rep;
};

SmallMc small_mc(std::uint64_t seed) {
    SmallMc s;
    s.cfg.n_units = 12;
    s.cfg.q = 3;
    s.cfg.n_periods = 30;
    s.cfg.seed = seed;
    s.truth = build_truth(s.cfg);
    s.rep = generate_replication(s.cfg, s.truth, 0);
    return s;
}

}  // namespace

TEST_CASE("first stage tracks the exogenous signal when W = 0") {
    Matrix theta;
    const PanelDataset p = null_w_panel(5, 200, 2, 3, &theta);
    const FirstStagePredictions pred = first_stage(p, TwoStepConfig{});
    const Matrix signal = exogenous_contribution(CoefficientMatrix(theta), p.x);
    for (Index i = 0; i < 5; ++i) CHECK(corr(pred.y_hat.col(i), signal.col(i)) >= 0.95);
    CHECK(pred.fits.size() == 5);
}

TEST_CASE("second stage finds no spatial weights when W = 0") {
    Matrix theta;
    const PanelDataset p = null_w_panel(5, 200, 2, 4, &theta);
    const SarEstimate est = estimate(p, TwoStepConfig{});
    CHECK(est.w_hat.matrix().cwiseAbs().maxCoeff() <= 0.1);
    CHECK(test::rmse(est.theta_hat.matrix(), theta) < 0.05);
}

TEST_CASE("zero outcomes give zero predictions") {
    PanelDataset p = null_w_panel(4, 30, 2, 5);
    p.y.setZero();
    const FirstStagePredictions pred = first_stage(p, TwoStepConfig{});
    CHECK(pred.y_hat.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("single-unit panel reduces to one D-L regression") {
    const PanelDataset p = null_w_panel(1, 40, 3, 6);
    const TwoStepConfig cfg;
    const FirstStagePredictions pred = first_stage(p, cfg);
    DlPriorConfig prior = cfg.stage1;
    const DlRegressionFit fit = fit_dl_regression(p.y.col(0), p.x, prior);
    CHECK((pred.y_hat.col(0) - p.x * fit.beta_mean).cwiseAbs().maxCoeff() < 1e-12);
    const SarEstimate est = second_stage(p, pred, cfg);
    CHECK(est.w_hat.size() == 1);
    CHECK(est.w_hat(0, 0) == 0.0);
}

TEST_CASE("zero diagonal, stored residuals and convergence flags") {
    const SmallMc s = small_mc(8);
    TwoStepConfig cfg;
    cfg.intercept = true;
    const SarEstimate est = estimate(s.rep.panel, cfg);
    CHECK(est.w_hat.matrix().diagonal().isZero(0.0));
    const Matrix again =
        structural_residuals(s.rep.panel.y, s.rep.panel.x, est.w_hat, est.theta_hat, est.intercept_hat);
    CHECK((again - est.residuals).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(est.converged_stage1.size() == 12);
    CHECK(est.converged_stage2.size() == 12);
    CHECK(est.sigma2_hat.size() == 12);
    CHECK((est.sigma2_hat.array() > 0.0).all());
}

TEST_CASE("results are bit-identical across thread counts") {
    const SmallMc s = small_mc(9);
    TwoStepConfig cfg;
    cfg.seed = 123;
    cfg.threads = 1;
    const SarEstimate one = estimate(s.rep.panel, cfg);
    for (int threads : {2, 3, 8}) {
        cfg.threads = threads;
        const SarEstimate many = estimate(s.rep.panel, cfg);
        CHECK(many.w_hat.matrix() == one.w_hat.matrix());
        CHECK(many.theta_hat.matrix() == one.theta_hat.matrix());
        CHECK(many.residuals == one.residuals);
        CHECK(many.sigma2_hat == one.sigma2_hat);
    }
}

TEST_CASE("common rescaling of the data rescales residuals") {
    const SmallMc s = small_mc(10);
    const SarEstimate base = estimate(s.rep.panel, TwoStepConfig{});
    PanelDataset scaled = s.rep.panel;
    const double c = 3.0;
    scaled.y *= c;
    scaled.x *= c;
    const SarEstimate est = estimate(scaled, TwoStepConfig{});
    const double r0 = corr2(base.w_hat.matrix(), s.truth.w_true.matrix());
    const double r1 = corr2(est.w_hat.matrix(), s.truth.w_true.matrix());
    CHECK(std::abs(r0 - r1) < 0.01);
    CHECK((est.residuals - c * base.residuals).norm() / (c * base.residuals.norm()) < 0.01);
}

TEST_CASE("intercepts are estimated when requested") {
    Matrix theta;
    PanelDataset p = null_w_panel(5, 200, 2, 11, &theta);
    Vector c(5);
    c << 1.0, -2.0, 0.5, 3.0, -1.0;
    p.y.rowwise() += c.transpose();
    TwoStepConfig cfg;
    cfg.intercept = true;
    const SarEstimate est = estimate(p, cfg);
    CHECK((est.intercept_hat - c).cwiseAbs().maxCoeff() < 0.1);
    CHECK(test::rmse(est.theta_hat.matrix(), theta) < 0.05);
    TwoStepConfig plain;
    CHECK(estimate(null_w_panel(5, 50, 2, 12), plain).intercept_hat.isZero(0.0));
}

TEST_CASE("prediction shape mismatch") {
    const PanelDataset p = null_w_panel(4, 30, 2, 13);
    FirstStagePredictions bad;
    bad.y_hat = Matrix::Zero(30, 3);
    CHECK_THROWS_AS(second_stage(p, bad, TwoStepConfig{}), DimensionError);
}
