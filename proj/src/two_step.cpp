#include "sarvb/two_step.hpp"

#include "sarvb/model.hpp"
#include "sarvb/parallel.hpp"

namespace sarvb {

namespace {

DlPriorConfig lean(DlPriorConfig cfg) {
    // Per-unit covariances are never needed downstream and would cost O(N M^2) memory.
    cfg.keep_covariance = false;
    return cfg;
}

}  // namespace

FirstStagePredictions first_stage(const PanelDataset& panel, const TwoStepConfig& cfg) {
    const PanelDataset& p = panel;
    check_panel(p);
    const DlPriorConfig prior = lean(cfg.stage1);
    prior.validate();

    const Index n = p.n_units;
    FirstStagePredictions out;
    out.y_hat.resize(p.n_periods, n);
    out.fits.resize(static_cast<std::size_t>(n));

    parallel_for(static_cast<std::size_t>(n), cfg.threads, [&](std::size_t i) {
        const auto unit = static_cast<Index>(i);
        const DlRegressionFit fit = fit_dl_regression(p.y.col(unit), p.x, prior, cfg.seed + i);
        out.y_hat.col(unit) = predict(fit, p.x);
        out.fits[i] = {fit.converged, fit.iterations_run, fit.noise_variance_mean()};
    });
    return out;
}

SecondStageDetail second_stage_detailed(const PanelDataset& panel, const FirstStagePredictions& preds,
                                        const TwoStepConfig& cfg) {
    const PanelDataset& p = panel;
    check_panel(p);
    const Index n = p.n_units;
    const Index t = p.n_periods;
    const Index k = p.k_regressors;
    if (preds.y_hat.rows() != t || preds.y_hat.cols() != n)
        throw DimensionError("first-stage predictions do not match the panel");
    const DlPriorConfig prior = lean(cfg.stage2);
    prior.validate();

    const Index m = (n - 1) + k + (cfg.intercept ? 1 : 0);
    Matrix w = Matrix::Zero(n, n);
    Matrix theta(n, k);
    Matrix theta_sd(n, k);
    Vector intercept = Vector::Zero(n);
    Vector sigma2(n);
    std::vector<bool> converged(static_cast<std::size_t>(n));
    std::vector<char> converged_flag(static_cast<std::size_t>(n));

    parallel_for(static_cast<std::size_t>(n), cfg.threads, [&](std::size_t idx) {
        const auto i = static_cast<Index>(idx);
        Matrix design(t, m);
        if (i > 0) design.leftCols(i) = preds.y_hat.leftCols(i);
        if (i + 1 < n) design.middleCols(i, n - 1 - i) = preds.y_hat.rightCols(n - 1 - i);
        design.middleCols(n - 1, k) = p.unit_regressors(i);
        if (cfg.intercept) design.col(m - 1).setOnes();

        const DlRegressionFit fit =
            fit_dl_regression(p.y.col(i), design, prior, cfg.seed + static_cast<std::uint64_t>(n) + idx);
        const Vector& b = fit.beta_mean;
        for (Index j = 0; j < n; ++j) {
            if (j < i) w(i, j) = b[j];
            else if (j > i) w(i, j) = b[j - 1];
        }
        theta.row(i) = b.segment(n - 1, k).transpose();
        theta_sd.row(i) = fit.beta_var.segment(n - 1, k).cwiseSqrt().transpose();
        if (cfg.intercept) intercept[i] = b[m - 1];
        sigma2[i] = fit.noise_variance_mean();
        converged_flag[idx] = fit.converged ? 1 : 0;
    });

    for (std::size_t i = 0; i < converged.size(); ++i) converged[i] = converged_flag[i] != 0;

    SecondStageDetail out;
    SarEstimate& est = out.estimate;
    est.w_hat = WeightsMatrix(std::move(w));
    est.theta_hat = CoefficientMatrix(std::move(theta));
    est.intercept_hat = std::move(intercept);
    est.residuals = structural_residuals(p.y, p.x, est.w_hat, est.theta_hat, est.intercept_hat);
    est.sigma2_hat = std::move(sigma2);
    est.converged_stage2 = std::move(converged);
    est.converged_stage1.reserve(preds.fits.size());
    for (const FitSummary& f : preds.fits) est.converged_stage1.push_back(f.converged);
    out.theta_sd = std::move(theta_sd);
    return out;
}

SarEstimate second_stage(const PanelDataset& panel, const FirstStagePredictions& preds, const TwoStepConfig& cfg) {
    return second_stage_detailed(panel, preds, cfg).estimate;
}

SarEstimate estimate(const PanelDataset& panel, const TwoStepConfig& cfg) {
    return second_stage(panel, first_stage(panel, cfg), cfg);
}

}  // namespace sarvb
