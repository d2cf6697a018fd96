#include "sarvb/dgp.hpp"

#include "sarvb/model.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace sarvb {

void DgpConfig::validate() const {
    if (n_units < 2 || n_periods < 2 || k_regressors < 1) throw ConfigError("DGP needs N >= 2, T >= 2, k >= 1");
    if (q < 1 || 2 * q > n_units - 1) {
        std::ostringstream msg;
        msg << "band half-width q = " << q << " needs 1 <= q and 2q <= N - 1 = " << n_units - 1;
        throw ConfigError(msg.str());
    }
    if (l_factors < 0) throw ConfigError("l_factors must be non-negative");
    if (n_replications < 1) throw ConfigError("n_replications must be positive");
    if (!(rho_low >= 0.0 && rho_low < rho_high && rho_high <= 1.0))
        throw ConfigError("rho range must satisfy 0 <= low < high <= 1");
}

namespace {

constexpr int kMatrixAttempts = 100;
constexpr int kRowAttempts = 1'000'000;
constexpr double kStableRadius = 0.95;

}  // namespace

TrueWeights build_true_weights(const DgpConfig& cfg, Rng& rng) {
    cfg.validate();
    const Index n = cfg.n_units;
    const Index q = cfg.q;
    const Index width = 2 * q;

    std::vector<Index> cols(static_cast<std::size_t>(width));
    Vector z(width);
    for (int attempt = 1; attempt <= kMatrixAttempts; ++attempt) {
        Matrix base = Matrix::Zero(n, n);
        Vector rho(n);
        for (Index i = 0; i < n; ++i) {
            for (Index d = 1; d <= q; ++d) {
                cols[static_cast<std::size_t>(d - 1)] = (i + d) % n;
                cols[static_cast<std::size_t>(q + d - 1)] = (i - d + n) % n;
            }
            bool accepted = false;
            for (int tries = 0; tries < kRowAttempts && !accepted; ++tries) {
                for (Index c = 0; c < width; ++c) z[c] = rng.normal();
                const double row_sum = z.sum();
                const double r = rng.uniform(cfg.rho_low, cfg.rho_high);
                if (std::abs(row_sum) < 1e-6) continue;
                if (r * z.cwiseAbs().sum() / std::abs(row_sum) >= 1.0) continue;
                for (Index c = 0; c < width; ++c) base(i, cols[static_cast<std::size_t>(c)]) = z[c] / row_sum;
                rho[i] = r;
                accepted = true;
            }
            if (!accepted) throw NumericalError("could not draw a row with absolute sum below 1");
        }
        Matrix w = rho.asDiagonal() * base;
        WeightsMatrix wm(std::move(w));
        if (wm.spectral_radius() < kStableRadius) return {std::move(wm), std::move(base), std::move(rho), attempt};
    }
    throw NumericalError("no weights matrix with spectral radius below 0.95 after 100 attempts");
}

DgpTruth build_truth(const DgpConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed, 0);
    TrueWeights tw = build_true_weights(cfg, rng);
    Matrix theta(cfg.n_units, cfg.k_regressors);
    for (Index i = 0; i < theta.rows(); ++i)
        for (Index r = 0; r < theta.cols(); ++r) theta(i, r) = rng.uniform();
    Matrix lambda(cfg.l_factors, cfg.n_units);
    for (Index f = 0; f < lambda.rows(); ++f)
        for (Index j = 0; j < lambda.cols(); ++j) lambda(f, j) = rng.normal();
    return {std::move(tw.w), std::move(tw.base), CoefficientMatrix(std::move(theta)), std::move(lambda),
            std::move(tw.rho)};
}

Replication generate_replication(const DgpConfig& cfg, const DgpTruth& truth, int rep_index,
                                 const ReplicationOptions& opts) {
    cfg.validate();
    if (rep_index < 0) throw ConfigError("replication index must be non-negative");
    const Index n = cfg.n_units;
    const Index t = cfg.n_periods;
    const Index k = cfg.k_regressors;
    const Index l = cfg.l_factors;
    if (truth.w_true.size() != n || truth.theta_true.n_units() != n || truth.theta_true.k_regressors() != k ||
        truth.lambda_true.rows() != l || (l > 0 && truth.lambda_true.cols() != n))
        throw DimensionError("DGP truth does not match the configuration");

    Rng rng(cfg.seed, static_cast<std::uint64_t>(rep_index) + 1);
    Replication rep;
    PanelDataset& p = rep.panel;
    p.n_units = n;
    p.n_periods = t;
    p.k_regressors = k;
    p.x.resize(t, n * k);
    for (Index tt = 0; tt < t; ++tt)
        for (Index c = 0; c < n * k; ++c) p.x(tt, c) = rng.normal();

    rep.factors.resize(t, l);
    for (Index tt = 0; tt < t; ++tt)
        for (Index f = 0; f < l; ++f) rep.factors(tt, f) = rng.normal();

    rep.errors.resize(t, n);
    for (Index tt = 0; tt < t; ++tt)
        for (Index j = 0; j < n; ++j) rep.errors(tt, j) = rng.normal();
    if (opts.zero_noise) rep.errors.setZero();
    if (l > 0) rep.errors.noalias() += rep.factors * truth.lambda_true;

    p.y = simulate_outcomes(truth.w_true, truth.theta_true, p.x, rep.errors);
    p.unit_labels.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) p.unit_labels.push_back("u" + std::to_string(i + 1));
    p.time_labels.reserve(static_cast<std::size_t>(t));
    for (Index tt = 0; tt < t; ++tt) p.time_labels.push_back(std::to_string(tt + 1));
    return rep;
}

}  // namespace sarvb
