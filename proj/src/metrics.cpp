#include "sarvb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sarvb {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        std::ostringstream msg;
        msg << what << ": shapes differ (" << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x" << b.cols()
            << ")";
        throw DimensionError(msg.str());
    }
}

}  // namespace

double corr2(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "corr2");
    if (a.size() == 0) throw DimensionError("corr2: empty matrices");
    const Eigen::ArrayXXd ac = a.array() - a.mean();
    const Eigen::ArrayXXd bc = b.array() - b.mean();
    const double saa = ac.square().sum();
    const double sbb = bc.square().sum();
    if (!(saa > 0.0) || !(sbb > 0.0)) throw DataError("corr2: constant matrix has no correlation");
    return (ac * bc).sum() / std::sqrt(saa * sbb);
}

double ssim(const Matrix& a, const Matrix& b, const SsimParams& params) {
    require_same_shape(a, b, "ssim");
    if (a.size() == 0) throw DimensionError("ssim: empty matrices");
    const Index rows = params.global ? a.rows() : params.window;
    const Index cols = params.global ? a.cols() : params.window;
    if (params.window < 1) throw ConfigError("ssim: window must be positive");
    if (a.rows() < rows || a.cols() < cols) {
        std::ostringstream msg;
        msg << "ssim: " << a.rows() << "x" << a.cols() << " matrix is smaller than the " << rows << "x" << cols
            << " window";
        throw DimensionError(msg.str());
    }

    const double range = std::max(a.maxCoeff(), b.maxCoeff()) - std::min(a.minCoeff(), b.minCoeff());
    if (range == 0.0) return 1.0;  // both matrices are the same constant
    const double c1 = (params.k1 * range) * (params.k1 * range);
    const double c2 = (params.k2 * range) * (params.k2 * range);

    Matrix weights(rows, cols);
    if (params.gaussian && !params.global) {
        const double cr = 0.5 * static_cast<double>(rows - 1);
        const double cc = 0.5 * static_cast<double>(cols - 1);
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < cols; ++c) {
                const double dr = r - cr;
                const double dc = c - cc;
                weights(r, c) = std::exp(-(dr * dr + dc * dc) / (2.0 * params.sigma * params.sigma));
            }
    } else {
        weights.setOnes();
    }
    weights /= weights.sum();

    double total = 0.0;
    Index count = 0;
    for (Index i = 0; i + rows <= a.rows(); ++i) {
        for (Index j = 0; j + cols <= a.cols(); ++j) {
            const auto wa = a.block(i, j, rows, cols).array();
            const auto wb = b.block(i, j, rows, cols).array();
            const auto w = weights.array();
            const double mu_a = (w * wa).sum();
            const double mu_b = (w * wb).sum();
            const double var_a = (w * wa * wa).sum() - mu_a * mu_a;
            const double var_b = (w * wb * wb).sum() - mu_b * mu_b;
            const double cov = (w * wa * wb).sum() - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                     ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

Matrix EffectsMatrix::direct_matrix() const {
    Matrix m = Matrix::Zero(values.rows(), values.cols());
    m.diagonal() = values.diagonal();
    return m;
}

Matrix EffectsMatrix::indirect_matrix() const {
    Matrix m = values;
    m.diagonal().setZero();
    return m;
}

Matrix leontief_inverse(const WeightsMatrix& w) {
    const Index n = w.size();
    Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(n, n) - w.matrix());
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        std::ostringstream msg;
        msg << "I - W is numerically singular (reciprocal condition estimate " << rcond << ")";
        throw NumericalError(msg.str());
    }
    return lu.inverse();
}

EffectsMatrix effects_matrix(const WeightsMatrix& w, const CoefficientMatrix& theta, Index regressor) {
    if (theta.n_units() != w.size()) throw DimensionError("theta rows differ from W size");
    if (regressor < 0 || regressor >= theta.k_regressors()) {
        std::ostringstream msg;
        msg << "regressor index " << regressor << " outside [0, " << theta.k_regressors() << ")";
        throw ConfigError(msg.str());
    }
    EffectsMatrix e;
    e.regressor = regressor;
    e.values = leontief_inverse(w) * theta.matrix().col(regressor).asDiagonal();
    return e;
}

FactorMatch match_factors(const Matrix& f_true, const Matrix& f_est) {
    require_same_shape(f_true, f_est, "match_factors");
    const Index l = f_true.cols();
    auto centre = [](const Matrix& f) {
        Matrix c = f.rowwise() - f.colwise().mean();
        for (Index q = 0; q < c.cols(); ++q) {
            const double norm = c.col(q).norm();
            if (!(norm > 0.0)) throw DataError("match_factors: constant factor column");
            c.col(q) /= norm;
        }
        return c;
    };
    const Matrix corr = centre(f_true).transpose() * centre(f_est);  // l x l

    FactorMatch m;
    m.abs_corr = Vector::Zero(l);
    m.sign = Vector::Ones(l);
    m.assignment.assign(static_cast<std::size_t>(l), -1);
    std::vector<bool> used_true(static_cast<std::size_t>(l), false);
    std::vector<bool> used_est(static_cast<std::size_t>(l), false);
    for (Index step = 0; step < l; ++step) {
        double best = -1.0;
        Index bt = -1;
        Index be = -1;
        for (Index q = 0; q < l; ++q) {
            if (used_true[static_cast<std::size_t>(q)]) continue;
            for (Index e = 0; e < l; ++e) {
                if (used_est[static_cast<std::size_t>(e)]) continue;
                if (std::abs(corr(q, e)) > best) {
                    best = std::abs(corr(q, e));
                    bt = q;
                    be = e;
                }
            }
        }
        used_true[static_cast<std::size_t>(bt)] = true;
        used_est[static_cast<std::size_t>(be)] = true;
        m.assignment[static_cast<std::size_t>(bt)] = be;
        m.abs_corr[bt] = best;
        m.sign[bt] = corr(bt, be) < 0.0 ? -1.0 : 1.0;
    }
    return m;
}

namespace {

SimilarityPair compare(const Matrix& truth, const Matrix& est, const SsimParams& params) {
    return {corr2(truth, est), ssim(truth, est, params)};
}

void finish_block(SimilarityBlock& block, const SsimParams& params) {
    block.of_mean = compare(block.truth, block.mean_estimate, params);
    double c = 0.0;
    double s = 0.0;
    for (const SimilarityPair& p : block.per_replication) {
        c += p.corr2;
        s += p.ssim;
    }
    const auto reps = static_cast<double>(block.per_replication.size());
    block.mean_of_replications = {c / reps, s / reps};
}

}  // namespace

SimilarityReport similarity_summary(const WeightsMatrix& w_true, const CoefficientMatrix& theta_true,
                                    const std::vector<EstimatePair>& estimates, Index regressor,
                                    const SsimParams& params) {
    if (estimates.empty()) throw ConfigError("similarity_summary needs at least one replication");
    const Index n = w_true.size();
    const EffectsMatrix true_effects = effects_matrix(w_true, theta_true, regressor);

    SimilarityReport report;
    report.weights.truth = w_true.matrix();
    report.direct.truth = true_effects.direct_matrix();
    report.indirect.truth = true_effects.indirect_matrix();
    Matrix w_sum = Matrix::Zero(n, n);
    Matrix theta_sum = Matrix::Zero(n, theta_true.k_regressors());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const EstimatePair& est : estimates) {
        w_sum += est.w.matrix();
        theta_sum += est.theta.matrix();
        report.weights.per_replication.push_back(compare(report.weights.truth, est.w.matrix(), params));
        try {
            const EffectsMatrix e = effects_matrix(est.w, est.theta, regressor);
            report.direct.per_replication.push_back(compare(report.direct.truth, e.direct_matrix(), params));
            report.indirect.per_replication.push_back(compare(report.indirect.truth, e.indirect_matrix(), params));
        } catch (const NumericalError&) {
            report.direct.per_replication.push_back({nan, nan});
            report.indirect.per_replication.push_back({nan, nan});
        }
    }
    const auto reps = static_cast<double>(estimates.size());
    const WeightsMatrix w_mean(w_sum / reps);
    const CoefficientMatrix theta_mean(theta_sum / reps);
    const EffectsMatrix mean_effects = effects_matrix(w_mean, theta_mean, regressor);
    report.weights.mean_estimate = w_mean.matrix();
    report.direct.mean_estimate = mean_effects.direct_matrix();
    report.indirect.mean_estimate = mean_effects.indirect_matrix();
    finish_block(report.weights, params);
    finish_block(report.direct, params);
    finish_block(report.indirect, params);
    return report;
}

}  // namespace sarvb
