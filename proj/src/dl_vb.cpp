#include "sarvb/dl_vb.hpp"

#include "sarvb/special.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sarvb {

void DlPriorConfig::validate() const {
    if (a && !(*a > 0.0)) throw ConfigError("Dirichlet concentration a must be positive");
    if (!(nu0 > 0.0) || !(s0 > 0.0)) throw ConfigError("noise prior nu0 and s0 must be positive");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
}

namespace {

// Floor on E|beta_m|, psi_m and tau; keeps the scale updates away from 0/0.
constexpr double kScaleFloor = 1e-12;
constexpr double kPriorVarFloor = 1e-250;
constexpr double kWeightFloor = 1e-300;

double abs_moment(double mu, double var) {
    if (var <= 0.0) return std::abs(mu);
    return folded_normal_mean(mu, std::sqrt(var));
}

struct GaussianState {
    Vector mean;
    Vector var;
    double trace_xtx_v = 0.0;  // tr(X'X V)
};

// q(beta) given diagonal prior variances and the expected noise precision.
class GaussianBlock {
public:
    GaussianBlock(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y)
        : x_(x), y_(y), dual_(x.cols() > x.rows()) {
        if (!dual_) {
            xtx_.noalias() = x_.transpose() * x_;
            xty_.noalias() = x_.transpose() * y_;
        }
    }

    bool dual() const { return dual_; }

    GaussianState update(const Vector& prior_var, double noise_prec, int iteration, Matrix* full_cov) const {
        return dual_ ? update_dual(prior_var, noise_prec, iteration, full_cov)
                     : update_primal(prior_var, noise_prec, iteration, full_cov);
    }

    Vector ridge(double lambda) const {
        if (!dual_) {
            Matrix p = xtx_;
            p.diagonal().array() += lambda;
            Eigen::LLT<Matrix> llt(p);
            if (llt.info() != Eigen::Success) throw NumericalError("ridge initialisation failed to factorise");
            return llt.solve(xty_);
        }
        Matrix k = x_ * x_.transpose();
        k.diagonal().array() += lambda;
        Eigen::LLT<Matrix> llt(k);
        if (llt.info() != Eigen::Success) throw NumericalError("ridge initialisation failed to factorise");
        return x_.transpose() * llt.solve(y_);
    }

    double trace_xtx() const {
        return dual_ ? x_.squaredNorm() : xtx_.trace();
    }

private:
    [[noreturn]] static void factor_failure(int iteration) {
        std::ostringstream msg;
        msg << "posterior precision not positive definite at iteration " << iteration;
        throw NumericalError(msg.str());
    }

    GaussianState update_primal(const Vector& prior_var, double noise_prec, int iteration, Matrix* full_cov) const {
        const Index m = x_.cols();
        Matrix p = noise_prec * xtx_;
        p.diagonal().array() += prior_var.array().inverse();
        Eigen::LLT<Matrix> llt(p);
        if (llt.info() != Eigen::Success) factor_failure(iteration);
        Matrix v = llt.solve(Matrix::Identity(m, m));
        GaussianState s;
        s.mean = noise_prec * (v * xty_);
        s.var = v.diagonal();
        s.trace_xtx_v = xtx_.cwiseProduct(v).sum();
        if (full_cov) *full_cov = std::move(v);
        return s;
    }

    // V = D - D X' S^-1 X D with S = sigma^2 I + X D X'.
    GaussianState update_dual(const Vector& prior_var, double noise_prec, int iteration, Matrix* full_cov) const {
        const Index t = x_.rows();
        const double sigma2 = 1.0 / noise_prec;
        Matrix s_mat = x_ * prior_var.asDiagonal() * x_.transpose();
        s_mat.diagonal().array() += sigma2;
        Eigen::LLT<Matrix> llt(s_mat);
        if (llt.info() != Eigen::Success) factor_failure(iteration);
        const auto lower = llt.matrixL();
        Matrix b = lower.solve(x_);  // L^-1 X
        GaussianState s;
        s.mean = prior_var.cwiseProduct(x_.transpose() * llt.solve(y_));
        s.var = prior_var - prior_var.cwiseAbs2().cwiseProduct(b.colwise().squaredNorm().transpose());
        s.var = s.var.cwiseMax(prior_var * 1e-15);
        const Matrix linv = lower.solve(Matrix::Identity(t, t));
        s.trace_xtx_v = std::max(0.0, t * sigma2 - sigma2 * sigma2 * linv.squaredNorm());
        if (full_cov) {
            const Matrix bd = b * prior_var.asDiagonal();
            Matrix v = -(bd.transpose() * bd);
            v.diagonal() += prior_var;
            v.diagonal() = v.diagonal().cwiseMax(prior_var * 1e-15);
            *full_cov = std::move(v);
        }
        return s;
    }

    Eigen::Ref<const Matrix> x_;
    Eigen::Ref<const Vector> y_;
    bool dual_;
    Matrix xtx_;
    Vector xty_;
};

}  // namespace

DlRegressionFit fit_dl_regression(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& x,
                                  const DlPriorConfig& cfg, std::uint64_t /*seed*/) {
    cfg.validate();
    const Index t = x.rows();
    const Index m = x.cols();
    if (y.size() != t) throw DimensionError("response length differs from design rows");
    if (t < 2) throw DimensionError("regression needs at least 2 observations");
    if (m < 1) throw DimensionError("regression needs at least 1 regressor");
    if (!x.allFinite() || !y.allFinite()) throw DataError("non-finite value in regression inputs");

    const double a = cfg.a.value_or(1.0 / static_cast<double>(m));
    const double md = static_cast<double>(m);
    const GaussianBlock block(x, y);

    // Initial state.
    const double trace = block.trace_xtx();
    const double lambda = trace > 0.0 ? 1e-3 * trace / md : 1e-3;
    Vector mu = block.ridge(lambda);
    Vector var = Vector::Zero(m);
    const double mean_y = y.mean();
    const double var_y = (y.array() - mean_y).square().sum() / static_cast<double>(t - 1);
    double noise_prec = var_y > 1e-300 ? 1.0 / var_y : 1.0;

    DlRegressionFit fit;
    fit.psi = Vector::Ones(m);
    fit.phi = Vector::Constant(m, 1.0 / md);
    fit.tau = 1.0;
    fit.noise_shape = cfg.nu0 + 0.5 * static_cast<double>(t);
    fit.noise_rate = fit.noise_shape / noise_prec;

    Vector eabs(m);
    Vector weights(m);
    Vector prior_var(m);
    double used_prec = noise_prec;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        for (Index j = 0; j < m; ++j) eabs[j] = std::max(abs_moment(mu[j], var[j]), kScaleFloor);

        for (Index j = 0; j < m; ++j) fit.psi[j] = std::max(eabs[j] / (fit.phi[j] * fit.tau), kScaleFloor);

        for (Index j = 0; j < m; ++j) weights[j] = std::max(gig_mean(a - 1.0, 1.0, 2.0 * eabs[j]), kWeightFloor);
        fit.phi = weights / weights.sum();

        const double tau_b = 2.0 * (eabs.array() / fit.phi.array()).sum();
        fit.tau = std::max(gig_mean(md * a - md, 1.0, tau_b), kScaleFloor);

        prior_var = (fit.psi.array() * fit.phi.array().square() * fit.tau * fit.tau).cwiseMax(kPriorVarFloor);
        GaussianState next = block.update(prior_var, noise_prec, it, nullptr);
        used_prec = noise_prec;

        const double rss = (y - x * next.mean).squaredNorm();
        fit.noise_rate = cfg.s0 + 0.5 * (rss + next.trace_xtx_v);
        noise_prec = fit.noise_shape / fit.noise_rate;

        const double delta = (next.mean - mu).cwiseAbs().maxCoeff();
        mu = std::move(next.mean);
        var = std::move(next.var);
        fit.iterations_run = it;
        if (delta < cfg.tol) {
            fit.converged = true;
            break;
        }
    }

    fit.beta_mean = mu;
    fit.beta_var = var;
    if (cfg.keep_covariance) {
        // Same inputs as the last Gaussian update, so diag(beta_cov) == beta_var.
        Matrix cov;
        block.update(prior_var, used_prec, fit.iterations_run, &cov);
        fit.beta_cov = std::move(cov);
    }
    return fit;
}

Vector predict(const DlRegressionFit& fit, const Eigen::Ref<const Matrix>& x_new) {
    if (x_new.cols() != fit.beta_mean.size()) {
        std::ostringstream msg;
        msg << "predict: design has " << x_new.cols() << " columns, fit has " << fit.beta_mean.size();
        throw DimensionError(msg.str());
    }
    return x_new * fit.beta_mean;
}

}  // namespace sarvb
