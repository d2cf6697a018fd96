#include "sarvb/factor_gibbs.hpp"

#include "sarvb/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace sarvb {

void FactorGibbsConfig::validate(Index n_periods, Index n_units) const {
    if (l_factors < 1) throw ConfigError("l_factors must be positive");
    if (l_factors >= std::min(n_periods, n_units)) {
        std::ostringstream msg;
        msg << "l_factors = " << l_factors << " must be below min(T, N) = " << std::min(n_periods, n_units);
        throw ConfigError(msg.str());
    }
    if (!(c_lambda > 0.0)) throw ConfigError("c_lambda must be positive");
    if (!(nu0 > 0.0) || !(s0 > 0.0)) throw ConfigError("nu0 and s0 must be positive");
    if (n_draws < 1) throw ConfigError("n_draws must be positive");
    if (n_burn < 0) throw ConfigError("n_burn must be non-negative");
    if (loading_mask && (loading_mask->rows() != l_factors || loading_mask->cols() != n_units))
        throw DimensionError("loading mask must be l x N");
}

FactorStructure FactorPosterior::structure(const BoolMatrix& mask) const {
    FactorStructure fs;
    fs.loadings = lambda_mean;
    fs.factors = f_mean;
    fs.loading_mask = mask.size() ? mask : BoolMatrix::Constant(lambda_mean.rows(), lambda_mean.cols(), true);
    return fs;
}

namespace {

[[noreturn]] void not_positive_definite(const char* block, int sweep) {
    std::ostringstream msg;
    msg << "conditional precision of " << block << " not positive definite at sweep " << sweep;
    throw NumericalError(msg.str());
}

// mean + L z for covariance C = L L'.
Vector draw_gaussian(const Eigen::LLT<Matrix>& cov_llt, const Vector& mean, Rng& rng) {
    Vector z(mean.size());
    for (Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return mean + cov_llt.matrixL() * z;
}

Eigen::LLT<Matrix> covariance_factor(const GaussianConditional& g, const char* block, int sweep) {
    Eigen::LLT<Matrix> llt(g.covariance);
    if (llt.info() != Eigen::Success || !g.mean.allFinite()) not_positive_definite(block, sweep);
    return llt;
}

class Chain {
public:
    Chain(const Matrix& e, const FactorGibbsConfig& cfg)
        : e_(e), cfg_(cfg), t_(e.rows()), n_(e.cols()), l_(cfg.l_factors), rng_(cfg.seed, 0x6661637400ULL) {
        mask_ = cfg.loading_mask ? *cfg.loading_mask : BoolMatrix::Constant(l_, n_, true);
        masked_ = cfg.loading_mask.has_value() && !mask_.all();
        initialise();
    }

    void sweep(int index) {
        draw_factors(index);
        normalise_scale();
        draw_loadings(index);
        draw_precisions();
    }

    // Copy of the current (F, Lambda) turned towards the starting factors:
    // an orthogonal Procrustes rotation without a mask, column signs with one.
    std::pair<Matrix, Matrix> aligned() const {
        if (masked_) {
            Matrix f = f_;
            Matrix lambda = lambda_;
            for (Index q = 0; q < l_; ++q) {
                if (f.col(q).dot(reference_.col(q)) < 0.0) {
                    f.col(q) *= -1.0;
                    lambda.row(q) *= -1.0;
                }
            }
            return {std::move(f), std::move(lambda)};
        }
        Eigen::JacobiSVD<Matrix> svd(f_.transpose() * reference_, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Matrix r = svd.matrixU() * svd.matrixV().transpose();
        return {f_ * r, r.transpose() * lambda_};
    }

    const Matrix& f() const { return f_; }
    const Matrix& lambda() const { return lambda_; }
    const Vector& precision() const { return prec_; }

private:
    void initialise() {
        Eigen::BDCSVD<Matrix> svd(e_, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double root_n = std::sqrt(static_cast<double>(n_));
        f_ = svd.matrixU().leftCols(l_) * svd.singularValues().head(l_).asDiagonal() / root_n;
        lambda_ = root_n * svd.matrixV().leftCols(l_).transpose();
        for (Index q = 0; q < l_; ++q)
            for (Index j = 0; j < n_; ++j)
                if (!mask_(q, j)) lambda_(q, j) = 0.0;
        normalise_scale();
        reference_ = f_;
        const Matrix resid = e_ - f_ * lambda_;
        prec_.resize(n_);
        for (Index j = 0; j < n_; ++j) {
            const double v = resid.col(j).squaredNorm() / static_cast<double>(t_);
            const double scale = e_.col(j).squaredNorm() / static_cast<double>(t_);
            prec_[j] = 1.0 / std::max(v, 1e-8 * scale + 1e-12);
        }
    }

    // F'F = T I without a mask (symmetric whitening, F -> F A, Lambda -> A^-1
    // Lambda) and f_q'f_q = T per column with one, where only diagonal A keeps
    // the zeros. F Lambda is unchanged; without this the chain drifts towards
    // degenerate F whenever N > T.
    void normalise_scale() {
        const double td = static_cast<double>(t_);
        if (!masked_) {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(f_.transpose() * f_ / td);
            const Vector ev = eig.eigenvalues();
            if (!(ev.minCoeff() > 0.0)) return;
            const Matrix& v = eig.eigenvectors();
            const Matrix a = v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
            const Matrix a_inv = v * ev.cwiseSqrt().asDiagonal() * v.transpose();
            f_ = f_ * a;
            lambda_ = a_inv * lambda_;
            return;
        }
        for (Index q = 0; q < l_; ++q) {
            const double s = std::sqrt(f_.col(q).squaredNorm() / td);
            if (!(s > 0.0)) continue;
            f_.col(q) /= s;
            lambda_.row(q) *= s;
        }
    }

    void draw_factors(int index) {
        const GaussianConditional g = factor_conditional(e_, lambda_, prec_, cfg_.c_lambda);
        const Eigen::LLT<Matrix> llt = covariance_factor(g, "F", index);
        for (Index t = 0; t < t_; ++t) f_.row(t) = draw_gaussian(llt, g.mean.col(t), rng_).transpose();
    }

    void draw_loadings(int index) {
        for (Index j = 0; j < n_; ++j) {
            std::vector<Index> free;
            for (Index q = 0; q < l_; ++q)
                if (mask_(q, j)) free.push_back(q);
            lambda_.col(j).setZero();
            if (free.empty()) continue;
            const auto nf = static_cast<Index>(free.size());
            Matrix fs(t_, nf);
            for (Index c = 0; c < nf; ++c) fs.col(c) = f_.col(free[static_cast<std::size_t>(c)]);
            const GaussianConditional g = loading_conditional(e_.col(j), fs, prec_[j], cfg_.c_lambda);
            const Vector draw = draw_gaussian(covariance_factor(g, "Lambda", index), g.mean.col(0), rng_);
            for (Index c = 0; c < nf; ++c) lambda_(free[static_cast<std::size_t>(c)], j) = draw[c];
        }
    }

    void draw_precisions() {
        const double shape = cfg_.nu0 + 0.5 * static_cast<double>(t_);
        for (Index j = 0; j < n_; ++j) {
            const double ssr = (e_.col(j) - f_ * lambda_.col(j)).squaredNorm();
            prec_[j] = rng_.gamma(shape, cfg_.s0 + 0.5 * ssr);
        }
    }

    const Matrix& e_;
    const FactorGibbsConfig& cfg_;
    Index t_, n_, l_;
    Rng rng_;
    BoolMatrix mask_;
    bool masked_ = false;
    Matrix f_;
    Matrix lambda_;
    Matrix reference_;
    Vector prec_;
};

}  // namespace

GaussianConditional factor_conditional(const Matrix& e, const Matrix& lambda, const Vector& precision,
                                       double c_lambda) {
    const Index l = lambda.rows();
    if (lambda.cols() != e.cols() || precision.size() != e.cols())
        throw DimensionError("factor conditional: Lambda, precisions and residuals disagree");
    const Matrix weighted = lambda * precision.asDiagonal();  // Lambda S^-1
    Matrix p = Matrix::Identity(l, l) + c_lambda * lambda * lambda.transpose();
    p.noalias() += weighted * lambda.transpose();
    Eigen::LLT<Matrix> llt(p);
    if (llt.info() != Eigen::Success) throw NumericalError("factor conditional precision not positive definite");
    return {llt.solve(weighted * e.transpose()), llt.solve(Matrix::Identity(l, l))};
}

GaussianConditional loading_conditional(const Vector& e_j, const Matrix& f_free, double precision, double c_lambda) {
    if (f_free.rows() != e_j.size()) throw DimensionError("loading conditional: factor rows differ from T");
    const Index nf = f_free.cols();
    Eigen::LLT<Matrix> llt((precision + c_lambda) * (f_free.transpose() * f_free));
    if (llt.info() != Eigen::Success) throw NumericalError("loading conditional precision not positive definite");
    return {llt.solve(precision * (f_free.transpose() * e_j)), llt.solve(Matrix::Identity(nf, nf))};
}

FactorPosterior sample_factors(const Matrix& e_hat, const FactorGibbsConfig& cfg) {
    cfg.validate(e_hat.rows(), e_hat.cols());
    if (!e_hat.allFinite()) throw DataError("residual matrix has non-finite entries");

    const Index t = e_hat.rows();
    const Index n = e_hat.cols();
    const Index l = cfg.l_factors;
    Chain chain(e_hat, cfg);

    FactorPosterior post;
    post.f_mean = Matrix::Zero(t, l);
    post.lambda_mean = Matrix::Zero(l, n);
    post.sigma2_mean = Vector::Zero(n);
    post.common_component_mean = Matrix::Zero(t, n);
    if (cfg.keep_draws) {
        post.f_draws.reserve(static_cast<std::size_t>(cfg.n_draws));
        post.lambda_draws.reserve(static_cast<std::size_t>(cfg.n_draws));
    }

    const int total = cfg.n_burn + cfg.n_draws;
    for (int s = 1; s <= total; ++s) {
        chain.sweep(s);
        if (s <= cfg.n_burn) continue;
        const auto [f, lambda] = chain.aligned();
        post.f_mean += f;
        post.lambda_mean += lambda;
        post.sigma2_mean += chain.precision().cwiseInverse();
        post.common_component_mean.noalias() += chain.f() * chain.lambda();
        if (cfg.keep_draws) {
            post.f_draws.push_back(f);
            post.lambda_draws.push_back(lambda);
        }
    }
    const double inv = 1.0 / static_cast<double>(cfg.n_draws);
    post.f_mean *= inv;
    post.lambda_mean *= inv;
    post.sigma2_mean *= inv;
    post.common_component_mean *= inv;
    return post;
}

VarianceDecomposition variance_decomposition(const FactorPosterior& post, const Matrix& e_hat, const Matrix& y) {
    const Index t = e_hat.rows();
    const Index n = e_hat.cols();
    const Index l = post.lambda_mean.rows();
    if (post.f_mean.rows() != t || post.f_mean.cols() != l || post.lambda_mean.cols() != n)
        throw DimensionError("factor posterior does not match the residual panel");
    if (y.rows() != t || y.cols() != n) throw DimensionError("outcome panel does not match the residual panel");

    const double td = static_cast<double>(t);
    const double resid_power = e_hat.squaredNorm() / td;
    if (!(resid_power > 0.0)) throw DataError("residual variance is zero");

    auto centred_variance_sum = [td](const Matrix& m) {
        return (m.rowwise() - m.colwise().mean()).squaredNorm() / td;
    };
    const double var_e = centred_variance_sum(e_hat);
    const double var_y = centred_variance_sum(y);
    if (!(var_y > 0.0)) throw DataError("outcome variance is zero");
    const double to_total = var_e / var_y;

    VarianceDecomposition out;
    out.residual_share_per_factor.resize(l);
    for (Index q = 0; q < l; ++q) {
        const double factor_power = post.f_mean.col(q).squaredNorm() / td;
        out.residual_share_per_factor[q] = post.lambda_mean.row(q).squaredNorm() * factor_power / resid_power;
    }
    out.total_share_per_factor = out.residual_share_per_factor * to_total;
    out.residual_share_total = out.residual_share_per_factor.sum();
    out.total_share_total = out.total_share_per_factor.sum();
    return out;
}

BoolMatrix block_mask(Index n_units, const std::vector<std::vector<Index>>& groups) {
    BoolMatrix mask = BoolMatrix::Constant(static_cast<Index>(groups.size()), n_units, false);
    for (std::size_t q = 0; q < groups.size(); ++q) {
        for (Index j : groups[q]) {
            if (j < 0 || j >= n_units) throw DataError("group member index out of range");
            mask(static_cast<Index>(q), j) = true;
        }
    }
    return mask;
}

}  // namespace sarvb
