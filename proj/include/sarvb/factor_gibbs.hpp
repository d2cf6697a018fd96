#pragma once

#include "sarvb/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace sarvb {

struct FactorGibbsConfig {
    Index l_factors = 1;
    double c_lambda = 1e-3;  // shrinkage of the ordering-invariant prior
    double nu0 = 0.01;       // Gamma prior of the idiosyncratic precisions
    double s0 = 0.01;
    int n_draws = 3000;  // retained draws
    int n_burn = 1000;
    std::uint64_t seed = 0;
    std::optional<BoolMatrix> loading_mask;  // l x N, true = free loading
    bool keep_draws = false;

    void validate(Index n_periods, Index n_units) const;
};

struct FactorPosterior {
    Matrix f_mean;                  // T x l
    Matrix lambda_mean;             // l x N
    Vector sigma2_mean;             // N
    Matrix common_component_mean;   // T x N, posterior mean of F Lambda
    std::vector<Matrix> f_draws;    // aligned draws, only with keep_draws
    std::vector<Matrix> lambda_draws;

    FactorStructure structure(const BoolMatrix& mask) const;
};

/// Gibbs sampler for e = F Lambda + eps with the prior
/// p(F, Lambda) ~ exp(-tr(F'F)/2 - c tr(Lambda'F'F Lambda)/2) and
/// independent Gamma priors on the idiosyncratic precisions.
///
/// One sweep draws every f_t from N(P^-1 Lambda S^-1 e_t, P^-1) with
/// P = I + c Lambda Lambda' + Lambda S^-1 Lambda'; every free part of a
/// loading column from N(m_j, ((s_j^-1 + c) F_S'F_S)^-1) with
/// m_j = s_j^-1 ((s_j^-1 + c) F_S'F_S)^-1 F_S' e_j; then every s_j^-1 from
/// Gamma(nu0 + T/2, s0 + |e_j - F lambda_j|^2 / 2). After the F block the
/// factors are normalised, F'F = T I by symmetric whitening without a mask and
/// f_q'f_q = T per column with one, moving the inverse transform into Lambda
/// so that F Lambda is unchanged. The chain starts from the rank-l truncated SVD of e.
///
/// f_mean and lambda_mean average draws aligned to the starting factors
/// (orthogonal Procrustes without a mask, column signs with one), so they
/// are not blurred by rotation; common_component_mean needs no alignment.
FactorPosterior sample_factors(const Matrix& e_hat, const FactorGibbsConfig& cfg);

struct GaussianConditional {
    Matrix mean;        // one column per conditionally independent block
    Matrix covariance;  // shared by every column
};

/// Full conditional of the factors given Lambda and the precisions s: column
/// t of `mean` is E[f_t | rest].
GaussianConditional factor_conditional(const Matrix& e, const Matrix& lambda, const Vector& precision,
                                       double c_lambda);

/// Full conditional of the free loadings of one unit, given the factor
/// columns those loadings multiply and the unit's precision.
GaussianConditional loading_conditional(const Vector& e_j, const Matrix& f_free, double precision, double c_lambda);

struct VarianceDecomposition {
    Vector residual_share_per_factor;
    Vector total_share_per_factor;
    double residual_share_total = 0.0;
    double total_share_total = 0.0;
};

/// Share of residual variance carried by each factor,
/// sum_j lambda_qj^2 mean_t(f_tq^2) / sum_j mean_t(e_tj^2), and the same shares
/// rescaled to the outcome variance by sum var(e_j) / sum var(y_j). Factors
/// are treated as mutually independent, so totals are plain sums.
VarianceDecomposition variance_decomposition(const FactorPosterior& post, const Matrix& e_hat, const Matrix& y);

/// Loading mask for named unit groups; row q is true for members of group q.
BoolMatrix block_mask(Index n_units, const std::vector<std::vector<Index>>& groups);

}  // namespace sarvb
