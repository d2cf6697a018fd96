#pragma once

#include "sarvb/types.hpp"

#include <vector>

namespace sarvb {

/// Pearson correlation of two equally shaped matrices treated as flat arrays
/// (grand-mean centred). Throws DataError when either matrix is constant.
double corr2(const Matrix& a, const Matrix& b);

struct SsimParams {
    Index window = 8;       // side of the square sliding window, unit stride
    double k1 = 0.01;
    double k2 = 0.03;
    bool gaussian = false;  // Gaussian window weights (sigma = 1.5) instead of uniform
    double sigma = 1.5;
    bool global = false;    // one window spanning the whole matrix
};

/// Mean structural similarity over sliding windows. The dynamic range is
/// max - min over both matrices jointly; C1 = (k1 L)^2, C2 = (k2 L)^2.
double ssim(const Matrix& a, const Matrix& b, const SsimParams& params = {});

/// (I - W)^-1 diag(theta_{1r}, ..., theta_{Nr}) for one regressor.
struct EffectsMatrix {
    Index regressor = 0;  // zero-based
    Matrix values;        // N x N

    Vector direct() const { return values.diagonal(); }
    Matrix direct_matrix() const;    // diagonal kept, off-diagonal zero
    Matrix indirect_matrix() const;  // diagonal zeroed
};

/// Explicit (I - W)^-1; the full inverse is the object of interest here.
Matrix leontief_inverse(const WeightsMatrix& w);

EffectsMatrix effects_matrix(const WeightsMatrix& w, const CoefficientMatrix& theta, Index regressor);

struct FactorMatch {
    Vector abs_corr;                // per true factor
    std::vector<Index> assignment;  // true factor q -> estimated column
    Vector sign;                    // +1 / -1 of the matched correlation
};

/// Greedy matching on |correlation|: repeatedly pair the unused true and
/// estimated columns with the largest absolute correlation.
FactorMatch match_factors(const Matrix& f_true, const Matrix& f_est);

struct SimilarityPair {
    double corr2 = 0.0;
    double ssim = 0.0;
};

/// Similarity of one matrix type, on the replication mean (headline) and
/// per replication. Per-replication effects entries are NaN when that
/// replication's I - W is numerically singular.
struct SimilarityBlock {
    SimilarityPair of_mean;
    std::vector<SimilarityPair> per_replication;
    SimilarityPair mean_of_replications;
    Matrix mean_estimate;
    Matrix truth;
};

struct SimilarityReport {
    SimilarityBlock weights;
    SimilarityBlock direct;
    SimilarityBlock indirect;
};

struct EstimatePair {
    WeightsMatrix w;
    CoefficientMatrix theta;
};

/// Compares estimates across replications with the truth: W directly, and the
/// direct / indirect parts of the effects matrix of `regressor`. Headline
/// values use the mean W and mean theta across replications; the headline
/// effects matrix is built from those means.
SimilarityReport similarity_summary(const WeightsMatrix& w_true, const CoefficientMatrix& theta_true,
                                    const std::vector<EstimatePair>& estimates, Index regressor = 0,
                                    const SsimParams& params = {});

}  // namespace sarvb
