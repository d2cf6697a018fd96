#pragma once

#include "sarvb/rng.hpp"
#include "sarvb/types.hpp"

#include <cstdint>

namespace sarvb {

/// Monte Carlo design: circular q-ahead/q-behind base, signed row
/// standardisation, unit-specific spatial parameters.
struct DgpConfig {
    Index n_units = 30;
    Index n_periods = 20;
    Index k_regressors = 2;
    Index q = 13;
    Index l_factors = 0;
    int n_replications = 1;
    std::uint64_t seed = 0;
    double rho_low = 0.0;  // rho_i ~ U(rho_low, rho_high), open interval
    double rho_high = 1.0;

    void validate() const;
};

/// Parameters held fixed across replications.
struct DgpTruth {
    WeightsMatrix w_true;
    Matrix base;  // row-standardised band matrix before scaling by rho
    CoefficientMatrix theta_true;
    Matrix lambda_true;  // l x N
    Vector rho;
};

struct TrueWeights {
    WeightsMatrix w;
    Matrix base;
    Vector rho;
    int attempts = 0;  // whole-matrix draws used
};

/// Draws W in three steps: band adjacency (unit i linked to i+-1..i+-q mod
/// N), N(0,1) entries divided by their signed row sum, then row i scaled by
/// rho_i. A row is redrawn (entries and rho_i together) when its signed sum
/// is below 1e-6 in magnitude or when its absolute sum after scaling reaches
/// 1, so ||W||_inf < 1. The whole matrix is redrawn while its spectral radius
/// is at least 0.95, up to 100 attempts.
TrueWeights build_true_weights(const DgpConfig& cfg, Rng& rng);

/// Weights plus theta ~ U(0,1) (N x k) and Lambda ~ N(0,1) (l x N), all from
/// stream 0 of cfg.seed.
DgpTruth build_truth(const DgpConfig& cfg);

struct Replication {
    PanelDataset panel;
    Matrix factors;  // T x l, empty when l = 0
    Matrix errors;   // T x N, e = F Lambda + eps
};

struct ReplicationOptions {
    bool zero_noise = false;  // debug hook: eps = 0 (factors still drawn)
};

/// One replication: x, f and eps from N(0,1) drawn, in that order, from the
/// stream (cfg.seed, rep_index + 1); outcomes solve (I - W) y_t = x_t theta + e_t.
Replication generate_replication(const DgpConfig& cfg, const DgpTruth& truth, int rep_index,
                                 const ReplicationOptions& opts = {});

}  // namespace sarvb
