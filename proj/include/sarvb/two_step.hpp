#pragma once

#include "sarvb/dl_vb.hpp"
#include "sarvb/types.hpp"

#include <cstdint>
#include <vector>

namespace sarvb {

/// Stage one uses a = 1/M, stage two a = 1/2 unless overridden.
struct TwoStepConfig {
    DlPriorConfig stage1;
    DlPriorConfig stage2 = [] {
        DlPriorConfig c;
        c.a = 0.5;
        return c;
    }();
    bool intercept = false;  // append a column of ones to every stage-two design
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency; results do not depend on it
};

/// Per-regression bookkeeping retained from a D-L fit.
struct FitSummary {
    bool converged = false;
    int iterations = 0;
    double noise_variance = 0.0;
};

struct FirstStagePredictions {
    Matrix y_hat;  // T x N
    std::vector<FitSummary> fits;
};

/// Stage one: every unit's outcome is regressed on the full T x (N k)
/// instrument matrix (all units' regressors, unit-major); y_hat_i = X E[beta].
/// Unit i uses seed cfg.seed + i.
FirstStagePredictions first_stage(const PanelDataset& panel, const TwoStepConfig& cfg);

/// Stage two: unit i regresses y_i on [y_hat_j, j != i | x_i | 1?]. The N - 1
/// spatial coefficients become row i of W (zero diagonal), the next k become
/// row i of theta. Residuals use the observed neighbour outcomes. Unit i
/// uses seed cfg.seed + N + i.
SarEstimate second_stage(const PanelDataset& panel, const FirstStagePredictions& preds, const TwoStepConfig& cfg);

/// first_stage followed by second_stage.
SarEstimate estimate(const PanelDataset& panel, const TwoStepConfig& cfg);

/// Posterior standard deviations of theta from the stage-two fits; filled
/// only when requested because it needs the per-unit variances.
struct SecondStageDetail {
    SarEstimate estimate;
    Matrix theta_sd;  // N x k
};

SecondStageDetail second_stage_detailed(const PanelDataset& panel, const FirstStagePredictions& preds,
                                        const TwoStepConfig& cfg);

}  // namespace sarvb
