#pragma once

#include "sarvb/csv.hpp"
#include "sarvb/dgp.hpp"
#include "sarvb/factor_gibbs.hpp"
#include "sarvb/metrics.hpp"
#include "sarvb/two_step.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sarvb {

struct RunConfig {
    DgpConfig dgp;
    TwoStepConfig two_step;
    FactorGibbsConfig factors;  // l_factors is overwritten by the workflow
    SsimParams ssim;
    Index effects_regressor = 0;  // zero-based
    bool estimate_from_truth = false;  // simulate: skip estimation, use the truth as the estimate
    int threads = 0;
    std::filesystem::path out_dir = "out";
};

struct MonteCarloResult {
    DgpTruth truth;
    SimilarityReport similarity;
    Matrix factor_abs_corr;       // reps x l, matched |corr(f_true, f_mean)|
    Vector factor_abs_corr_mean;  // l
    std::vector<int> stage1_nonconverged;  // per replication
    std::vector<int> stage2_nonconverged;
};

/// DGP truth, then per replication: draw, two-step estimate, optional factor
/// chain on the residuals, similarity bookkeeping. Replications run in
/// parallel with single-threaded estimation inside, so results do not depend
/// on cfg.threads.
MonteCarloResult run_monte_carlo(const RunConfig& cfg);

/// Truth and mean-estimate matrices, per-replication similarities and a
/// one-row summary table under cfg.out_dir.
void write_monte_carlo(const MonteCarloResult& result, const RunConfig& cfg);

MonteCarloResult cmd_simulate(const RunConfig& cfg);

/// One named factor block; `all_units` marks the factor that loads on every unit.
struct FactorBlock {
    std::string name;
    bool all_units = false;
    std::vector<std::string> units;
};

struct EmpiricalSpec {
    std::filesystem::path panel;
    std::vector<std::string> regressors;  // empty = every regressor column
    int lags = 1;                         // lags of y added as regressors
    std::string initial_level;            // column whose first-period value is a regressor; empty = none
    bool normalize = true;
    std::vector<FactorBlock> blocks;  // empty = no factor step

    void validate() const;
};

/// Flat JSON object: panel, regressors, lags, initial_level, normalize,
/// factor_blocks = [{"name": ..., "units": "all" | [labels]}]. Relative
/// panel paths resolve against the spec file's directory.
EmpiricalSpec read_empirical_spec(const std::filesystem::path& path);

struct EmpiricalDesign {
    PanelDataset panel;  // T - lags periods, regressors as built
    std::vector<std::string> names;
};

/// Regressors per unit in order: initial level, y lags 1..p, then the chosen
/// columns. With normalisation every time-varying column and y are z-scored
/// over time within a unit and the initial level across units.
EmpiricalDesign build_empirical_design(const PanelTable& table, const EmpiricalSpec& spec);

struct EmpiricalResult {
    EmpiricalDesign design;
    SarEstimate estimate;
    Matrix theta_sd;
    Matrix coefficient_summary;  // rows Mean, Std, CrossSectionSd; one column per regressor
    BoolMatrix loading_mask;
    FactorPosterior factors;     // empty when no blocks
    VarianceDecomposition decomposition;
    bool has_factors = false;
};

EmpiricalResult run_empirical(const PanelTable& table, const EmpiricalSpec& spec, const RunConfig& cfg);

/// Writes w_hat.csv, theta_hat.csv, theta_sd.csv, intercept.csv,
/// coefficients.csv, leontief_offdiag.csv and, with blocks, factors.csv,
/// loadings.csv and decomposition.json.
void write_empirical(const EmpiricalResult& result, const RunConfig& cfg);

EmpiricalResult cmd_estimate(const EmpiricalSpec& spec, const RunConfig& cfg);

/// Effects matrix of one regressor from saved W and theta CSVs; writes
/// effects.csv, direct.csv and indirect.csv.
EffectsMatrix cmd_effects(const std::filesystem::path& w_path, const std::filesystem::path& theta_path,
                          const RunConfig& cfg);

struct MetricsReport {
    double corr2 = 0.0;
    double ssim = 0.0;
    double ssim_global = 0.0;
    bool has_effects = false;
    SimilarityPair direct;
    SimilarityPair indirect;
};

/// corr2 and SSIM (windowed and global) of two equally shaped matrices;
/// with both theta paths set, also the direct / indirect effects comparison
/// with a treated as the truth. Writes metrics.json when out_dir is non-empty.
MetricsReport cmd_metrics(const std::filesystem::path& a_path, const std::filesystem::path& b_path,
                          const std::filesystem::path& theta_a_path, const std::filesystem::path& theta_b_path,
                          const RunConfig& cfg);

std::string metrics_json(const MetricsReport& report);
std::string decomposition_json(const VarianceDecomposition& d);

}  // namespace sarvb
