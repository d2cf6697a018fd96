#include "sarvb/workflows.hpp"

#include "sarvb/model.hpp"
#include "sarvb/parallel.hpp"
#include "sarvb/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace sarvb {

namespace {

using Json = nlohmann::json;

int count_false(const std::vector<bool>& v) {
    return static_cast<int>(std::count(v.begin(), v.end(), false));
}

std::string json_number(double v) {
    if (!std::isfinite(v)) return "null";
    return format_double(v);
}

std::string json_array(const Vector& v) {
    std::string out = "[";
    for (Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + json_number(v[i]);
    return out + "]";
}

}  // namespace

MonteCarloResult run_monte_carlo(const RunConfig& cfg) {
    cfg.dgp.validate();
    const Index l = cfg.dgp.l_factors;
    const int reps = cfg.dgp.n_replications;
    if (l > 0) {
        FactorGibbsConfig fg = cfg.factors;
        fg.l_factors = l;
        fg.validate(cfg.dgp.n_periods, cfg.dgp.n_units);
    }

    MonteCarloResult result;
    result.truth = build_truth(cfg.dgp);
    const DgpTruth& truth = result.truth;

    const auto slots = static_cast<std::size_t>(reps);
    std::vector<EstimatePair> estimates(slots);
    std::vector<Vector> factor_corr(slots);
    result.stage1_nonconverged.assign(slots, 0);
    result.stage2_nonconverged.assign(slots, 0);

    parallel_for(slots, cfg.threads, [&](std::size_t r) {
        const int rep_index = static_cast<int>(r);
        const Replication rep = generate_replication(cfg.dgp, truth, rep_index);
        Matrix residuals;
        if (cfg.estimate_from_truth) {
            estimates[r] = {truth.w_true, truth.theta_true};
            residuals = structural_residuals(rep.panel.y, rep.panel.x, truth.w_true, truth.theta_true, Vector());
        } else {
            TwoStepConfig tc = cfg.two_step;
            tc.threads = 1;
            tc.seed = derive_seed(cfg.two_step.seed, r);
            SarEstimate est = estimate(rep.panel, tc);
            result.stage1_nonconverged[r] = count_false(est.converged_stage1);
            result.stage2_nonconverged[r] = count_false(est.converged_stage2);
            estimates[r] = {std::move(est.w_hat), std::move(est.theta_hat)};
            residuals = std::move(est.residuals);
        }
        if (l > 0) {
            FactorGibbsConfig fg = cfg.factors;
            fg.l_factors = l;
            fg.seed = derive_seed(cfg.factors.seed, r);
            const FactorPosterior post = sample_factors(residuals, fg);
            factor_corr[r] = match_factors(rep.factors, post.f_mean).abs_corr;
        }
    });

    result.similarity =
        similarity_summary(truth.w_true, truth.theta_true, estimates, cfg.effects_regressor, cfg.ssim);
    result.factor_abs_corr = Matrix::Zero(reps, l);
    for (std::size_t r = 0; r < slots && l > 0; ++r) result.factor_abs_corr.row(static_cast<Index>(r)) = factor_corr[r];
    result.factor_abs_corr_mean = l > 0 ? Vector(result.factor_abs_corr.colwise().mean()) : Vector();
    return result;
}

void write_monte_carlo(const MonteCarloResult& result, const RunConfig& cfg) {
    const auto& dir = cfg.out_dir;
    const SimilarityReport& s = result.similarity;
    write_matrix_csv(dir / "w_true.csv", result.truth.w_true.matrix());
    write_matrix_csv(dir / "w_mean.csv", s.weights.mean_estimate);
    write_matrix_csv(dir / "theta_true.csv", result.truth.theta_true.matrix());
    write_matrix_csv(dir / "direct_true.csv", s.direct.truth);
    write_matrix_csv(dir / "direct_mean.csv", s.direct.mean_estimate);
    write_matrix_csv(dir / "indirect_true.csv", s.indirect.truth);
    write_matrix_csv(dir / "indirect_mean.csv", s.indirect.mean_estimate);

    const Index l = result.factor_abs_corr.cols();
    const auto reps = static_cast<Index>(s.weights.per_replication.size());
    std::vector<std::string> header{"replication", "w_corr2", "w_ssim", "direct_corr2", "direct_ssim",
                                    "indirect_corr2", "indirect_ssim", "stage1_nonconverged",
                                    "stage2_nonconverged"};
    for (Index q = 0; q < l; ++q) header.push_back("factor" + std::to_string(q + 1));
    Matrix per(reps, static_cast<Index>(header.size()) - 1);
    std::vector<std::string> labels;
    for (Index r = 0; r < reps; ++r) {
        const auto u = static_cast<std::size_t>(r);
        labels.push_back(std::to_string(r + 1));
        per.row(r).head(8) << s.weights.per_replication[u].corr2, s.weights.per_replication[u].ssim,
            s.direct.per_replication[u].corr2, s.direct.per_replication[u].ssim, s.indirect.per_replication[u].corr2,
            s.indirect.per_replication[u].ssim, result.stage1_nonconverged[u], result.stage2_nonconverged[u];
        if (l > 0) per.row(r).tail(l) = result.factor_abs_corr.row(r);
    }
    write_labelled_csv(dir / "similarity_per_replication.csv", header, labels, per);

    std::vector<std::string> sheader{"case", "n", "t", "q", "factors", "replications", "w_corr2", "w_ssim",
                                     "direct_corr2", "direct_ssim", "indirect_corr2", "indirect_ssim"};
    for (Index q = 0; q < l; ++q) sheader.push_back("factor" + std::to_string(q + 1));
    Matrix row(1, static_cast<Index>(sheader.size()) - 1);
    row.row(0).head(11) << static_cast<double>(cfg.dgp.n_units), static_cast<double>(cfg.dgp.n_periods),
        static_cast<double>(cfg.dgp.q), static_cast<double>(l), static_cast<double>(reps), s.weights.of_mean.corr2,
        s.weights.of_mean.ssim, s.direct.of_mean.corr2, s.direct.of_mean.ssim, s.indirect.of_mean.corr2,
        s.indirect.of_mean.ssim;
    if (l > 0) row.row(0).tail(l) = result.factor_abs_corr_mean.transpose();
    write_labelled_csv(dir / "summary.csv", sheader, {"N=" + std::to_string(cfg.dgp.n_units)}, row);
}

MonteCarloResult cmd_simulate(const RunConfig& cfg) {
    MonteCarloResult result = run_monte_carlo(cfg);
    write_monte_carlo(result, cfg);
    return result;
}

void EmpiricalSpec::validate() const {
    if (panel.empty()) throw ConfigError("empirical spec needs a panel path");
    if (lags < 0) throw ConfigError("lags must be non-negative");
    std::set<std::string> names;
    bool has_all = false;
    for (const FactorBlock& b : blocks) {
        if (b.name.empty()) throw ConfigError("factor block without a name");
        if (!names.insert(b.name).second) throw ConfigError("duplicate factor block '" + b.name + "'");
        if (!b.all_units && b.units.empty()) throw ConfigError("factor block '" + b.name + "' has no units");
        has_all = has_all || b.all_units;
    }
    if (!blocks.empty() && !has_all)
        throw ConfigError("factor blocks need one block with \"units\": \"all\" that loads on every unit");
}

EmpiricalSpec read_empirical_spec(const std::filesystem::path& path) {
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(path.string() + ": spec must be a JSON object");
    static const std::set<std::string> known{"panel", "regressors", "lags", "initial_level", "normalize",
                                             "factor_blocks"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError(path.string() + ": unknown key '" + key + "'");

    EmpiricalSpec spec;
    try {
        std::filesystem::path panel = j.at("panel").get<std::string>();
        spec.panel = panel.is_absolute() ? panel : path.parent_path() / panel;
        if (j.contains("regressors")) spec.regressors = j["regressors"].get<std::vector<std::string>>();
        if (j.contains("lags")) spec.lags = j["lags"].get<int>();
        if (j.contains("initial_level")) spec.initial_level = j["initial_level"].get<std::string>();
        if (j.contains("normalize")) spec.normalize = j["normalize"].get<bool>();
        if (j.contains("factor_blocks")) {
            for (const Json& b : j["factor_blocks"]) {
                FactorBlock block;
                block.name = b.at("name").get<std::string>();
                const Json& units = b.at("units");
                if (units.is_string()) {
                    if (units.get<std::string>() != "all")
                        throw ConfigError("factor block '" + block.name + "': units must be \"all\" or a list");
                    block.all_units = true;
                } else {
                    block.units = units.get<std::vector<std::string>>();
                }
                spec.blocks.push_back(std::move(block));
            }
        }
    } catch (const Json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    spec.validate();
    return spec;
}

EmpiricalDesign build_empirical_design(const PanelTable& table, const EmpiricalSpec& spec) {
    spec.validate();
    const PanelDataset& in = table.panel;
    check_panel(in);
    const Index n = in.n_units;
    const Index t_in = in.n_periods;
    const Index k_in = in.k_regressors;

    auto column_of = [&](const std::string& name) -> Index {
        const auto it = std::find(table.regressor_names.begin(), table.regressor_names.end(), name);
        if (it == table.regressor_names.end()) throw DataError("panel has no column '" + name + "'");
        return static_cast<Index>(it - table.regressor_names.begin());
    };

    std::vector<Index> chosen;
    if (spec.regressors.empty()) {
        for (Index r = 0; r < k_in; ++r) chosen.push_back(r);
    } else {
        for (const auto& name : spec.regressors) chosen.push_back(column_of(name));
    }
    const bool has_initial = !spec.initial_level.empty();
    const Index initial_col = has_initial && spec.initial_level != "y" ? column_of(spec.initial_level) : -1;

    const Index t = t_in - spec.lags;
    if (t < 2) {
        std::ostringstream msg;
        msg << "insufficient periods: " << t_in << " periods leave " << t << " after " << spec.lags
            << " lags, need at least 2";
        throw DataError(msg.str());
    }

    EmpiricalDesign d;
    if (has_initial) d.names.push_back("initial_" + spec.initial_level);
    for (int p = 1; p <= spec.lags; ++p) d.names.push_back("y_lag" + std::to_string(p));
    for (Index c : chosen) d.names.push_back(table.regressor_names[static_cast<std::size_t>(c)]);
    const auto k = static_cast<Index>(d.names.size());
    if (k == 0) throw ConfigError("empirical design has no regressors");

    PanelDataset& p = d.panel;
    p.n_units = n;
    p.n_periods = t;
    p.k_regressors = k;
    p.unit_labels = in.unit_labels;
    p.time_labels.assign(in.time_labels.begin() + spec.lags, in.time_labels.end());
    p.y = in.y.bottomRows(t);
    p.x.resize(t, n * k);
    for (Index i = 0; i < n; ++i) {
        Index c = i * k;
        if (has_initial) {
            const double level = initial_col < 0 ? in.y(0, i) : in.regressor(0, i, initial_col);
            p.x.col(c++).setConstant(level);
        }
        for (int lag = 1; lag <= spec.lags; ++lag) p.x.col(c++) = in.y.col(i).segment(spec.lags - lag, t);
        for (Index r : chosen) {
            for (Index s = 0; s < t; ++s) p.x(s, c) = in.regressor(s + spec.lags, i, r);
            ++c;
        }
    }
    if (!spec.normalize) return d;

    const double td = static_cast<double>(t);
    auto zscore = [](auto&& col, double count, const std::string& what) {
        const double mean = col.sum() / count;
        const double sd = std::sqrt((col.array() - mean).square().sum() / count);
        if (!(sd > 0.0)) throw DataError(what + " is constant and cannot be normalised");
        col = (col.array() - mean) / sd;
    };
    for (Index i = 0; i < n; ++i) {
        const std::string& unit = in.unit_labels[static_cast<std::size_t>(i)];
        zscore(p.y.col(i), td, "y of unit " + unit);
        for (Index r = has_initial ? 1 : 0; r < k; ++r)
            zscore(p.x.col(i * k + r), td, "column " + d.names[static_cast<std::size_t>(r)] + " of unit " + unit);
    }
    if (has_initial) {
        Vector level(n);
        for (Index i = 0; i < n; ++i) level[i] = p.x(0, i * k);
        zscore(level, static_cast<double>(n), "initial level " + spec.initial_level + " across units");
        for (Index i = 0; i < n; ++i) p.x.col(i * k).setConstant(level[i]);
    }
    return d;
}

EmpiricalResult run_empirical(const PanelTable& table, const EmpiricalSpec& spec, const RunConfig& cfg) {
    EmpiricalResult res;
    res.design = build_empirical_design(table, spec);
    const PanelDataset& p = res.design.panel;
    const Index n = p.n_units;
    const Index k = p.k_regressors;

    std::map<std::string, Index> unit_index;
    for (Index i = 0; i < n; ++i) unit_index[p.unit_labels[static_cast<std::size_t>(i)]] = i;
    std::vector<std::vector<Index>> groups;
    for (const FactorBlock& b : spec.blocks) {
        std::vector<Index> members;
        if (b.all_units) {
            for (Index i = 0; i < n; ++i) members.push_back(i);
        } else {
            for (const auto& label : b.units) {
                const auto it = unit_index.find(label);
                if (it == unit_index.end())
                    throw DataError("factor block '" + b.name + "' names unknown unit '" + label + "'");
                members.push_back(it->second);
            }
        }
        groups.push_back(std::move(members));
    }

    TwoStepConfig tc = cfg.two_step;
    tc.intercept = true;
    tc.threads = cfg.threads;
    const FirstStagePredictions preds = first_stage(p, tc);
    SecondStageDetail detail = second_stage_detailed(p, preds, tc);
    res.estimate = std::move(detail.estimate);
    res.theta_sd = std::move(detail.theta_sd);

    const Matrix& theta = res.estimate.theta_hat.matrix();
    res.coefficient_summary.resize(3, k);
    const double nd = static_cast<double>(n);
    for (Index r = 0; r < k; ++r) {
        const double mean = theta.col(r).mean();
        res.coefficient_summary(0, r) = mean;
        res.coefficient_summary(1, r) = res.theta_sd.col(r).mean();
        res.coefficient_summary(2, r) = std::sqrt((theta.col(r).array() - mean).square().sum() / nd);
    }

    if (!groups.empty()) {
        res.loading_mask = block_mask(n, groups);
        FactorGibbsConfig fg = cfg.factors;
        fg.l_factors = static_cast<Index>(groups.size());
        fg.loading_mask = res.loading_mask;
        res.factors = sample_factors(res.estimate.residuals, fg);
        res.decomposition = variance_decomposition(res.factors, res.estimate.residuals, p.y);
        res.has_factors = true;
    }
    return res;
}

std::string decomposition_json(const VarianceDecomposition& d) {
    std::string out = "{\n";
    out += "  \"residual_share_per_factor\": " + json_array(d.residual_share_per_factor) + ",\n";
    out += "  \"total_share_per_factor\": " + json_array(d.total_share_per_factor) + ",\n";
    out += "  \"residual_share_total\": " + json_number(d.residual_share_total) + ",\n";
    out += "  \"total_share_total\": " + json_number(d.total_share_total) + "\n}\n";
    return out;
}

void write_empirical(const EmpiricalResult& result, const RunConfig& cfg) {
    const auto& dir = cfg.out_dir;
    const SarEstimate& est = result.estimate;
    write_matrix_csv(dir / "w_hat.csv", est.w_hat.matrix());
    write_matrix_csv(dir / "theta_hat.csv", est.theta_hat.matrix());
    write_matrix_csv(dir / "theta_sd.csv", result.theta_sd);
    write_matrix_csv(dir / "intercept.csv", est.intercept_hat);

    std::vector<std::string> header{"statistic"};
    header.insert(header.end(), result.design.names.begin(), result.design.names.end());
    write_labelled_csv(dir / "coefficients.csv", header, {"Mean", "Std", "CrossSectionSd"},
                       result.coefficient_summary);

    Matrix spill = leontief_inverse(est.w_hat);
    spill.diagonal().setZero();
    write_matrix_csv(dir / "leontief_offdiag.csv", spill);

    if (result.has_factors) {
        write_factor_csv(dir / "factors.csv", result.factors.f_mean);
        write_matrix_csv(dir / "loadings.csv", result.factors.lambda_mean);
        write_text_file(dir / "decomposition.json", decomposition_json(result.decomposition));
    }
}

EmpiricalResult cmd_estimate(const EmpiricalSpec& spec, const RunConfig& cfg) {
    const PanelTable table = read_panel_csv(spec.panel);
    EmpiricalResult result = run_empirical(table, spec, cfg);
    write_empirical(result, cfg);
    return result;
}

EffectsMatrix cmd_effects(const std::filesystem::path& w_path, const std::filesystem::path& theta_path,
                          const RunConfig& cfg) {
    const WeightsMatrix w(read_square_matrix_csv(w_path));
    const CoefficientMatrix theta(read_matrix_csv(theta_path));
    EffectsMatrix e = effects_matrix(w, theta, cfg.effects_regressor);
    write_matrix_csv(cfg.out_dir / "effects.csv", e.values);
    write_matrix_csv(cfg.out_dir / "direct.csv", e.direct());
    write_matrix_csv(cfg.out_dir / "indirect.csv", e.indirect_matrix());
    return e;
}

std::string metrics_json(const MetricsReport& r) {
    std::string out = "{\n";
    out += "  \"corr2\": " + json_number(r.corr2) + ",\n";
    out += "  \"ssim\": " + json_number(r.ssim) + ",\n";
    out += "  \"ssim_global\": " + json_number(r.ssim_global);
    if (r.has_effects) {
        out += ",\n  \"direct_corr2\": " + json_number(r.direct.corr2) + ",\n";
        out += "  \"direct_ssim\": " + json_number(r.direct.ssim) + ",\n";
        out += "  \"indirect_corr2\": " + json_number(r.indirect.corr2) + ",\n";
        out += "  \"indirect_ssim\": " + json_number(r.indirect.ssim);
    }
    return out + "\n}\n";
}

MetricsReport cmd_metrics(const std::filesystem::path& a_path, const std::filesystem::path& b_path,
                          const std::filesystem::path& theta_a_path, const std::filesystem::path& theta_b_path,
                          const RunConfig& cfg) {
    const Matrix a = read_matrix_csv(a_path);
    const Matrix b = read_matrix_csv(b_path);
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        std::ostringstream msg;
        msg << "matrix shapes differ: " << a_path.string() << " is " << a.rows() << "x" << a.cols() << ", "
            << b_path.string() << " is " << b.rows() << "x" << b.cols();
        throw DimensionError(msg.str());
    }
    SsimParams windowed = cfg.ssim;
    windowed.global = false;
    windowed.window = std::min({windowed.window, a.rows(), a.cols()});
    SsimParams global = cfg.ssim;
    global.global = true;

    MetricsReport r;
    r.corr2 = corr2(a, b);
    r.ssim = ssim(a, b, windowed);
    r.ssim_global = ssim(a, b, global);
    if (!theta_a_path.empty() && !theta_b_path.empty()) {
        const EffectsMatrix ea =
            effects_matrix(WeightsMatrix(a), CoefficientMatrix(read_matrix_csv(theta_a_path)), cfg.effects_regressor);
        const EffectsMatrix eb =
            effects_matrix(WeightsMatrix(b), CoefficientMatrix(read_matrix_csv(theta_b_path)), cfg.effects_regressor);
        r.has_effects = true;
        r.direct = {corr2(ea.direct_matrix(), eb.direct_matrix()), ssim(ea.direct_matrix(), eb.direct_matrix(), windowed)};
        r.indirect = {corr2(ea.indirect_matrix(), eb.indirect_matrix()),
                      ssim(ea.indirect_matrix(), eb.indirect_matrix(), windowed)};
    }
    if (!cfg.out_dir.empty()) write_text_file(cfg.out_dir / "metrics.json", metrics_json(r));
    return r;
}

}  // namespace sarvb
