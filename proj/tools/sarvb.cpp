#include "sarvb/workflows.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using Json = nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

// Flat JSON object whose keys are long option names without the dashes; the
// keys bind to the options of whichever subcommand was given.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(const CLI::App* app) : app_(app) {}

    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        Json j = Json::object();
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string name = opt->get_lnames().front();
            if (opt->count() > 0) {
                const auto& res = opt->results();
                j[name] = res.size() == 1 ? Json(res.front()) : Json(res);
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        return j.dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        Json j;
        try {
            j = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a flat JSON object");
        std::vector<std::string> parents;
        for (const CLI::App* sub : app_->get_subcommands()) parents.push_back(sub->get_name());
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const Json& v : value) item.inputs.push_back(scalar(key, v));
            } else {
                item.inputs.push_back(scalar(key, value));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    static std::string scalar(const std::string& key, const Json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        if (v.is_number()) return sarvb::format_double(v.get<double>());
        throw CLI::ConversionError("config key '" + key + "' must be a scalar or an array of scalars");
    }

    const CLI::App* app_;
};

struct CommonFlags {
    std::uint64_t seed = 0;
    std::string out = "out";
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& c) {
    cmd->add_option("--seed", c.seed, "Base random seed")->capture_default_str();
    cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
    cmd->add_option("--threads", c.threads, "Worker threads, 0 = available parallelism")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

struct PriorFlags {
    std::optional<double> a_stage1;
    std::optional<double> a_stage2;
    double nu0 = 0.01;
    double s0 = 0.01;
    double tol = 1e-6;
    int max_iter = 500;
    double c_lambda = 1e-3;
    int draws = 3000;
    int burn = 1000;
};

void add_prior(CLI::App* cmd, PriorFlags& p) {
    cmd->add_option("--a-stage1", p.a_stage1, "Dirichlet concentration in stage one (default 1/M)");
    cmd->add_option("--a-stage2", p.a_stage2, "Dirichlet concentration in stage two (default 1/2)");
    cmd->add_option("--nu0", p.nu0, "Gamma shape of the noise precision prior")->capture_default_str();
    cmd->add_option("--s0", p.s0, "Gamma rate of the noise precision prior")->capture_default_str();
    cmd->add_option("--tol", p.tol, "CAVI convergence tolerance")->capture_default_str();
    cmd->add_option("--max-iter", p.max_iter, "CAVI iteration cap")->capture_default_str();
    cmd->add_option("--c-lambda", p.c_lambda, "Factor prior shrinkage constant")->capture_default_str();
    cmd->add_option("--draws", p.draws, "Retained factor sampler draws")->capture_default_str();
    cmd->add_option("--burn", p.burn, "Factor sampler burn-in")->capture_default_str();
}

struct SsimFlags {
    int window = 8;
    bool gaussian = false;
    int regressor = 1;
};

void add_ssim(CLI::App* cmd, SsimFlags& s) {
    cmd->add_option("--ssim-window", s.window, "SSIM window side")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_flag("--ssim-gaussian", s.gaussian, "Gaussian SSIM window weights");
    cmd->add_option("--regressor", s.regressor, "Regressor of the effects matrix, 1-based")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

sarvb::RunConfig make_config(const CommonFlags& c, const PriorFlags& p, const SsimFlags& s) {
    sarvb::RunConfig cfg;
    cfg.threads = c.threads;
    cfg.out_dir = c.out;
    cfg.dgp.seed = c.seed;
    cfg.two_step.seed = c.seed;
    cfg.factors.seed = c.seed;
    if (p.a_stage1) cfg.two_step.stage1.a = *p.a_stage1;
    if (p.a_stage2) cfg.two_step.stage2.a = *p.a_stage2;
    for (sarvb::DlPriorConfig* d : {&cfg.two_step.stage1, &cfg.two_step.stage2}) {
        d->nu0 = p.nu0;
        d->s0 = p.s0;
        d->tol = p.tol;
        d->max_iter = p.max_iter;
        d->validate();
    }
    cfg.factors.c_lambda = p.c_lambda;
    cfg.factors.nu0 = p.nu0;
    cfg.factors.s0 = p.s0;
    cfg.factors.n_draws = p.draws;
    cfg.factors.n_burn = p.burn;
    cfg.ssim.window = s.window;
    cfg.ssim.gaussian = s.gaussian;
    cfg.effects_regressor = s.regressor - 1;
    return cfg;
}

void print_row(const std::vector<std::string>& names, const std::vector<double>& values) {
    for (std::size_t i = 0; i < names.size(); ++i)
        std::cout << names[i] << " " << sarvb::format_double(values[i]) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-step variational Bayes for unrestricted spatial autoregressive panels"};
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<JsonConfig>(&app));
    app.set_config("--config", "", "Flat JSON file of option values; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);

    CommonFlags common;
    PriorFlags prior;
    SsimFlags ssim;

    auto* sim = app.add_subcommand("simulate", "Monte Carlo: simulate, estimate and compare with the truth");
    sarvb::DgpConfig dgp;
    bool truth_as_estimate = false;
    sim->add_option("--n", dgp.n_units, "Units")->capture_default_str();
    sim->add_option("--t", dgp.n_periods, "Periods")->capture_default_str();
    sim->add_option("--k", dgp.k_regressors, "Regressors per unit")->capture_default_str();
    sim->add_option("--q", dgp.q, "Band half-width of W")->capture_default_str();
    sim->add_option("--factors", dgp.l_factors, "Latent factors in the errors")->capture_default_str();
    sim->add_option("--reps", dgp.n_replications, "Replications")->capture_default_str();
    sim->add_flag("--truth-as-estimate", truth_as_estimate, "Skip estimation and use the truth (debugging)");
    add_common(sim, common);
    add_prior(sim, prior);
    add_ssim(sim, ssim);

    auto* est = app.add_subcommand("estimate", "Two-step estimate and factor extraction on a panel CSV");
    std::string spec_path;
    est->add_option("--spec", spec_path, "Empirical spec JSON")->required();
    add_common(est, common);
    add_prior(est, prior);

    auto* eff = app.add_subcommand("effects", "Effects matrix (I - W)^-1 diag(theta_r) from saved W and theta");
    std::string w_path;
    std::string theta_path;
    eff->add_option("--w", w_path, "Square W CSV")->required();
    eff->add_option("--theta", theta_path, "N x k theta CSV")->required();
    add_common(eff, common);
    add_ssim(eff, ssim);

    auto* met = app.add_subcommand("metrics", "corr2 and SSIM between two matrix CSVs");
    std::string a_path;
    std::string b_path;
    std::string theta_a;
    std::string theta_b;
    met->add_option("--a", a_path, "First matrix CSV (the truth for effects)")->required();
    met->add_option("--b", b_path, "Second matrix CSV")->required();
    met->add_option("--theta-a", theta_a, "theta CSV paired with --a; enables effects comparison");
    met->add_option("--theta-b", theta_b, "theta CSV paired with --b");
    add_common(met, common);
    add_ssim(met, ssim);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        sarvb::RunConfig cfg = make_config(common, prior, ssim);
        if (sim->parsed()) {
            dgp.seed = common.seed;
            cfg.dgp = dgp;
            cfg.estimate_from_truth = truth_as_estimate;
            const sarvb::MonteCarloResult r = sarvb::cmd_simulate(cfg);
            const auto& s = r.similarity;
            print_row({"w_corr2", "w_ssim", "direct_corr2", "direct_ssim", "indirect_corr2", "indirect_ssim"},
                      {s.weights.of_mean.corr2, s.weights.of_mean.ssim, s.direct.of_mean.corr2, s.direct.of_mean.ssim,
                       s.indirect.of_mean.corr2, s.indirect.of_mean.ssim});
            for (sarvb::Index q = 0; q < r.factor_abs_corr_mean.size(); ++q)
                print_row({"factor" + std::to_string(q + 1)}, {r.factor_abs_corr_mean[q]});
        } else if (est->parsed()) {
            const sarvb::EmpiricalSpec spec = sarvb::read_empirical_spec(spec_path);
            const sarvb::EmpiricalResult r = sarvb::cmd_estimate(spec, cfg);
            for (std::size_t c = 0; c < r.design.names.size(); ++c)
                print_row({r.design.names[c]}, {r.coefficient_summary(0, static_cast<sarvb::Index>(c))});
            if (r.has_factors) std::cout << sarvb::decomposition_json(r.decomposition);
        } else if (eff->parsed()) {
            const sarvb::EffectsMatrix e = sarvb::cmd_effects(w_path, theta_path, cfg);
            std::cout << "wrote " << e.values.rows() << "x" << e.values.cols() << " effects to "
                      << (cfg.out_dir / "effects.csv").string() << "\n";
        } else if (met->parsed()) {
            const sarvb::MetricsReport r = sarvb::cmd_metrics(a_path, b_path, theta_a, theta_b, cfg);
            std::cout << sarvb::metrics_json(r);
        }
    } catch (const sarvb::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const sarvb::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const sarvb::Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
