#include "sarvb/csv.hpp"
#include "sarvb/dgp.hpp"
#include "sarvb/dl_vb.hpp"
#include "sarvb/factor_gibbs.hpp"
#include "sarvb/metrics.hpp"
#include "sarvb/model.hpp"
#include "sarvb/two_step.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace sarvb;

namespace {

DlPriorConfig prior(std::optional<double> a, double nu0, double s0, double tol, int max_iter) {
    DlPriorConfig c;
    c.a = a;
    c.nu0 = nu0;
    c.s0 = s0;
    c.tol = tol;
    c.max_iter = max_iter;
    c.validate();
    return c;
}

PanelDataset make_panel(const Matrix& y, const Matrix& x) {
    const Index n = y.cols();
    if (n == 0 || x.cols() % n != 0)
        throw DimensionError("x must have N * k columns for y with N columns");
    PanelDataset p;
    p.n_units = n;
    p.n_periods = y.rows();
    p.k_regressors = x.cols() / n;
    p.y = y;
    p.x = x;
    for (Index i = 0; i < n; ++i) p.unit_labels.push_back(std::to_string(i + 1));
    for (Index t = 0; t < p.n_periods; ++t) p.time_labels.push_back(std::to_string(t + 1));
    return validate_panel(p);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-step variational Bayes for unrestricted spatial autoregressive panels";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    py::class_<DlRegressionFit>(m, "DlRegressionFit")
        .def_readonly("beta_mean", &DlRegressionFit::beta_mean)
        .def_readonly("beta_var", &DlRegressionFit::beta_var)
        .def_readonly("psi", &DlRegressionFit::psi)
        .def_readonly("phi", &DlRegressionFit::phi)
        .def_readonly("tau", &DlRegressionFit::tau)
        .def_readonly("iterations", &DlRegressionFit::iterations_run)
        .def_readonly("converged", &DlRegressionFit::converged)
        .def_property_readonly("noise_variance", &DlRegressionFit::noise_variance_mean);

    m.def(
        "fit_dl_regression",
        [](const Vector& y, const Matrix& x, std::optional<double> a, double nu0, double s0, double tol,
           int max_iter) {
            DlPriorConfig c = prior(a, nu0, s0, tol, max_iter);
            c.keep_covariance = false;
            return fit_dl_regression(y, x, c);
        },
        py::arg("y"), py::arg("x"), py::arg("a") = py::none(), py::arg("nu0") = 0.01, py::arg("s0") = 0.01,
        py::arg("tol") = 1e-6, py::arg("max_iter") = 500, "Variational Dirichlet-Laplace regression; a = None means 1/M.");

    m.def(
        "simulate",
        [](Index n, Index t, Index k, Index q, Index l, std::uint64_t seed, int rep) {
            DgpConfig c;
            c.n_units = n;
            c.n_periods = t;
            c.k_regressors = k;
            c.q = q;
            c.l_factors = l;
            c.seed = seed;
            c.n_replications = rep + 1;
            c.validate();
            const DgpTruth truth = build_truth(c);
            Replication r = generate_replication(c, truth, rep);
            py::dict d;
            d["w"] = truth.w_true.matrix();
            d["theta"] = truth.theta_true.matrix();
            d["lambda"] = truth.lambda_true;
            d["rho"] = truth.rho;
            d["y"] = r.panel.y;
            d["x"] = r.panel.x;
            d["factors"] = r.factors;
            d["errors"] = r.errors;
            return d;
        },
        py::arg("n") = 30, py::arg("t") = 20, py::arg("k") = 2, py::arg("q") = 13, py::arg("factors") = 0,
        py::arg("seed") = 0, py::arg("replication") = 0,
        "Truth and one replication as a dict; x is T x (N k), unit-major.");

    m.def(
        "estimate",
        [](const Matrix& y, const Matrix& x, std::optional<double> a_stage1, std::optional<double> a_stage2,
           bool intercept, std::uint64_t seed, int threads) {
            TwoStepConfig c;
            if (a_stage1) c.stage1.a = a_stage1;
            if (a_stage2) c.stage2.a = a_stage2;
            c.stage1.validate();
            c.stage2.validate();
            c.intercept = intercept;
            c.seed = seed;
            c.threads = threads;
            const SarEstimate e = estimate(make_panel(y, x), c);
            py::dict d;
            d["w"] = e.w_hat.matrix();
            d["theta"] = e.theta_hat.matrix();
            d["intercept"] = e.intercept_hat;
            d["residuals"] = e.residuals;
            d["sigma2"] = e.sigma2_hat;
            return d;
        },
        py::arg("y"), py::arg("x"), py::arg("a_stage1") = py::none(), py::arg("a_stage2") = py::none(),
        py::arg("intercept") = false, py::arg("seed") = 0, py::arg("threads") = 0,
        "Two-step estimate of W and theta from y (T x N) and x (T x N k).");

    m.def(
        "sample_factors",
        [](const Matrix& e, Index l, std::optional<BoolMatrix> mask, double c_lambda, int draws, int burn,
           std::uint64_t seed) {
            FactorGibbsConfig c;
            c.l_factors = l;
            c.loading_mask = std::move(mask);
            c.c_lambda = c_lambda;
            c.n_draws = draws;
            c.n_burn = burn;
            c.seed = seed;
            const FactorPosterior p = sample_factors(e, c);
            py::dict d;
            d["f"] = p.f_mean;
            d["lambda"] = p.lambda_mean;
            d["sigma2"] = p.sigma2_mean;
            d["common"] = p.common_component_mean;
            return d;
        },
        py::arg("e"), py::arg("l"), py::arg("mask") = py::none(), py::arg("c_lambda") = 1e-3,
        py::arg("draws") = 3000, py::arg("burn") = 1000, py::arg("seed") = 0);

    m.def("corr2", &corr2, py::arg("a"), py::arg("b"));
    m.def(
        "ssim",
        [](const Matrix& a, const Matrix& b, Index window, bool gaussian, bool global) {
            SsimParams p;
            p.window = window;
            p.gaussian = gaussian;
            p.global = global;
            return ssim(a, b, p);
        },
        py::arg("a"), py::arg("b"), py::arg("window") = 8, py::arg("gaussian") = false, py::arg("global_") = false);
    m.def(
        "effects_matrix",
        [](const Matrix& w, const Matrix& theta, Index regressor) {
            return effects_matrix(WeightsMatrix(w), CoefficientMatrix(theta), regressor).values;
        },
        py::arg("w"), py::arg("theta"), py::arg("regressor") = 0, "(I - W)^-1 diag(theta[:, regressor]).");
    m.def(
        "match_factors",
        [](const Matrix& f_true, const Matrix& f_est) {
            const FactorMatch fm = match_factors(f_true, f_est);
            return py::make_tuple(fm.abs_corr, fm.assignment, fm.sign);
        },
        py::arg("f_true"), py::arg("f_est"));

    m.def("read_matrix_csv", &read_matrix_csv, py::arg("path"));
    m.def("write_matrix_csv", &write_matrix_csv, py::arg("path"), py::arg("m"));
    m.def("format_double", &format_double, py::arg("v"));
}
