#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sarvb {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes that do not agree with each other or with a declared size.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input data that is malformed: non-finite values, unknown labels, bad files.
class DataError : public Error {
public:
    using Error::Error;
};

/// Factorisations that fail, singular systems, non-convergent constructions.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Outcomes and exogenous regressors of N units over T periods.
///
/// `x` stores the regressor tensor T x N x k flattened unit-major: column
/// `i * k + r` holds regressor r of unit i. That layout is also the stage-one
/// instrument matrix, so it is shared without copying.
struct PanelDataset {
    Index n_units = 0;
    Index n_periods = 0;
    Index k_regressors = 0;
    Matrix y;  // T x N
    Matrix x;  // T x (N * k)
    std::vector<std::string> unit_labels;
    std::vector<std::string> time_labels;

    double regressor(Index t, Index unit, Index r) const { return x(t, unit * k_regressors + r); }

    auto unit_regressors(Index unit) const { return x.middleCols(unit * k_regressors, k_regressors); }
};

/// N x N spatial weights with an exactly zero diagonal.
class WeightsMatrix {
public:
    WeightsMatrix() = default;
    explicit WeightsMatrix(Matrix w);

    static WeightsMatrix zeros(Index n) { return WeightsMatrix(Matrix::Zero(n, n)); }

    const Matrix& matrix() const noexcept { return w_; }
    Index size() const noexcept { return w_.rows(); }
    double operator()(Index i, Index j) const { return w_(i, j); }

    double spectral_radius() const;
    bool is_stable() const { return spectral_radius() < 1.0; }

private:
    Matrix w_;
};

/// Unit-specific slope coefficients; row i holds theta_{i,1..k}.
class CoefficientMatrix {
public:
    CoefficientMatrix() = default;
    explicit CoefficientMatrix(Matrix theta);

    const Matrix& matrix() const noexcept { return theta_; }
    Index n_units() const noexcept { return theta_.rows(); }
    Index k_regressors() const noexcept { return theta_.cols(); }
    double operator()(Index i, Index r) const { return theta_(i, r); }

private:
    Matrix theta_;
};

/// Latent factors and loadings, e = F * Lambda + noise with Lambda l x N.
struct FactorStructure {
    Matrix loadings;          // l x N
    BoolMatrix loading_mask;  // l x N, true = free entry
    Matrix factors;           // T x l

    Index l_factors() const noexcept { return loadings.rows(); }

    /// Throws if the mask shape disagrees or a masked-out loading is nonzero.
    void validate() const;
};

/// Output of the two-step estimator.
struct SarEstimate {
    WeightsMatrix w_hat;
    CoefficientMatrix theta_hat;
    Vector intercept_hat;  // zeros unless the stage-two design had an intercept
    Matrix residuals;      // T x N, computed with the observed neighbour outcomes
    Vector sigma2_hat;     // posterior mean of the noise variance per unit
    std::vector<bool> converged_stage1;
    std::vector<bool> converged_stage2;
};

}  // namespace sarvb
