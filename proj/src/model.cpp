#include "sarvb/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace sarvb {

WeightsMatrix::WeightsMatrix(Matrix w) : w_(std::move(w)) {
    if (w_.rows() != w_.cols()) {
        std::ostringstream msg;
        msg << "weights matrix must be square, got " << w_.rows() << "x" << w_.cols();
        throw DimensionError(msg.str());
    }
    for (Index i = 0; i < w_.rows(); ++i) {
        if (w_(i, i) != 0.0) {
            std::ostringstream msg;
            msg << "weights matrix diagonal must be zero, entry " << i << " is " << w_(i, i);
            throw DataError(msg.str());
        }
    }
    if (!w_.allFinite()) throw DataError("weights matrix has non-finite entries");
}

double WeightsMatrix::spectral_radius() const {
    if (w_.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(w_, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation for W failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

CoefficientMatrix::CoefficientMatrix(Matrix theta) : theta_(std::move(theta)) {
    if (!theta_.allFinite()) throw DataError("coefficient matrix has non-finite entries");
}

void FactorStructure::validate() const {
    if (loading_mask.size() != 0 &&
        (loading_mask.rows() != loadings.rows() || loading_mask.cols() != loadings.cols())) {
        throw DimensionError("loading mask shape does not match loadings");
    }
    if (factors.size() != 0 && factors.cols() != loadings.rows()) {
        throw DimensionError("factor count differs between factors and loadings");
    }
    if (loading_mask.size() == 0) return;
    for (Index q = 0; q < loadings.rows(); ++q)
        for (Index j = 0; j < loadings.cols(); ++j)
            if (!loading_mask(q, j) && loadings(q, j) != 0.0)
                throw DataError("masked-out loading is nonzero");
}

namespace {

std::string label_or_index(const std::vector<std::string>& labels, Index i) {
    std::ostringstream out;
    out << i;
    if (static_cast<std::size_t>(i) < labels.size()) out << " (" << labels[static_cast<std::size_t>(i)] << ")";
    return out.str();
}

}  // namespace

void check_panel(const PanelDataset& p) {
    if (p.n_units < 1 || p.n_periods < 1 || p.k_regressors < 1)
        throw DimensionError("panel sizes must be positive");
    if (p.n_periods < 2) throw DimensionError("panel needs at least 2 periods");
    if (p.y.rows() != p.n_periods || p.y.cols() != p.n_units) {
        std::ostringstream msg;
        msg << "y is " << p.y.rows() << "x" << p.y.cols() << " but the panel declares T=" << p.n_periods
            << ", N=" << p.n_units;
        throw DimensionError(msg.str());
    }
    if (p.x.rows() != p.n_periods || p.x.cols() != p.n_units * p.k_regressors) {
        std::ostringstream msg;
        msg << "x is " << p.x.rows() << "x" << p.x.cols() << " but expected " << p.n_periods << "x"
            << p.n_units * p.k_regressors;
        throw DimensionError(msg.str());
    }
    if (!p.unit_labels.empty() && static_cast<Index>(p.unit_labels.size()) != p.n_units)
        throw DimensionError("unit label count differs from n_units");
    if (!p.time_labels.empty() && static_cast<Index>(p.time_labels.size()) != p.n_periods)
        throw DimensionError("time label count differs from n_periods");

    for (Index i = 0; i < p.n_units; ++i) {
        for (Index t = 0; t < p.n_periods; ++t) {
            bool bad = !std::isfinite(p.y(t, i));
            for (Index r = 0; r < p.k_regressors && !bad; ++r) bad = !std::isfinite(p.regressor(t, i, r));
            if (bad) {
                throw DataError("non-finite value at unit " + label_or_index(p.unit_labels, i) + ", time " +
                                label_or_index(p.time_labels, t));
            }
        }
    }
}

PanelDataset validate_panel(const PanelDataset& p) {
    check_panel(p);
    return p;
}

Matrix exogenous_contribution(const CoefficientMatrix& theta, const Matrix& x_stacked) {
    const Index n = theta.n_units();
    const Index k = theta.k_regressors();
    if (x_stacked.cols() != n * k) throw DimensionError("regressor columns do not match N*k");
    Matrix out(x_stacked.rows(), n);
    for (Index i = 0; i < n; ++i)
        out.col(i).noalias() = x_stacked.middleCols(i * k, k) * theta.matrix().row(i).transpose();
    return out;
}

Matrix simulate_outcomes(const WeightsMatrix& w, const CoefficientMatrix& theta, const Matrix& x_stacked,
                         const Matrix& errors) {
    const Index n = w.size();
    if (theta.n_units() != n) throw DimensionError("theta rows differ from W size");
    if (errors.cols() != n || errors.rows() != x_stacked.rows())
        throw DimensionError("error panel shape does not match T x N");

    const Matrix rhs = exogenous_contribution(theta, x_stacked) + errors;
    const Matrix system = Matrix::Identity(n, n) - w.matrix();
    Eigen::PartialPivLU<Matrix> lu(system);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        std::ostringstream msg;
        msg << "I - W is numerically singular (reciprocal condition estimate " << rcond << ")";
        throw NumericalError(msg.str());
    }
    // rows of y are y_t', so solve on the transposed system.
    return lu.solve(rhs.transpose()).transpose();
}

Matrix structural_residuals(const Matrix& y, const Matrix& x_stacked, const WeightsMatrix& w,
                            const CoefficientMatrix& theta, const Vector& intercept) {
    Matrix r = y - y * w.matrix().transpose() - exogenous_contribution(theta, x_stacked);
    if (intercept.size() == y.cols()) r.rowwise() -= intercept.transpose();
    return r;
}

}  // namespace sarvb
