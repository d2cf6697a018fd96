#pragma once

#include "sarvb/types.hpp"

namespace sarvb {

/// Checks every PanelDataset invariant and returns the panel unchanged.
/// Throws DimensionError on shape mismatches and DataError on non-finite
/// entries, naming the offending unit and period.
PanelDataset validate_panel(const PanelDataset& panel);

/// Same checks as validate_panel without the copy.
void check_panel(const PanelDataset& panel);

/// Row-wise x_t theta: entry (t, i) is sum_r x(t, i, r) * theta(i, r).
Matrix exogenous_contribution(const CoefficientMatrix& theta, const Matrix& x_stacked);

/// Solves (I - W) y_t = x_t theta + e_t for every period.
///
/// `x_stacked` is T x (N k) in the unit-major layout of PanelDataset::x and
/// `errors` is T x N. Uses a pivoted LU of (I - W); throws NumericalError with
/// the reciprocal condition estimate when the system is numerically singular.
Matrix simulate_outcomes(const WeightsMatrix& w, const CoefficientMatrix& theta, const Matrix& x_stacked,
                         const Matrix& errors);

/// y - y W' - x theta - 1 c' : the structural residuals for given parameters.
Matrix structural_residuals(const Matrix& y, const Matrix& x_stacked, const WeightsMatrix& w,
                            const CoefficientMatrix& theta, const Vector& intercept);

}  // namespace sarvb
