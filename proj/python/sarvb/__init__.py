"""Two-step variational Bayes for unrestricted spatial autoregressive panels."""

from ._core import (
    ConfigError,
    DataError,
    DimensionError,
    DlRegressionFit,
    Error,
    NumericalError,
    corr2,
    effects_matrix,
    estimate,
    fit_dl_regression,
    format_double,
    match_factors,
    read_matrix_csv,
    sample_factors,
    simulate,
    ssim,
    write_matrix_csv,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DimensionError",
    "DlRegressionFit",
    "Error",
    "NumericalError",
    "corr2",
    "effects_matrix",
    "estimate",
    "fit_dl_regression",
    "format_double",
    "match_factors",
    "read_matrix_csv",
    "sample_factors",
    "simulate",
    "ssim",
    "write_matrix_csv",
]
