"""Smoothing-spline estimation and kriging-based prediction for spatial
functional linear regression."""

from .estimate import (
    DesignData,
    EmpiricalCovariance,
    FitResult,
    RankDeficiencyError,
    center,
    eigen_decay_diagnostic,
    empirical_covariance,
    estimation_error,
    fit,
    fit_gcv,
    gamma_seminorm,
    select_rho,
    trace_inequality_check,
)
from .harness import ExperimentConfig, ExperimentReport, emit_report, run_cell, run_experiment
from .krige import KrigingSystem, PredictionPair, krige_curve, predict_pair, separation_diagnostic, solve_kriging
from .simulate import (
    CASE_A,
    CASE_B,
    FunctionalSample,
    ResponseSample,
    SlopeCase,
    eval_slope,
    generate_covariates,
    generate_responses,
)
from .spatial import CovarianceSpec, SiteGrid, covariance_matrix, make_grid, min_site_distance, sample_gaussian
from .spline import SplineSystem, TimeGrid, build_spline_system, eval_basis, reconstruct_function

__version__ = "0.1.0"
