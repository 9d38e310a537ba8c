"""Least squares with sparse coefficients fused into a few shared values."""

from .estimators import CoSaMPSelector, L0FusionRegressor, ProjectedGradientRegressor
from .metrics import (
    grouping_distance,
    grouping_sensitivity,
    nmi,
    nmi_with_zero_group,
    oracle_ls,
    same_grouping,
    tpp,
)
from .numerics import Dataset, least_squares, lipschitz_bound
from .params import Budget, FusedParams, Grouping, from_beta, grouping_of, to_beta
from .projection import ProjectionProblem, project
from .screening import ScreeningConfig, ScreeningResult, cosamp, screen_with_covariates
from .solver import (
    InfeasibleError,
    SolveOptions,
    SolverReport,
    export_mio,
    score_assignment,
    solve_exact,
)
from .tuning import TuneConfig, tune
from .warmstart import WarmStartConfig, is_stationary, warm_start

__version__ = "0.1.0"
