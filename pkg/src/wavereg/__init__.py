"""Orthonormal wavelet filters with maximal Sobolev regularity."""

__version__ = "0.1.0"

from .design import (
    DesignError,
    DesignParams,
    ExplorationParams,
    SqMagnitude,
    check_cohen,
    check_orthonormality,
    daubechies,
    extract_r,
    solve_by_roots,
    solve_by_v,
)
from .estimator import RegularFilterDesigner
from .optimize import BudgetWarning, OptimizationResult, objective, optimize_roots, optimize_v_2dof, scan, scan_v
from .regularity import RegularityError, RegularityReport, regularity, sobolev_exponent, spectral_radius, transfer_matrix
from .synthesis import (
    FactorizationError,
    ScalingFilter,
    autocorrelation,
    phi_samples,
    phihat_product,
    spectral_factorize,
    wavelet_filter,
)
from .trigpoly import CosinePoly, DivisibilityError

__all__ = [
    "BudgetWarning", "CosinePoly", "DesignError", "DesignParams", "DivisibilityError", "ExplorationParams",
    "FactorizationError", "OptimizationResult", "RegularFilterDesigner", "RegularityError", "RegularityReport",
    "ScalingFilter", "SqMagnitude", "autocorrelation", "check_cohen", "check_orthonormality", "daubechies",
    "extract_r", "objective", "optimize_roots", "optimize_v_2dof", "phi_samples", "phihat_product", "regularity",
    "scan", "scan_v", "sobolev_exponent", "solve_by_roots", "solve_by_v", "spectral_factorize", "spectral_radius",
    "transfer_matrix", "wavelet_filter",
]
