"""scikit-learn style wrapper: fit() optimizes the root locations and factors |m0|^2."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .design import DesignParams, daubechies, solve_by_roots
from .optimize import optimize_roots
from .regularity import regularity
from .synthesis import FactorizationError, phi_samples, spectral_factorize, wavelet_filter


class RegularFilterDesigner(BaseEstimator):
    """Design a length-2N orthonormal scaling filter with n_z interior double roots.

    There is no training data; ``fit`` ignores ``X`` and ``y`` and runs the
    optimization (skipped for ``n_z=0`` or when ``roots`` is given) followed by
    the spectral factorization.

    Fitted attributes: ``roots_``, ``s0_``, ``report_``, ``sq_``,
    ``filter_`` (a ScalingFilter), ``coef_`` (float taps) and ``result_``
    (the OptimizationResult, or None).
    """

    def __init__(self, N=5, n_z=1, roots=None, starts=None, budget=None, precision=None,
                 factor_precision=30, seed=0):
        self.N = N
        self.n_z = n_z
        self.roots = roots
        self.starts = starts
        self.budget = budget
        self.precision = precision
        self.factor_precision = factor_precision
        self.seed = seed

    def fit(self, X=None, y=None):
        self.result_ = None
        if self.n_z == 0:
            sq = daubechies(self.N, self.precision)
            roots = ()
        elif self.roots is not None:
            roots = tuple(float(z) for z in self.roots)
            sq = solve_by_roots(DesignParams(self.N, self.n_z, roots), self.precision)
        else:
            self.result_ = optimize_roots(self.N, self.n_z, starts=self.starts, budget=self.budget,
                                          precision=self.precision, seed=self.seed)
            roots = self.result_.best_roots
            sq = solve_by_roots(DesignParams(self.N, self.n_z, roots), self.precision)
        self.roots_ = tuple(roots)
        self.sq_ = sq
        self.report_ = regularity(sq)
        self.s0_ = self.report_.s0
        if not self.report_.feasible:
            raise FactorizationError(f"design is infeasible (min |m0|^2 = {sq.min_value:.3e})")
        self.filter_ = spectral_factorize(sq, self.factor_precision)
        self.coef_ = np.asarray(self.filter_.c)
        return self

    def transform(self, X=None):
        """Return the scaling and wavelet filters as a (2, 2N) array."""
        check_is_fitted(self, "filter_")
        return np.vstack([self.filter_.c, wavelet_filter(self.filter_)])

    def score(self, X=None, y=None):
        """Sobolev exponent s0 of the fitted design."""
        check_is_fitted(self, "s0_")
        return self.s0_

    def phi(self, levels=8):
        """Samples of the scaling function on the dyadic grid of the given depth."""
        check_is_fitted(self, "filter_")
        return phi_samples(self.filter_, levels)
