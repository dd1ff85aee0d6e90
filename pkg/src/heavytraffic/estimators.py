"""scikit-learn style wrappers around the path machinery.

Rows of ``X`` are innovation streams ``X_1..X_n``; the transformers map them
to paths or to drifted suprema so they can sit inside a ``Pipeline``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .farima import GSpec, build_coeffs
from .harness.stats import fit_slope
from .pathsim import PathConvolver

__all__ = ["GFProcessTransformer", "DriftedSupremum", "ScalingLawRegressor"]


class GFProcessTransformer(TransformerMixin, BaseEstimator):
    """Map innovation rows to ``S_1..S_n`` with ``S_k = sum_{i<k} g_i X_{k-i}``."""

    def __init__(self, gamma=1.5, theta=(1.0,), phi=(1.0,), method="auto"):
        self.gamma = gamma
        self.theta = theta
        self.phi = phi
        self.method = method

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        self.spec_ = GSpec(self.gamma, tuple(self.theta), tuple(self.phi))
        self.coeffs_ = build_coeffs(self.spec_, X.shape[1])
        self._conv = PathConvolver(self.coeffs_.g, X.shape[1], self.method)
        return self

    def transform(self, X):
        check_is_fitted(self, "coeffs_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return self._conv(X)


class DriftedSupremum(GFProcessTransformer):
    """Columns ``(sup_n (S_n - a G_n), first maximising n)`` for each innovation row."""

    def __init__(self, gamma=1.5, theta=(1.0,), phi=(1.0,), a=0.1, method="auto"):
        super().__init__(gamma, theta, phi, method)
        self.a = a

    def fit(self, X, y=None):
        if not self.a > 0.0:
            raise ValueError("drift a must be positive")
        return super().fit(X, y)

    def transform(self, X):
        S = super().transform(X)
        d = S - self.a * self.coeffs_.G[1 : S.shape[1] + 1]
        j = np.argmax(d, axis=1)
        return np.column_stack([d[np.arange(d.shape[0]), j], j + 1.0])


class ScalingLawRegressor(RegressorMixin, BaseEstimator):
    """Power law ``y = exp(intercept) * a**slope`` fitted on log-log scale."""

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64, ensure_min_samples=3)
        if X.shape[1] != 1:
            raise ValueError("ScalingLawRegressor expects a single feature (the drift a)")
        fit = fit_slope(X[:, 0], y)
        if not np.isfinite(fit.slope):
            raise ValueError("need at least three positive (a, y) pairs")
        self.slope_ = fit.slope
        self.slope_stderr_ = fit.stderr
        self.intercept_ = fit.intercept
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return np.exp(self.intercept_) * X[:, 0] ** self.slope_
