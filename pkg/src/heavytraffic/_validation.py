"""Small argument checks shared by the modules and the estimators."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ConfigurationError, DomainError


def check_tail_index(alpha: float) -> float:
    alpha = float(alpha)
    if not (1.0 < alpha < 2.0):
        raise ConfigurationError(f"tail index must lie in (1, 2), got {alpha}")
    return alpha


def check_memory_index(gamma: float) -> float:
    gamma = float(gamma)
    if not (math.isfinite(gamma) and gamma > 0.0):
        raise ConfigurationError(f"memory index gamma must be positive, got {gamma}")
    return gamma


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ConfigurationError(f"{name} must be positive and finite, got {value}")
    return value


def check_probability(value: float, name: str, *, open_left: bool = False) -> float:
    value = float(value)
    low_ok = value > 0.0 if open_left else value >= 0.0
    if not (low_ok and value <= 1.0):
        raise ConfigurationError(f"{name} must be a probability, got {value}")
    return value


def check_unit_interval(u, name: str = "u") -> np.ndarray:
    """Return ``u`` as a float array after checking it lies in (0, 1)."""
    arr = np.asarray(u, dtype=float)
    if arr.size and not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError(f"{name} must lie in the open interval (0, 1)")
    return arr


def check_coefficients(coef, name: str) -> tuple[float, ...]:
    values = tuple(float(c) for c in np.atleast_1d(np.asarray(coef, dtype=float)))
    if not values:
        raise ConfigurationError(f"{name} has no coefficients")
    if not all(math.isfinite(c) for c in values):
        raise ConfigurationError(f"{name} has non-finite entries")
    return values


def as_rows(X) -> np.ndarray:
    """Promote a 1-d stream to a single row, leave 2-d input alone."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DomainError("expected a 1-d stream or a 2-d array of streams")
    return arr
