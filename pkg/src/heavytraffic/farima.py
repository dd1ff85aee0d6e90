"""Coefficients of ``g(x) = (1 - x)**(-gamma) Theta(x) / Phi(x)`` and their partial sums."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
from numpy.polynomial import polynomial as P
from scipy.signal import lfilter

from ._validation import check_coefficients, check_memory_index
from .exceptions import ConfigurationError, DegenerateError, DomainError

__all__ = [
    "GSpec",
    "CoeffTable",
    "build_coeffs",
    "g_at",
    "karamata_ratio",
    "check_hypMg",
    "rv_index_deviation",
    "write_coeffs_csv",
]

ROOT_TOL = 1e-9


@dataclass(frozen=True)
class GSpec:
    """Memory index ``gamma`` and the ARMA polynomials (ascending coefficients)."""

    gamma: float
    theta: tuple[float, ...] = (1.0,)
    phi: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        check_memory_index(self.gamma)
        object.__setattr__(self, "theta", check_coefficients(self.theta, "theta"))
        object.__setattr__(self, "phi", check_coefficients(self.phi, "phi"))
        if self.phi[0] == 0.0:
            raise ConfigurationError("Phi(0) must be nonzero")
        if abs(sum(self.theta)) <= ROOT_TOL * sum(abs(t) for t in self.theta):
            raise ConfigurationError("Theta(1) must be nonzero")
        if len(self.phi) > 1:
            # roots of the reciprocal polynomial are 1/z for the roots z of Phi;
            # its leading coefficient Phi(0) is nonzero, so this stays finite
            inv_roots = np.roots(self.phi)
            if np.any(np.abs(inv_roots) * (1.0 + ROOT_TOL) >= 1.0):
                raise ConfigurationError("Phi has a root in the closed unit disk")


@dataclass(frozen=True, eq=False)
class CoeffTable:
    """``g[i]`` for ``i < n`` and partial sums ``G[k] = g_0 + ... + g_{k-1}``.

    ``G`` has length ``n + 1`` with ``G[0] = 0``.
    """

    spec: GSpec
    g: np.ndarray
    G: np.ndarray

    @property
    def n(self) -> int:
        return self.g.size


@numba.njit(cache=True)
def _kahan_cumsum(x):
    out = np.empty(x.size + 1)
    out[0] = 0.0
    s = 0.0
    comp = 0.0
    for i in range(x.size):
        y = x[i] - comp
        t = s + y
        comp = (t - s) - y
        s = t
        out[i + 1] = s
    return out


def _binomial_series(gamma: float, n: int) -> np.ndarray:
    """Coefficients of ``(1 - x)**(-gamma)``."""
    i = np.arange(1, n, dtype=float)
    return np.concatenate(([1.0], np.cumprod((i - 1.0 + gamma) / i)))


def build_coeffs(spec: GSpec, n: int) -> CoeffTable:
    """Tabulate ``g_0 .. g_{n-1}`` and their compensated partial sums."""
    if n < 1:
        raise DomainError("need at least one coefficient")
    b = _binomial_series(spec.gamma, n)
    num = np.convolve(b, spec.theta)[:n]
    g = lfilter([1.0], spec.phi, num)
    G = _kahan_cumsum(g)
    g.setflags(write=False)
    G.setflags(write=False)
    return CoeffTable(spec, g, G)


def g_at(spec: GSpec, x):
    """Closed form of the generating function for ``x`` in [0, 1)."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x >= 1.0)):
        raise DomainError("g is evaluated on [0, 1)")
    return (1.0 - x) ** (-spec.gamma) * P.polyval(x, spec.theta) / P.polyval(x, spec.phi)


def karamata_ratio(table: CoeffTable, spec: GSpec, n: int) -> float:
    """``gamma * G_n / (n * g_{n-1})``, which tends to 1."""
    if not (1 <= n <= table.n):
        raise DomainError(f"n = {n} outside the table range [1, {table.n}]")
    if table.g[n - 1] == 0.0:
        raise DegenerateError(f"g[{n - 1}] vanishes")
    return spec.gamma * table.G[n] / (n * table.g[n - 1])


def check_hypMg(table: CoeffTable, spec: GSpec, delta: float, n: int) -> float:
    """``n**delta * max |g_i / g_n - (i/n)**(gamma-1)|`` over ``n**(1-delta) <= i <= n``."""
    if not (0.0 < delta < 0.5):
        raise DomainError("delta must lie in (0, 1/2)")
    if not (1 <= n < table.n):
        raise DomainError(f"n = {n} needs a table longer than {n}")
    i0 = math.ceil(n ** (1.0 - delta) - 1e-9)
    i = np.arange(i0, n + 1)
    dev = table.g[i] / table.g[n] - (i / n) ** (spec.gamma - 1.0)
    return n**delta * float(np.max(np.abs(dev)))


def rv_index_deviation(table: CoeffTable, n) -> np.ndarray:
    """``|n (g_{n+1} / g_n - 1) - (gamma - 1)|``; vanishes for regularly varying g."""
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if np.any(n < 1) or np.any(n + 1 >= table.n):
        raise DomainError("n out of table range")
    g = table.g
    return np.abs(n * (g[n + 1] / g[n] - 1.0) - (table.spec.gamma - 1.0))


def write_coeffs_csv(table: CoeffTable, path) -> Path:
    """Write ``i, g_i`` and the running sum ``g_0 + ... + g_i``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "g", "G"])
        for i in range(table.n):
            w.writerow([i, repr(float(table.g[i])), repr(float(table.G[i + 1]))])
    return path
