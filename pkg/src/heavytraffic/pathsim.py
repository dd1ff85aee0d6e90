"""Simulation of ``S_n = sum_{0<=i<n} g_i X_{n-i}`` and its drifted supremum."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .exceptions import ConfigurationError, DomainError, UsageError
from .farima import CoeffTable, GSpec, g_at
from .innovations import Decomposition, compensated_mgf, sample_stream
from .regvar import k_fn, k_inverse

__all__ = [
    "PathSample",
    "HorizonPolicy",
    "PathConvolver",
    "convolve_path",
    "simulate_path",
    "sup_statistic",
    "scaled_sup",
    "normalizer",
    "partial_sum_normalizer",
    "horizon",
    "truncation_levels",
    "SplitParts",
    "middle_extreme_split",
    "chernoff_crossing_bound",
    "chernoff_threshold",
]

DIRECT_MAX = 2**12
_COUNT_MAX = 2**62


@dataclass
class PathSample:
    """One simulated path and, once scanned, its drifted supremum."""

    n_max: int
    S: np.ndarray
    a: float = math.nan
    sup: float = math.nan
    argmax: int = 0
    seed: tuple = ()


@dataclass(frozen=True)
class HorizonPolicy:
    """``n_max = ceil(C * Lambda**(1 + eps))``, optionally capped at ``max_scale * Lambda``."""

    epsilon: float = 0.5
    multiplier: float = 1.0
    warn_fraction: float = 0.9
    max_scale: float | None = None

    def __post_init__(self):
        if not (self.epsilon >= 0.0 and self.multiplier > 0.0):
            raise ConfigurationError("horizon needs eps >= 0 and C > 0")
        if not (0.0 < self.warn_fraction <= 1.0):
            raise ConfigurationError("warn fraction must lie in (0, 1]")
        if self.max_scale is not None and not self.max_scale >= 1.0:
            raise ConfigurationError("max_scale must be at least 1")


class PathConvolver:
    """Causal convolution with a fixed coefficient vector, reusing its transform."""

    def __init__(self, g, n: int, method: str = "auto"):
        g = np.asarray(g, dtype=float)
        if g.size < n:
            raise UsageError(f"need {n} coefficients, table has {g.size}")
        if method == "auto":
            method = "direct" if n <= DIRECT_MAX else "fft"
        if method not in ("direct", "fft"):
            raise UsageError(f"unknown convolution method {method!r}")
        self.n = n
        self.method = method
        self.g = g[:n]
        if method == "fft":
            self.size = sfft.next_fast_len(2 * n - 1, real=True)
            self.g_hat = sfft.rfft(self.g, self.size)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise UsageError("stream length does not match the convolver")
        if self.method == "direct":
            if x.ndim == 1:
                return np.convolve(self.g, x)[: self.n]
            return np.stack([np.convolve(self.g, row)[: self.n] for row in x])
        out = sfft.irfft(sfft.rfft(x, self.size, axis=-1) * self.g_hat, self.size, axis=-1)
        return out[..., : self.n]


def convolve_path(g, x, method: str = "auto") -> np.ndarray:
    """``S_n = sum_{i<n} g_i x_{n-i}`` for ``n = 1..len(x)`` (``x[0]`` is ``X_1``)."""
    x = np.asarray(x, dtype=float)
    return PathConvolver(g, x.shape[-1], method)(x)


def simulate_path(coeffs: CoeffTable, model, n_max: int, rng, method: str = "auto") -> PathSample:
    """Draw ``X_1..X_{n_max}`` from ``model`` and return the path ``S_1..S_{n_max}``."""
    if n_max > coeffs.n:
        raise UsageError(f"n_max = {n_max} exceeds the coefficient table ({coeffs.n})")
    x = sample_stream(model, n_max, rng)
    return PathSample(n_max, convolve_path(coeffs.g, x, method))


def sup_statistic(S, coeffs: CoeffTable, a: float) -> tuple[float, int]:
    """Max of ``S_n - a G_n`` over ``n >= 1`` and the first ``n`` attaining it."""
    if a < 0.0:
        raise DomainError("drift must be nonnegative")
    S = np.asarray(S, dtype=float)
    n = S.size
    if n > coeffs.n:
        raise UsageError("path longer than the coefficient table")
    d = S - a * coeffs.G[1 : n + 1]
    j = int(np.argmax(d))
    return float(d[j]), j + 1


def scan_path(path: PathSample, coeffs: CoeffTable, a: float) -> PathSample:
    path.sup, path.argmax = sup_statistic(path.S, coeffs, a)
    path.a = a
    return path


def _lambda(a: float, model) -> float:
    if not a > 0.0:
        raise DomainError("drift must be positive")
    return k_inverse(model, 1.0 / a)


def normalizer(a: float, spec: GSpec, model) -> float:
    """``a g(1 - 1/Lambda)`` with ``Lambda = k^{<-}(1/a)``."""
    lam = _lambda(a, model)
    return a * float(g_at(spec, 1.0 - 1.0 / lam))


def scaled_sup(sup: float, a: float, spec: GSpec, model) -> float:
    """``sup / (a g(1 - 1/Lambda))``."""
    return sup / normalizer(a, spec, model)


def partial_sum_normalizer(a: float, coeffs: CoeffTable, model) -> float:
    """``a G_Lambda`` (linear interpolation between integer indices).

    This is ``G_Lambda / k(Lambda)``, the scale under which ``S_{Lambda t}``
    converges to the fractional Levy process; it differs from
    :func:`normalizer` by the factor ``g(1-1/Lambda) / G_Lambda -> Gamma(gamma+1)``.
    """
    lam = _lambda(a, model)
    lo = int(math.floor(lam))
    if lo + 1 > coeffs.n:
        raise UsageError("coefficient table shorter than Lambda")
    frac = lam - lo
    G = coeffs.G
    return a * (G[lo] + frac * (G[lo + 1] - G[lo]))


def horizon(policy: HorizonPolicy, a: float, model) -> int:
    lam = _lambda(a, model)
    h = policy.multiplier * lam ** (1.0 + policy.epsilon)
    if policy.max_scale is not None:
        h = min(h, policy.max_scale * lam)
    if not h < _COUNT_MAX:
        raise ConfigurationError("horizon overflows the count type; reduce eps or raise a")
    return max(1, math.ceil(h - 1e-9 * h))


# middle / extreme decomposition ------------------------------------------

@dataclass(frozen=True)
class SplitParts:
    """``S_n = middle + upper + lower + drift``."""

    middle: float
    upper: float
    lower: float
    drift: float

    def total(self) -> float:
        return self.middle + self.upper + self.lower + self.drift


def truncation_levels(model, n: int, beta: float = 0.1) -> tuple[float, float, float]:
    """``(a_n, b_n, E[X; a_n <= X <= b_n])`` with ``m_n = n**beta``, continuous laws."""
    s = n**beta / n
    if not 0.0 < s < 0.5:
        raise DomainError("need n**beta < n / 2")
    a_n = float(model.quantile(s))
    b_n = float(model.isf(s))
    mean = float(model.partial_mean(float(model.cdf(a_n)), float(model.cdf(b_n))))
    return a_n, b_n, mean


def middle_extreme_split(x, g, a_n: float, b_n: float, trunc_mean: float = 0.0) -> SplitParts:
    """Split ``S_n`` for ``n = len(x)`` into middle, upper and lower parts.

    ``middle = sum g_i (X_{n-i} 1{a_n <= X <= b_n} - trunc_mean)``,
    ``upper`` and ``lower`` collect innovations above ``b_n`` and below ``a_n``,
    and ``drift = G_n * trunc_mean``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    w = np.asarray(g, dtype=float)[:n][::-1]  # weight g_{n-j} on X_j
    mid = (x >= a_n) & (x <= b_n)
    up = x > b_n
    low = x < a_n
    return SplitParts(
        middle=float(np.dot(w, np.where(mid, x - trunc_mean, -trunc_mean))),
        upper=float(np.dot(w[up], x[up])),
        lower=float(np.dot(w[low], x[low])),
        drift=float(np.sum(w)) * trunc_mean,
    )


# Chernoff bound ------------------------------------------------------------

def _log_phi_sum(coeffs: CoeffTable, dec: Decomposition, n: int, lam: float) -> float:
    s = lam * np.asarray(coeffs.g[:n])
    if np.any(s <= 0.0):
        raise DomainError("Chernoff bound needs positive coefficients")
    uniq, counts = np.unique(s, return_counts=True)
    comp = compensated_mgf(dec, uniq)
    if not np.all(np.isfinite(comp)):
        raise DomainError("moment generating function diverges at the required argument")
    return float(np.dot(counts, np.log1p(comp)))


def chernoff_crossing_bound(coeffs: CoeffTable, dec: Decomposition, n: int, T, Lam: float, model=None):
    """``exp(-lam T G_n / k(Lambda) + sum_{i<n} log phi(lam g_i))`` with ``lam = k(n) log n / G_n``.

    ``phi = r + (1 - r) phi_L``; ``k`` is taken from ``model`` (default: the
    decomposed law).
    """
    if n < 2 or n > coeffs.n:
        raise DomainError("need 2 <= n <= table length")
    model = dec.law if model is None else model
    Gn = coeffs.G[n]
    lam = float(k_fn(model, n)) * math.log(n) / Gn
    log_sum = _log_phi_sum(coeffs, dec, n, lam)
    T = np.asarray(T, dtype=float)
    return np.exp(-lam * T * Gn / float(k_fn(model, Lam)) + log_sum)


def chernoff_threshold(coeffs: CoeffTable, dec: Decomposition, n: int, Lam: float, level: float, model=None) -> float:
    """Smallest ``T`` for which the Chernoff bound is at most ``level``."""
    model = dec.law if model is None else model
    Gn = coeffs.G[n]
    lam = float(k_fn(model, n)) * math.log(n) / Gn
    log_sum = _log_phi_sum(coeffs, dec, n, lam)
    return (log_sum - math.log(level)) * float(k_fn(model, Lam)) / (lam * Gn)
