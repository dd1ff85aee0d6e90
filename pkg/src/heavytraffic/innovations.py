"""Centered heavy-tailed innovations, truncated moments and the upper/lower split.

All integrals against a law are written on the probability scale,
``int g(x) dF(x) = int_0^1 g(F^{<-}(u)) du``, which turns heavy tails into
integrable endpoint singularities and handles atoms without special cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn

from .exceptions import DegenerateError, DomainError
from .regvar import QuantileModel, _bisect_decreasing

__all__ = [
    "InnovationModel",
    "DiscreteLaw",
    "Decomposition",
    "sample",
    "sample_stream",
    "mu_plus",
    "decompose_UL",
    "mgf_check",
    "compensated_mgf",
]

CHUNK = 2**14


def _uniform_open(rng, size):
    """Uniforms on (0, 1): the zero draw of ``Generator.random`` is moved to 2**-54."""
    u = rng.random(size)
    u[u == 0.0] = 2.0**-54
    return u


@dataclass(frozen=True)
class InnovationModel:
    """A :class:`QuantileModel` shifted by its mean so that it is centered."""

    base: QuantileModel
    continuous: bool = field(default=True, init=False)

    @property
    def shift(self) -> float:
        return self.base.mean()

    @property
    def alpha(self) -> float:
        return self.base.alpha

    @property
    def p(self) -> float:
        return self.base.p

    @property
    def q(self) -> float:
        return self.base.q

    @property
    def tail_scale(self) -> float:
        return self.base.tail_scale

    @property
    def support(self) -> str:
        return "two-sided" if self.q > 0.0 else "bounded-below"

    @property
    def lower_endpoint(self) -> float:
        return -math.inf if self.q > 0.0 else self.base.x_min - self.shift

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self.base.breakpoints

    def quantile(self, u):
        return self.base.quantile(u) - self.shift

    def isf(self, u):
        return self.base.isf(u) - self.shift

    def sf(self, x):
        return self.base.sf(np.asarray(x, dtype=float) + self.shift)

    def cdf(self, x):
        return self.base.cdf(np.asarray(x, dtype=float) + self.shift)

    def abs_sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return self.sf(x) + self.cdf(-x)

    def abs_isf(self, u):
        """Tail quantile of ``|X|``, found by bisection between shifted bounds."""
        if self.shift == 0.0:
            return self.base.abs_isf(u)
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u > 1.0)):
            raise DomainError("tail probability must lie in (0, 1]")
        mu = abs(self.shift)
        ref = self.base.abs_isf(u)
        lo = np.maximum(ref - mu, 0.0)
        return _bisect_decreasing(self.abs_sf, u, lo, ref + mu, iters=200)

    def partial_mean(self, u0, u1):
        u0 = np.asarray(u0, dtype=float)
        u1 = np.asarray(u1, dtype=float)
        return self.base.partial_mean(u0, u1) - self.shift * (u1 - u0)

    def upper_partial_mean(self, s):
        s = np.asarray(s, dtype=float)
        return self.base.upper_partial_mean(s) - self.shift * s

    def mean(self) -> float:
        return float(self.base.partial_mean(0.0, 1.0)) - self.shift

    def sample(self, rng, size=None):
        """Draws of ``F^{<-}(1 - U)``; ``size=None`` gives one float."""
        if size is None:
            return float(self.isf(_uniform_open(rng, 1))[0])
        return self.isf(_uniform_open(rng, size))

    def reflected(self) -> "InnovationModel":
        return InnovationModel(self.base.reflected())


@dataclass(frozen=True)
class DiscreteLaw:
    """Finitely supported law, used as a hand-checkable test case."""

    values: tuple[float, ...]
    probs: tuple[float, ...]
    continuous: bool = field(default=False, init=False)

    def __post_init__(self):
        order = np.argsort(self.values)
        v = tuple(float(self.values[i]) for i in order)
        w = tuple(float(self.probs[i]) for i in order)
        if len(set(v)) != len(v) or min(w) <= 0.0 or abs(sum(w) - 1.0) > 1e-12:
            raise DomainError("need distinct atoms with positive weights summing to 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", w)

    @property
    def _cum(self):
        return np.concatenate(([0.0], np.cumsum(self.probs)))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(self._cum[1:-1])

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(np.asarray(self.values), x, side="right")
        return self._cum[idx]

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self._cum[1:], u, side="left")
        return np.asarray(self.values)[np.minimum(idx, len(self.values) - 1)]

    def partial_mean(self, u0, u1):
        cum = self._cum
        v = np.asarray(self.values)
        lo = np.clip(np.asarray(u0, dtype=float)[..., None], cum[:-1], cum[1:])
        hi = np.clip(np.asarray(u1, dtype=float)[..., None], cum[:-1], cum[1:])
        return np.sum((hi - lo) * v, axis=-1)

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))


def sample(model: InnovationModel, rng, size=None):
    """One draw (or ``size`` draws) of ``F^{<-}(1 - U)``."""
    return model.sample(rng, size)


def sample_stream(model: InnovationModel, n: int, rng, chunk: int = CHUNK) -> np.ndarray:
    """``n`` innovations generated in fixed-size chunks from one stream."""
    out = np.empty(n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        out[start:stop] = model.sample(rng, stop - start)
    return out


def mu_plus(model, n: float, m: float, method: str = "auto") -> float:
    """``E[X; X > F^{<-}(1 - m/n)]`` for ``0 < m <= n``.

    ``method="quad"`` forces adaptive quadrature of the tail quantile over
    ``(0, m/n)``; the default uses the closed form when the model has one.
    """
    if not (0.0 < m <= n):
        raise DomainError("mu_plus needs 0 < m <= n")
    s = m / n
    if method == "auto" and hasattr(model, "upper_partial_mean"):
        return float(model.upper_partial_mean(s))
    # split at the level where the quantile leaves the upper tail; on each piece
    # an exponential substitution maps the endpoint singularity to an infinite tail
    p = float(getattr(model, "p", 1.0))
    hi = min(s, p)

    def upper(y):
        u = hi * math.exp(-y)
        return float(model.isf(u)) * u if u > 0.0 else 0.0

    val, _ = quad(upper, 0.0, math.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    if s > p:
        # w = 1 - u runs over (1 - s, 1 - p); w = (1 - p) exp(-y)
        y_max = math.inf if s >= 1.0 else math.log((1.0 - p) / (1.0 - s))

        def lower(y):
            w = (1.0 - p) * math.exp(-y)
            return float(model.quantile(w)) * w if w > 0.0 else 0.0

        extra, _ = quad(lower, 0.0, y_max, epsabs=1e-13, epsrel=1e-12, limit=400)
        val += extra
    return val


@dataclass(frozen=True)
class Decomposition:
    """``F = r F_U + (1 - r) F_L`` with ``F_U`` bounded below and ``F_L`` bounded above.

    On the probability scale ``F_U`` keeps the levels ``(u2, u0] U (u1, 1)`` and
    ``F_L`` keeps ``(0, u2] U (u0, u1]``, where ``u0 = F(0)``.
    """

    law: object
    theta: float
    u0: float
    u1: float
    u2: float
    t1: float
    t2: float
    tau1: float
    tau2: float

    @property
    def r(self) -> float:
        return (self.u0 - self.u2) + (1.0 - self.u1)

    def A(self, t):
        """``int_{(t, inf)} x dF``."""
        return self.law.partial_mean(self.law.cdf(t), 1.0)

    def B(self, t):
        """``int_{(t, 0]} x dF`` for ``t < 0``."""
        return self.law.partial_mean(self.law.cdf(t), self.u0)

    def cdf_U(self, x):
        F = self.law.cdf(x)
        return (np.clip(F, self.u2, self.u0) - self.u2 + np.clip(F, self.u1, 1.0) - self.u1) / self.r

    def sf_U(self, x):
        """``1 - cdf_U`` formed from the tail function, exact far out."""
        F = self.law.cdf(x)
        return (self.u0 - np.clip(F, self.u2, self.u0) + np.minimum(self.law.sf(x), 1.0 - self.u1)) / self.r

    def cdf_L(self, x):
        F = self.law.cdf(x)
        return (np.minimum(F, self.u2) + np.clip(F, self.u0, self.u1) - self.u0) / (1.0 - self.r)

    def quantile_U(self, v):
        w = np.asarray(v, dtype=float) * self.r
        first = self.u0 - self.u2
        return self.law.quantile(np.where(w <= first, self.u2 + w, self.u1 + (w - first)))

    def quantile_L(self, v):
        w = np.asarray(v, dtype=float) * (1.0 - self.r)
        return self.law.quantile(np.where(w <= self.u2, w, self.u0 + (w - self.u2)))

    def mean_U(self) -> float:
        pm = self.law.partial_mean
        return float(pm(self.u2, self.u0) + pm(self.u1, 1.0)) / self.r

    def mean_L(self) -> float:
        pm = self.law.partial_mean
        return float(pm(0.0, self.u2) + pm(self.u0, self.u1)) / (1.0 - self.r)

    def _lower_pieces(self):
        """Probability-scale intervals carrying ``F_L``, split at quantile jumps."""
        pieces = []
        for lo, hi in ((0.0, self.u2), (self.u0, self.u1)):
            cuts = [b for b in getattr(self.law, "breakpoints", ()) if lo < b < hi]
            edges = [lo, *cuts, hi]
            pieces.extend((a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a)
        return pieces

    def mgf_L(self, lam: float) -> float:
        """``int e^{lam x} dF_L`` by adaptive quadrature."""
        return 1.0 + float(compensated_mgf(self, np.array([lam]), method="quad")[0]) / (1.0 - self.r)


def _solve(fn, lo, hi):
    return brentq(fn, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=400)


def decompose_UL(model) -> Decomposition:
    """Split a centered law into bounded-below and bounded-above centered parts."""
    u0 = float(model.cdf(0.0))
    A0 = float(model.partial_mean(u0, 1.0))
    theta = 0.5 * A0
    if not (theta > 0.0 and 0.0 < u0 < 1.0):
        raise DegenerateError("law has no mass on one side of zero")
    u1 = _solve(lambda u: float(model.partial_mean(u, 1.0)) - theta, u0, 1.0)
    u2 = _solve(lambda u: float(model.partial_mean(u, u0)) + theta, 0.0, u0)
    t1 = float(model.quantile(u1))
    t2 = float(model.quantile(u2))
    if model.continuous:
        tau1 = tau2 = 0.0
    else:
        tau1 = float(model.cdf(t1)) - u1
        tau2 = float(model.cdf(t2)) - u2
    dec = Decomposition(model, theta, u0, u1, u2, t1, t2, tau1, tau2)
    if not (0.0 < dec.r < 1.0):
        raise DegenerateError(f"degenerate split, r = {dec.r}")
    return dec


# moment generating function of F_L ---------------------------------------

def _psi(y):
    """``e^y - 1 - y`` without cancellation near 0."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-3
    ys = np.where(small, y, 0.0)
    series = ys * ys * (0.5 + ys * (1.0 / 6.0 + ys * (1.0 / 24.0 + ys / 120.0)))
    return np.where(small, series, np.expm1(np.where(small, 0.0, y)) - y)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _gl_panels(edges):
    a, b = edges[:-1, None], edges[1:, None]
    x = 0.5 * (b - a) * _GL_X + 0.5 * (b + a)
    w = 0.5 * (b - a) * _GL_W
    return x.ravel(), w.ravel()


def compensated_mgf(dec: Decomposition, lams, method: str = "gl") -> np.ndarray:
    """``int_{L} (e^{lam Q(u)} - 1 - lam Q(u)) du`` over the levels carrying ``F_L``.

    Dividing by ``1 - r`` gives ``phi_L(lam) - 1`` since ``F_L`` is centered.
    ``method="gl"`` uses composite Gauss-Legendre rules on a log-spaced
    partition (vectorised over ``lams``); ``method="quad"`` uses adaptive
    quadrature one ``lam`` at a time.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if np.any(lams <= 0.0):
        raise DomainError("lambda must be positive")
    law = dec.law
    out = np.zeros(lams.size)
    for lo, hi in dec._lower_pieces():
        if method == "quad":
            for j, lam in enumerate(lams):
                out[j] += _quad_piece(law, lam, lo, hi)
        else:
            out += _gl_piece(law, lams, lo, hi)
    return out


def _cutoff(law, lam_min, lo, hi):
    """Level below which ``lam * Q(u) < -60`` so that ``psi`` is affine in ``Q``."""
    if lo > 0.0:
        return lo
    eps = float(law.cdf(-60.0 / lam_min))
    return min(eps, hi)


def _gl_piece(law, lams, lo, hi):
    total = np.zeros(lams.size)
    eps = _cutoff(law, lams.min(), lo, hi)
    if lo == 0.0 and eps > 0.0:
        # far lower tail: e^{lam Q} is negligible, integrate -1 - lam Q exactly
        total += -eps - lams * float(law.partial_mean(0.0, eps))
        n_pan = max(8, int(math.ceil(math.log(hi / eps) / 0.25)))
        edges = np.geomspace(eps, hi, n_pan + 1)
    else:
        # bounded quantile on this piece
        edges = np.linspace(lo, hi, 17)
    u, w = _gl_panels(edges)
    Q = law.quantile(u)
    total += _psi(np.outer(lams, Q)) @ w
    return total


def _quad_piece(law, lam, lo, hi):
    def f(y):
        u = lo + (hi - lo) * math.exp(-y)
        if u <= 0.0:
            return 0.0
        return float(_psi(lam * float(law.quantile(u)))) * (hi - lo) * math.exp(-y)

    val, _ = quad(f, 0.0, math.inf, epsabs=1e-14, epsrel=1e-11, limit=500)
    return val


def mgf_check(dec: Decomposition, model, lam_grid, tail_constant: float | None = None):
    """Compare the MGF of ``F_L`` with ``1 + D(1/lam) int_0^inf (1 - e^{-u}) u^{-alpha} du``.

    ``D(t) = c F̄(t log t) log t / (1 - r)``.  When ``tail_constant`` is None,
    ``c`` is read off from the model at ``t = 1/lam`` as
    ``P(X < -t) / (F̄(t log t) log t)``.
    """
    lam_grid = np.atleast_1d(np.asarray(lam_grid, dtype=float))
    if np.any(lam_grid <= 0.0):
        raise DomainError("lambda must be positive")
    a = model.alpha
    gamma_int = gamma_fn(2.0 - a) / (a - 1.0)
    comp = compensated_mgf(dec, lam_grid, method="quad")
    rows = []
    for lam, cm in zip(lam_grid, comp):
        t = 1.0 / lam
        ref = float(model.sf(t * math.log(t))) * math.log(t)
        c = float(model.cdf(-t)) / ref if tail_constant is None else tail_constant
        D = c * ref / (1.0 - dec.r)
        lhs = 1.0 + cm / (1.0 - dec.r)
        rows.append((float(lam), lhs, 1.0 + D * gamma_int))
    return rows
