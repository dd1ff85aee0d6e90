"""Quantiles, tails and scaling functions of regularly varying laws.

The reference family is a two-sided Pareto law with a gap: the magnitude
``|X|`` has tail quantile ``c * Y(u)`` where ``Y(u) = u**(-1/alpha) * h(u)``,
and the sign is positive with probability ``p``.  The slowly varying factor
``h`` is 1 for the exact law, ``1 + A u**eps`` for a power perturbation and
``1 - log u`` for a logarithmic one.  Everything is computed on the
tail-probability scale so that deep-tail quantiles keep full precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import lambertw

from ._validation import (
    check_positive,
    check_probability,
    check_tail_index,
)
from .exceptions import ConfigurationError, DomainError, RangeError, UsageError

__all__ = [
    "Perturbation",
    "QuantileModel",
    "quantile",
    "k_fn",
    "k_inverse",
    "check_rv_rate",
    "check_tail_form",
    "tail_balance",
]

_KINDS = ("none", "power", "log")


@dataclass(frozen=True)
class Perturbation:
    """Slowly varying factor ``h`` multiplying the Pareto tail quantile."""

    kind: str = "none"
    exponent: float = 0.0
    amplitude: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown perturbation {self.kind!r}")
        if self.kind == "power" and not self.exponent > 0.0:
            raise ConfigurationError("power perturbation needs a positive exponent")

    @classmethod
    def parse(cls, text: str) -> "Perturbation":
        """Parse ``none``, ``log`` or ``power(eps, amplitude)``."""
        text = text.strip()
        if text in ("none", "log"):
            return cls(text)
        if text.startswith("power(") and text.endswith(")"):
            parts = text[len("power("):-1].split(",")
            if len(parts) != 2:
                raise ConfigurationError(f"bad power perturbation {text!r}")
            try:
                eps, amp = (float(s) for s in parts)
            except ValueError as exc:
                raise ConfigurationError(f"bad power perturbation {text!r}") from exc
            return cls("power", eps, amp)
        raise ConfigurationError(f"bad perturbation {text!r}")

    def __str__(self) -> str:
        if self.kind == "power":
            return f"power({self.exponent!r}, {self.amplitude!r})"
        return self.kind

    def factor(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "none":
            return np.ones_like(y)
        if self.kind == "power":
            return 1.0 + self.amplitude * y**self.exponent
        return 1.0 - np.log(y)

    def moment(self, s, beta: float):
        """``int_0^s y**(beta-1) h(y) dy`` in closed form."""
        s = np.asarray(s, dtype=float)
        base = s**beta / beta
        if self.kind == "none":
            return base
        if self.kind == "power":
            b2 = beta + self.exponent
            return base + self.amplitude * s**b2 / b2
        with np.errstate(divide="ignore", invalid="ignore"):
            extra = np.where(s > 0, base * (1.0 - np.log(np.where(s > 0, s, 1.0))), 0.0)
        return extra + s**beta / beta**2


def _bisect_decreasing(fn, target, lo, hi, iters=120):
    """Vectorised bisection for a decreasing ``fn`` with ``fn(lo) >= target >= fn(hi)``."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        above = fn(mid) >= target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class QuantileModel:
    """Gapped two-sided Pareto law with an optional slowly varying perturbation.

    ``P(X > x) = p * P(|X| > x)`` for ``x >= x_min`` and
    ``P(X < -x) = q * P(|X| > x)``, with ``q = 1 - p`` and ``x_min = c * h(1)``.
    """

    alpha: float
    c: float = 1.0
    p: float = 1.0
    perturbation: Perturbation = field(default_factory=Perturbation)

    def __post_init__(self):
        check_tail_index(self.alpha)
        check_positive(self.c, "c")
        check_probability(self.p, "p", open_left=True)
        pert = self.perturbation
        if pert.kind == "power":
            amp, eps, inv = pert.amplitude, pert.exponent, 1.0 / self.alpha
            # Y(y) = y^(-1/alpha) (1 + A y^eps) must be positive and strictly decreasing
            if not (1.0 + amp > 0.0 and max(0.0, amp * (eps - inv)) < inv):
                raise ConfigurationError("power perturbation breaks monotonicity of the quantile")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def beta(self) -> float:
        return 1.0 - 1.0 / self.alpha

    @property
    def x_min(self) -> float:
        """Lower end of the magnitude support."""
        return self.c * float(self.perturbation.factor(1.0))

    @property
    def tail_scale(self) -> float:
        """Scale ``c_eff`` with ``P(X > x) ~ (x / c_eff)**(-alpha)``."""
        return self.c * self.p ** (1.0 / self.alpha)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Probability levels where the quantile jumps."""
        return (self.q,) if 0.0 < self.q < 1.0 else ()

    # magnitude law -------------------------------------------------------
    def _Y(self, y):
        y = np.asarray(y, dtype=float)
        return y ** (-1.0 / self.alpha) * self.perturbation.factor(y)

    def _Y_inverse(self, z):
        """Solve ``Y(y) = z`` for ``y`` in (0, 1]; returns 1 below ``Y(1)``."""
        z = np.asarray(z, dtype=float)
        pert = self.perturbation
        zc = np.maximum(z, float(pert.factor(1.0)))
        if pert.kind == "none":
            y = zc ** (-self.alpha)
        elif pert.kind == "log":
            a = self.alpha
            arg = zc * math.exp(1.0 / a) / a
            s = a * lambertw(arg).real
            y = np.exp(1.0 - s)
        else:
            y = np.exp(self._log_Y_inverse_power(np.log(zc)))
        return np.where(z <= float(pert.factor(1.0)), 1.0, np.minimum(y, 1.0))

    def _log_Y_inverse_power(self, lz):
        """Safeguarded Newton for ``log Y(e**ly) = lz`` on ``ly <= 0``."""
        pert = self.perturbation
        inv, amp, eps = 1.0 / self.alpha, pert.amplitude, pert.exponent
        hmin = min(1.0, 1.0 + amp)
        lo = np.minimum(-self.alpha * (lz - math.log(hmin)), 0.0)
        hi = np.zeros_like(lz)
        ly = 0.5 * (lo + hi)
        for _ in range(100):
            e = amp * np.exp(eps * ly)
            f = -inv * ly + np.log1p(e) - lz
            # log Y is decreasing, so f > 0 means the root lies to the right
            lo = np.where(f > 0.0, ly, lo)
            hi = np.where(f > 0.0, hi, ly)
            step = f / (-inv + eps * e / (1.0 + e))
            new = ly - step
            new = np.where((new > lo) & (new < hi), new, 0.5 * (lo + hi))
            if np.all(np.abs(new - ly) <= 4e-16 * np.maximum(1.0, np.abs(ly))):
                return new
            ly = new
        return ly

    def abs_isf(self, u):
        """Tail quantile of ``|X|``: the level exceeded with probability ``u``."""
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u > 1.0)):
            raise DomainError("tail probability must lie in (0, 1]")
        return self.c * self._Y(u)

    def abs_sf(self, x):
        """``P(|X| > x)``."""
        x = np.asarray(x, dtype=float)
        return self._Y_inverse(np.maximum(x, 0.0) / self.c)

    # signed law ----------------------------------------------------------
    def quantile(self, u):
        """Left-continuous quantile ``F^{<-}(u)`` for ``u`` in (0, 1)."""
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u >= 1.0)):
            raise DomainError("quantile level must lie in (0, 1)")
        q = self.q
        lower = u <= q
        with np.errstate(divide="ignore", invalid="ignore"):
            lo_val = -self.c * self._Y(np.where(lower, u / q if q > 0 else 1.0, 1.0))
            hi_val = self.c * self._Y(np.where(lower, 1.0, (1.0 - u) / self.p))
        return np.where(lower, lo_val, hi_val)

    def isf(self, u):
        """``F^{<-}(1 - u)`` evaluated without forming ``1 - u``."""
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u >= 1.0)):
            raise DomainError("tail probability must lie in (0, 1)")
        upper = u < self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            hi_val = self.c * self._Y(np.where(upper, u / self.p, 1.0))
            lo_val = -self.c * self._Y(np.where(upper, 1.0, (1.0 - u) / self.q if self.q > 0 else 1.0))
        return np.where(upper, hi_val, lo_val)

    def sf(self, x):
        """``P(X > x)``."""
        x = np.asarray(x, dtype=float)
        up = self.p * self.abs_sf(x)
        down = 1.0 - self.q * self.abs_sf(-x)
        return np.where(x >= 0.0, up, down)

    def cdf(self, x):
        """``P(X <= x)``."""
        x = np.asarray(x, dtype=float)
        up = 1.0 - self.p * self.abs_sf(x)
        down = self.q * self.abs_sf(-x)
        return np.where(x >= 0.0, up, down)

    def _upper_int(self, s):
        """``int_0^s isf(v) dv`` for ``s <= p``."""
        return self.c * self.p * self.perturbation.moment(np.asarray(s) / self.p, self.beta)

    def _lower_int(self, s):
        """``int_0^s quantile(v) dv`` for ``s <= q``."""
        if self.q == 0.0:
            return np.zeros_like(np.asarray(s, dtype=float))
        return -self.c * self.q * self.perturbation.moment(np.asarray(s) / self.q, self.beta)

    def upper_partial_mean(self, s):
        """``int_0^s F^{<-}(1 - v) dv``, i.e. ``E[X; X above its (1-s)-quantile]``."""
        s = np.asarray(s, dtype=float)
        p, q = self.p, self.q
        inner = self._upper_int(np.minimum(s, p))
        outer = self._lower_int(np.clip(1.0 - s, 0.0, q)) - self._lower_int(q)
        return inner + np.where(s > p, -outer, 0.0)

    def partial_mean(self, u0, u1):
        """``int_{u0}^{u1} F^{<-}(u) du`` for ``0 <= u0 <= u1 <= 1``."""
        u0 = np.asarray(u0, dtype=float)
        u1 = np.asarray(u1, dtype=float)
        q = self.q
        lo = self._lower_int(np.minimum(u1, q)) - self._lower_int(np.minimum(u0, q))
        hi = self._upper_int(np.clip(1.0 - u0, 0.0, self.p)) - self._upper_int(np.clip(1.0 - u1, 0.0, self.p))
        return lo + hi

    def mean(self) -> float:
        m1 = float(self.perturbation.moment(1.0, self.beta))
        return self.c * (self.p - self.q) * m1

    def reflected(self) -> "QuantileModel":
        """Law of ``-X``."""
        if self.q == 0.0:
            raise DomainError("the reflected law has no upper tail")
        return QuantileModel(self.alpha, self.c, self.q, self.perturbation)


def quantile(model, u):
    """Left-continuous quantile of ``model`` at ``u`` in (0, 1)."""
    return model.quantile(u)


# scaling function k ------------------------------------------------------

def k_fn(model, t):
    """``k(t) = t / F_*^{<-}(1 - 1/t)`` for ``t > 1``."""
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 1.0)):
        raise DomainError("k is defined for t > 1 only")
    return t / model.abs_isf(1.0 / t)


_K_NODES = 1024
_K_LOG_RANGE = (math.log1p(1e-9), math.log(1e300))


@lru_cache(maxsize=64)
def _k_table(model):
    log_t = np.linspace(*_K_LOG_RANGE, _K_NODES)
    k = k_fn(model, np.exp(log_t))
    drops = np.nonzero(np.diff(k) <= 0.0)[0]
    start = int(drops[-1]) + 1 if drops.size else 0
    return log_t, k, start


def k_inverse(model, y: float, rtol: float = 1e-15) -> float:
    """Generalised inverse ``inf{t : k(t) >= y}`` on the increasing branch of ``k``."""
    y = float(y)
    log_t, k, start = _k_table(model)
    if not (k[start] < y <= k[-1]):
        raise RangeError(f"{y} lies outside the monotone range [{k[start]}, {k[-1]}] of k")
    j = start + int(np.searchsorted(k[start:], y, side="left"))
    lo, hi = log_t[j - 1], log_t[j]
    while hi - lo > rtol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if float(k_fn(model, math.exp(mid))) >= y:
            hi = mid
        else:
            lo = mid
    return math.exp(hi)


# assumption checkers -----------------------------------------------------

def check_rv_rate(model, kappa: float, t_grid, n_lambda: int = 256) -> list[tuple[float, float]]:
    """Rate at which the tail quantile ratio approaches its power limit.

    Returns ``t**kappa * sup |F^{<-}(1 - l/t) / F^{<-}(1 - 1/t) - l**(-1/alpha)|``
    over ``l`` in ``[t**-kappa, t**kappa]`` for each ``t`` in ``t_grid``.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t_grid.size == 0:
        raise UsageError("empty t grid")
    if not (0.0 < kappa < 1.0):
        raise DomainError("kappa must lie in (0, 1)")
    out = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        if not (t > 1.0 and t ** (kappa - 1.0) < model.p):
            raise DomainError(f"t = {t} puts the lambda range outside the upper tail")
        lam = np.geomspace(t**-kappa, t**kappa, n_lambda)
        ratio = model.isf(lam / t) / model.isf(1.0 / t)
        out[i] = t**kappa * np.max(np.abs(ratio - lam ** (-1.0 / model.alpha)))
    return list(zip(t_grid.tolist(), out.tolist()))


def check_tail_form(model, kappa: float, x_grid) -> list[tuple[float, float]]:
    """``x**(kappa*(alpha+1)) * |P(X > x) (x / c_eff)**alpha - 1|`` on ``x_grid``."""
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if x.size == 0:
        raise UsageError("empty x grid")
    if np.any(x <= 0.0):
        raise DomainError("tail form is evaluated at positive x only")
    a = model.alpha
    stat = x ** (kappa * (a + 1.0)) * np.abs(model.sf(x) * (x / model.tail_scale) ** a - 1.0)
    return list(zip(x.tolist(), stat.tolist()))


def tail_balance(model, x_grid):
    """Upper and lower shares of the magnitude tail, ``(F̄/F̄_*, F(-x)/F̄_*)``."""
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    tot = model.abs_sf(x)
    return model.sf(x) / tot, model.cdf(-x) / tot
