"""Poisson representation of the fractional Levy limit and its moment oracles.

Points ``(V_i, W_i)`` form a unit-rate Poisson process on ``[0, T] x [0, inf)``;
a point contributes the jump ``W**(-1/alpha)`` at time ``V``.  Fractional
integration of order ``gamma - 1`` turns the compensated sum into the limit
process ``gamma int (t - u)**(gamma-1) dL(u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import comb
from scipy.stats import ks_2samp

from .exceptions import ConfigurationError, DomainError, TruncationBiasError, UsageError

__all__ = [
    "PointCloud",
    "LimitPath",
    "sample_points",
    "upsilon",
    "upsilon_mean",
    "truncation_m2",
    "residual_cumulant",
    "moment_recursion",
    "limit_grid",
    "choose_w_cut",
    "frac_levy_path",
    "limit_sup",
    "upsilon_batch",
    "upsilon_scaling_check",
]

GRID_SIZE = 2048
GEOM_NODES = 256
T_MAX = 50.0
REL_TRUNCATION = 0.01
BOUNDARY_FRACTION = 0.1


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Poisson points on ``[0, t_max] x [0, w_cut]`` sorted by ``w``."""

    t_max: float
    w_cut: float
    v: np.ndarray
    w: np.ndarray

    def __len__(self) -> int:
        return self.v.size


def sample_points(t_max: float, w_cut: float, rng) -> PointCloud:
    """Unit-rate Poisson cloud: ``W`` from cumulated Exp(``1/t_max``) gaps, ``V`` uniform."""
    if not (t_max > 0.0 and w_cut > 0.0):
        raise DomainError("cloud needs t_max > 0 and w_cut > 0")
    mean = t_max * w_cut
    chunk = int(mean + 6.0 * math.sqrt(mean) + 16)
    parts = []
    last = 0.0
    while True:
        w = last + np.cumsum(rng.exponential(1.0 / t_max, chunk))
        inside = w[w <= w_cut]
        parts.append(inside)
        if inside.size < chunk:
            break
        last = w[-1]
    w = np.concatenate(parts)
    v = rng.uniform(0.0, t_max, w.size)
    return PointCloud(float(t_max), float(w_cut), v, w)


def upsilon(cloud: PointCloud, t: float, m: float, gamma: float, alpha: float) -> float:
    """``sum (t - V)_+**(gamma-1) W**(-1/alpha) 1{t W <= m}`` over the cloud."""
    if not (0.0 <= t <= cloud.t_max):
        raise DomainError("t must lie in [0, t_max]")
    if t == 0.0:
        return 0.0
    if cloud.w_cut < m / t:
        raise TruncationBiasError(f"w_cut = {cloud.w_cut} < m/t = {m / t}")
    keep = (cloud.v < t) & (cloud.w <= m / t)
    return float(np.sum((t - cloud.v[keep]) ** (gamma - 1.0) * cloud.w[keep] ** (-1.0 / alpha)))


def upsilon_mean(t: float, m: float, gamma: float, alpha: float) -> float:
    """``E upsilon = t**(gamma-1+1/alpha) / gamma * m**((alpha-1)/alpha) * alpha/(alpha-1)``."""
    return t ** (gamma - 1.0 + 1.0 / alpha) / gamma * m ** ((alpha - 1.0) / alpha) * alpha / (alpha - 1.0)


def residual_cumulant(j: int, t: float, m: float, gamma: float, alpha: float) -> float:
    """``int (f_m - f)**j`` with ``f = (t-v)**(gamma-1) w**(-1/alpha)`` and ``f_m = f 1{t w <= m}``.

    The integrand is ``-f`` on ``{w > m/t}``, hence the sign ``(-1)**j``.
    """
    if j < 2:
        raise DomainError("cumulants of the compensated residual start at order 2")
    e = j * (gamma - 1.0) + 1.0
    ij = t**e / e * alpha / (j - alpha) * (m / t) ** ((alpha - j) / alpha)
    return (-1.0) ** j * ij


def truncation_m2(t: float, m: float, gamma: float, alpha: float) -> float:
    """Second moment of the truncation residual."""
    return t ** (2.0 * (gamma - 1.0 + 1.0 / alpha)) * m ** (1.0 - 2.0 / alpha) * alpha / (
        (2.0 - alpha) * (2.0 * gamma - 1.0)
    )


def moment_recursion(p_max: int, t: float, m: float, gamma: float, alpha: float) -> list[float]:
    """Moments ``M_2..M_pmax`` of the residual from its cumulants.

    ``M_p = sum_{k <= p-2} C(p-1, k) kappa_{p-k} M_k`` with ``M_0 = 1``, ``M_1 = 0``.
    """
    if p_max < 2:
        raise UsageError("p_max must be at least 2")
    M = [1.0, 0.0]
    for p in range(2, p_max + 1):
        M.append(sum(comb(p - 1, k, exact=True) * residual_cumulant(p - k, t, m, gamma, alpha) * M[k] for k in range(p - 1)))
    return M[2:]


# limit paths ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LimitPath:
    """Fractional Levy path on a grid; ``values`` excludes the drift."""

    grid: np.ndarray
    values: np.ndarray
    gamma: float
    t_max: float
    w_cut: float


def limit_grid(t_max: float = T_MAX, size: int = GRID_SIZE, n_geom: int = GEOM_NODES) -> np.ndarray:
    """``t = 0``, geometric nodes on [0.01, 1], then linear nodes on (1, t_max]."""
    if not (t_max > 1.0 and size > n_geom >= 3):
        raise DomainError("grid needs t_max > 1 and more nodes than the geometric part")
    geom = np.geomspace(0.01, 1.0, n_geom - 1)
    lin = np.linspace(1.0, t_max, size - n_geom + 1)[1:]
    return np.concatenate(([0.0], geom, lin))


def choose_w_cut(t_max: float, gamma: float, alpha: float, rel: float = REL_TRUNCATION) -> float:
    """Smallest ``w_cut`` whose residual sd at ``t_max`` is ``rel`` times the mean.

    With ``m = t_max * w_cut`` the ratio sd/mean scales like ``w_cut**(-1/2)``.
    """
    ratio_at_one = math.sqrt(truncation_m2(t_max, t_max, gamma, alpha)) / upsilon_mean(t_max, t_max, gamma, alpha)
    return (ratio_at_one / rel) ** 2


def _check_w_cut(t_max, w_cut, gamma, alpha, rel):
    need = choose_w_cut(t_max, gamma, alpha, rel)
    if w_cut < need * (1.0 - 1e-12):
        raise ConfigurationError(f"w_cut = {w_cut} too small; use at least {need:.6g}")


@numba.njit(cache=True)
def _fractional_sum(v, jumps, grid, expo):
    """``sum_{v_i < t} (t - v_i)**expo * jumps_i`` at each grid node; ``v`` sorted."""
    out = np.zeros(grid.size)
    n = v.size
    half = expo == 0.5
    for j in range(grid.size):
        t = grid[j]
        s = 0.0
        for i in range(n):
            d = t - v[i]
            if d <= 0.0:
                break
            if half:
                s += math.sqrt(d) * jumps[i]
            else:
                s += d**expo * jumps[i]
        out[j] = s
    return out


def _one_sided(gamma, alpha, grid, t_max, w_cut, rng):
    cloud = sample_points(t_max, w_cut, rng)
    order = np.argsort(cloud.v, kind="stable")
    v = cloud.v[order]
    jumps = cloud.w[order] ** (-1.0 / alpha)
    raw = _fractional_sum(v, jumps, grid, gamma - 1.0)
    comp = grid**gamma * alpha / (alpha - 1.0) * w_cut ** ((alpha - 1.0) / alpha)
    return gamma * raw - comp


def frac_levy_path(gamma, alpha, p, q, grid=None, t_max=T_MAX, w_cut=None, rng=None, rel=REL_TRUNCATION) -> LimitPath:
    """``p**(1/alpha) L1 - q**(1/alpha) L2`` for independent one-sided paths ``L1, L2``.

    Each one-sided path is ``gamma sum (t-V)**(gamma-1) W**(-1/alpha)`` over
    ``W <= w_cut`` minus its exact compensator.
    """
    if rng is None:
        raise UsageError("frac_levy_path needs a random generator")
    if not (gamma > 1.0 and 1.0 < alpha < 2.0):
        raise DomainError("need gamma > 1 and 1 < alpha < 2")
    grid = limit_grid(t_max) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0 or grid[-1] > t_max or np.any(np.diff(grid) <= 0.0) or grid[0] < 0.0:
        raise DomainError("grid must be increasing inside [0, t_max]")
    if w_cut is None:
        w_cut = choose_w_cut(t_max, gamma, alpha, rel)
    else:
        _check_w_cut(t_max, w_cut, gamma, alpha, rel)
    values = np.zeros(grid.size)
    if p > 0.0:
        values += p ** (1.0 / alpha) * _one_sided(gamma, alpha, grid, t_max, w_cut, rng)
    if q > 0.0:
        values -= q ** (1.0 / alpha) * _one_sided(gamma, alpha, grid, t_max, w_cut, rng)
    return LimitPath(grid, values, float(gamma), float(t_max), float(w_cut))


def limit_sup(path: LimitPath) -> tuple[float, float]:
    """``max_t (L(t) - t**gamma)`` over the grid and the first time attaining it."""
    d = path.values - path.grid**path.gamma
    j = int(np.argmax(d))
    return float(d[j]), float(path.grid[j])


def boundary_warning(path: LimitPath, argmax_t: float, fraction: float = BOUNDARY_FRACTION) -> bool:
    """True when the maximiser falls in the last ``fraction`` of the grid nodes."""
    j = int(np.searchsorted(path.grid, argmax_t))
    return j >= math.ceil((1.0 - fraction) * path.grid.size)


# batched clouds for the moment oracles ------------------------------------

def upsilon_batch(n_clouds: int, t: float, m: float, gamma: float, alpha: float, rng,
                  w_big: float = 500.0, batch: int = 2000) -> tuple[np.ndarray, np.ndarray]:
    """Independent draws of ``upsilon`` and of the compensated truncation residual.

    Each cloud covers ``[0, t] x [0, w_big]`` (Poisson count, then uniform
    points).  The residual ``-(sum - compensator)`` of the points with
    ``m/t < W <= w_big`` is completed by a Gaussian with the exact variance
    of the points beyond ``w_big``, so its second moment is exact.
    """
    w0 = m / t
    if w_big <= w0:
        raise TruncationBiasError("w_big must exceed m/t")
    a_inv = 1.0 / alpha
    comp = t**gamma / gamma * (w_big ** (1.0 - a_inv) - w0 ** (1.0 - a_inv)) / (1.0 - a_inv)
    tail_var = t ** (2.0 * gamma - 1.0) / (2.0 * gamma - 1.0) * w_big ** (1.0 - 2.0 * a_inv) / (2.0 * a_inv - 1.0)
    ups = np.empty(n_clouds)
    res = np.empty(n_clouds)
    for start in range(0, n_clouds, batch):
        b = min(batch, n_clouds - start)
        counts = rng.poisson(t * w_big, b)
        total = int(counts.sum())
        v = rng.uniform(0.0, t, total)
        w = rng.uniform(0.0, w_big, total)
        ids = np.repeat(np.arange(b), counts)
        f = (t - v) ** (gamma - 1.0) * w ** (-a_inv)
        small = w <= w0
        ups[start : start + b] = np.bincount(ids[small], weights=f[small], minlength=b)
        big = np.bincount(ids[~small], weights=f[~small], minlength=b)
        res[start : start + b] = -(big - comp) - math.sqrt(tail_var) * rng.standard_normal(b)
    return ups, res


def upsilon_scaling_check(gamma, alpha, m, lam, t_grid, replicates, rng, w_big: float | None = None):
    """KS comparison of ``upsilon(lam t)`` with ``lam**(gamma-1+1/alpha) upsilon(t)``.

    Returns ``(t, statistic, pvalue)`` per ``t``; the two samples use
    independent clouds.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t_grid.size == 0:
        raise UsageError("empty t grid")
    if not lam > 0.0:
        raise DomainError("lambda must be positive")
    expo = gamma - 1.0 + 1.0 / alpha
    rows = []
    for t in t_grid:
        big = max(m / t, m / (lam * t)) * 1.0001 if w_big is None else w_big
        left, _ = upsilon_batch(replicates, lam * t, m, gamma, alpha, rng, w_big=big)
        right, _ = upsilon_batch(replicates, t, m, gamma, alpha, rng, w_big=big)
        res = ks_2samp(left, lam**expo * right)
        rows.append((float(t), float(res.statistic), float(res.pvalue)))
    return rows
