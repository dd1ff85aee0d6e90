"""Statistical helpers for the harness: KS comparisons, medians, slope fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

# standard deviation of the Kolmogorov distribution
KOLMOGOROV_SD = 0.2603


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int


def fit_slope(x, y) -> SlopeFit:
    """Least-squares slope of ``log y`` against ``log x``; needs three points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 3:
        return SlopeFit(math.nan, math.nan, math.nan, int(ok.sum()))
    res = stats.linregress(np.log(x[ok]), np.log(y[ok]))
    return SlopeFit(float(res.slope), float(res.stderr), float(res.intercept), int(ok.sum()))


def ks_distance(x, y) -> tuple[float, float]:
    """Two-sample KS statistic and p-value."""
    res = stats.ks_2samp(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return float(res.statistic), float(res.pvalue)


def ks_noise(n: int, m: int) -> float:
    """Null standard deviation of the two-sample KS statistic."""
    return KOLMOGOROV_SD * math.sqrt((n + m) / (n * m))


def median_stderr(x, z: float = 1.96) -> float:
    """Distribution-free median standard error from the order-statistic interval."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    if n < 2:
        return math.nan
    half = z * math.sqrt(n) / 2.0
    lo = max(0, int(math.floor(n / 2.0 - half)))
    hi = min(n - 1, int(math.ceil(n / 2.0 + half)))
    return float(x[hi] - x[lo]) / (2.0 * z)


def quantile_row(x, probs=(0.1, 0.5, 0.9)) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return np.full(len(probs), math.nan)
    return np.quantile(x, probs)


def one_sided_shift(x, y) -> float:
    """P-value that ``x`` is stochastically larger than ``y`` (one-sided Mann-Whitney)."""
    return float(stats.mannwhitneyu(x, y, alternative="greater").pvalue)
