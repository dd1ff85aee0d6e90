import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from heavytraffic.exceptions import ConfigurationError, DomainError, TruncationBiasError, UsageError
from heavytraffic.fraclevy import (
    LimitPath,
    PointCloud,
    boundary_warning,
    choose_w_cut,
    frac_levy_path,
    limit_grid,
    limit_sup,
    moment_recursion,
    residual_cumulant,
    sample_points,
    truncation_m2,
    upsilon,
    upsilon_mean,
    upsilon_scaling_check,
)
from heavytraffic.harness.stats import median_stderr

G = A = 1.5


def test_cloud_area_law(rng):
    counts = np.array([len(sample_points(3.0, 20.0, rng)) for _ in range(1000)])
    assert abs(counts.mean() - 60.0) < 4 * math.sqrt(60.0 / 1000)


def test_first_mark_exponential(rng):
    first = np.array([sample_points(4.0, 5.0, rng).w[0] for _ in range(2000)])
    assert abs(first.mean() - 0.25) < 4 * 0.25 / math.sqrt(2000)


def test_times_uniform(rng):
    cloud = sample_points(7.0, 500.0, rng)
    assert stats.kstest(cloud.v / 7.0, "uniform").pvalue > 0.01
    assert np.all(np.diff(cloud.w) > 0) and cloud.w[-1] <= 500.0


def test_upsilon_trivial_cases(rng):
    cloud = sample_points(2.0, 10.0, rng)
    assert upsilon(cloud, 0.0, 4.0, G, A) == 0.0
    empty = PointCloud(2.0, 10.0, np.empty(0), np.empty(0))
    assert upsilon(empty, 1.0, 4.0, G, A) == 0.0
    with pytest.raises(TruncationBiasError):
        upsilon(cloud, 0.1, 4.0, G, A)


def test_upsilon_mean_oracles():
    assert upsilon_mean(1.0, 4.0, G, A) == pytest.approx(2 * 4 ** (1 / 3), rel=1e-14)
    assert upsilon_mean(0.0, 4.0, G, A) == 0.0
    assert upsilon_mean(1.0, 1.0, 1.0, 1.7) == pytest.approx(1.7 / 0.7)
    # quadrature of the intensity over the truncated region
    iv, _ = integrate.quad(lambda v: (1 - v) ** (G - 1), 0, 1)
    iw, _ = integrate.quad(lambda w: w ** (-1 / A), 0, 4)
    assert upsilon_mean(1.0, 4.0, G, A) == pytest.approx(iv * iw, rel=1e-9)


def test_truncation_m2_oracle():
    assert truncation_m2(1.0, 4.0, G, A) == pytest.approx(0.9449407874211549, rel=1e-14)
    iv, _ = integrate.quad(lambda v: (1 - v) ** (2 * (G - 1)), 0, 1)
    iw, _ = integrate.quad(lambda w: w ** (-2 / A), 4, np.inf)
    assert truncation_m2(1.0, 4.0, G, A) == pytest.approx(iv * iw, rel=1e-9)
    assert truncation_m2(1.0, 1e12, G, A) < 1e-3


@given(st.floats(0.05, 10), st.floats(0.1, 20), st.floats(1.05, 2.5), st.floats(1.1, 1.9), st.floats(0.1, 10))
def test_homogeneity(t, m, gamma, alpha, lam):
    e = gamma - 1 + 1 / alpha
    assert upsilon_mean(lam * t, m, gamma, alpha) == pytest.approx(lam**e * upsilon_mean(t, m, gamma, alpha), rel=1e-12)
    assert truncation_m2(lam * t, m, gamma, alpha) == pytest.approx(lam ** (2 * e) * truncation_m2(t, m, gamma, alpha), rel=1e-12)


@given(st.floats(0.1, 10), st.floats(0.5, 20), st.floats(1.05, 2.5), st.floats(1.1, 1.9))
def test_recursion_base(t, m, gamma, alpha):
    M = moment_recursion(4, t, m, gamma, alpha)
    assert M[0] == pytest.approx(truncation_m2(t, m, gamma, alpha), rel=1e-12)
    assert M[2] == pytest.approx(residual_cumulant(4, t, m, gamma, alpha) + 3 * M[0] ** 2, rel=1e-12)


def test_recursion_hand_values():
    M2, M3, M4 = moment_recursion(4, 1.0, 4.0, G, A)
    # kappa_3 = -(1/2.5)(1/4), kappa_4 = (1/3)(3/5) 4**(-5/3)
    assert M3 == pytest.approx(-0.1, rel=1e-14)
    assert M4 == pytest.approx(0.2 * 4 ** (-5 / 3) + 3 * M2**2, rel=1e-14)
    with pytest.raises(UsageError):
        moment_recursion(1, 1.0, 4.0, G, A)


def test_w_cut_rule():
    assert choose_w_cut(25.0, G, A) == pytest.approx(150.0, rel=1e-12)
    assert choose_w_cut(50.0, G, A) == pytest.approx(75.0, rel=1e-12)
    with pytest.raises(ConfigurationError):
        frac_levy_path(G, A, 1.0, 0.0, t_max=25.0, w_cut=100.0, rng=np.random.default_rng(0))


def test_grid_layout():
    grid = limit_grid(50.0)
    assert grid.size == 2048 and grid[0] == 0.0 and grid[1] == pytest.approx(0.01) and grid[-1] == 50.0
    assert np.all(np.diff(grid) > 0)
    assert np.sum(grid <= 1.0) == 256


def test_path_starts_at_zero_and_is_spectrally_positive(rng):
    path = frac_levy_path(G, A, 1.0, 0.0, grid=limit_grid(5.0, 512, 64), t_max=5.0, rng=rng)
    assert path.values[0] == 0.0
    comp = path.grid**G * A / (A - 1) * path.w_cut ** ((A - 1) / A)
    assert np.all(np.diff(path.values + comp) >= -1e-9)


def test_compensator_centers_the_path():
    rng = np.random.default_rng(17)
    grid = np.array([0.1, 1.0, 5.0])
    vals = np.array([frac_levy_path(G, A, 1.0, 0.0, grid=grid, t_max=5.0, rng=rng).values for _ in range(4000)])
    se = vals.std(axis=0, ddof=1) / math.sqrt(vals.shape[0])
    assert np.all(np.abs(vals.mean(axis=0)) < 4 * se)


def test_limit_sup_trivial_cases(rng):
    grid = limit_grid(5.0, 256, 32)
    zero = LimitPath(grid, np.zeros(grid.size), G, 5.0, 1.0)
    assert limit_sup(zero) == (0.0, 0.0)
    path = frac_levy_path(G, A, 0.6, 0.4, grid=grid, t_max=5.0, rng=rng)
    sup, arg = limit_sup(path)
    assert np.all(sup >= path.values - grid**G)
    assert not boundary_warning(path, arg) or arg >= grid[int(0.9 * grid.size)]


def test_boundary_warning_fires_at_the_end():
    grid = limit_grid(5.0, 256, 32)
    path = LimitPath(grid, 10 * grid**2, G, 5.0, 1.0)
    sup, arg = limit_sup(path)
    assert arg == 5.0 and boundary_warning(path, arg)


def test_memory_lowers_the_median_but_fattens_the_tail():
    # the drift t**gamma pulls the body of the sup down as gamma grows, while a
    # single early jump J still yields a sup of order J**gamma, so the upper tail
    # P(sup > x) ~ x**(-alpha/gamma) gets heavier
    grid = limit_grid(5.0, 256, 32)
    rng = np.random.default_rng(23)
    lo = np.array([limit_sup(frac_levy_path(1.5, A, 1.0, 0.0, grid=grid, t_max=5.0, rng=rng))[0] for _ in range(2000)])
    hi = np.array([limit_sup(frac_levy_path(1.9, A, 1.0, 0.0, grid=grid, t_max=5.0, rng=rng))[0] for _ in range(2000)])
    gap = np.median(lo) - np.median(hi)
    assert gap > 3 * math.hypot(median_stderr(lo), median_stderr(hi))
    p_lo, p_hi = np.mean(lo > 100), np.mean(hi > 100)
    assert p_hi - p_lo > 3 * math.sqrt((p_lo * (1 - p_lo) + p_hi * (1 - p_hi)) / 2000)


def test_scaling_check_identity_and_guards(rng):
    rows = upsilon_scaling_check(G, A, 4.0, 1.0, [0.3], 2000, rng)
    assert rows[0][2] > 0.01
    with pytest.raises(DomainError):
        upsilon_scaling_check(G, A, 4.0, -1.0, [0.3], 10, rng)
