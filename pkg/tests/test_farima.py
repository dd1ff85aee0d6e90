import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P

from heavytraffic.exceptions import ConfigurationError, DomainError
from heavytraffic.farima import (
    GSpec,
    build_coeffs,
    check_hypMg,
    g_at,
    karamata_ratio,
    rv_index_deviation,
    write_coeffs_csv,
)


def test_partial_sum_process():
    t = build_coeffs(GSpec(1.0), 5)
    assert np.array_equal(t.g, np.ones(5))
    assert np.array_equal(t.G[1:], [1, 2, 3, 4, 5])
    assert t.G[0] == 0.0


def test_gamma_two_is_linear():
    t = build_coeffs(GSpec(2.0), 50)
    assert np.allclose(t.g, np.arange(1, 51), rtol=0, atol=1e-12)


def test_binomial_by_hand():
    t = build_coeffs(GSpec(1.5), 3)
    assert t.g[1] == pytest.approx(1.5)
    assert t.g[2] == pytest.approx(1.875)


def test_tables_are_read_only():
    t = build_coeffs(GSpec(1.5), 4)
    with pytest.raises(ValueError):
        t.g[0] = 2.0


def test_g_at_closed_forms():
    lam = 1e4
    assert g_at(GSpec(1.5), 1 - 1 / lam) == pytest.approx(lam**1.5, rel=1e-10)
    # frozen from 30-digit arithmetic
    assert g_at(GSpec(1.5, (1.0, 0.5), (1.0, -0.2)), 0.5) == pytest.approx(3.92837100659193069, rel=1e-14)


def test_g_at_asymptotic_ratio():
    spec = GSpec(1.3, (1.0, 0.5), (1.0, -0.2))
    x = np.array([1e2, 1e4, 1e6])
    ratio = g_at(spec, 1 - 1 / x) / (x**1.3 * 1.5 / 0.8)
    assert np.all(np.diff(np.abs(ratio - 1)) < 0) and abs(ratio[-1] - 1) < 1e-5


def test_root_condition_and_invariants():
    with pytest.raises(ConfigurationError):
        GSpec(1.5, phi=(1.0, -1.2))
    with pytest.raises(ConfigurationError):
        GSpec(1.5, phi=(1.0, -1.0))
    with pytest.raises(ConfigurationError):
        GSpec(1.5, theta=(1.0, -1.0))
    with pytest.raises(ConfigurationError):
        GSpec(1.5, phi=(0.0, 1.0))
    with pytest.raises(DomainError):
        build_coeffs(GSpec(1.5), 0)


def test_karamata_exact_cases():
    t1 = build_coeffs(GSpec(1.0), 100)
    t2 = build_coeffs(GSpec(2.0), 100)
    for n in (1, 10, 100):
        assert karamata_ratio(t1, GSpec(1.0), n) == 1.0
        assert karamata_ratio(t2, GSpec(2.0), n) == pytest.approx((n + 1) / n, rel=1e-14)


def test_karamata_pure_fractional_closed_form():
    # for the pure case G_n = g_{n-1} * (n - 1 + gamma) / gamma
    spec = GSpec(1.5)
    t = build_coeffs(spec, 10**4)
    for n in (10, 1000, 10**4):
        assert karamata_ratio(t, spec, n) == pytest.approx((n - 1 + 1.5) / n, rel=1e-12)


@pytest.mark.parametrize("gamma", [1.2, 1.5, 1.9])
def test_karamata_monotone(gamma):
    spec = GSpec(gamma)
    t = build_coeffs(spec, 10**5)
    dev = [abs(karamata_ratio(t, spec, n) - 1) for n in (10, 100, 1000, 10**4, 10**5)]
    assert np.all(np.diff(dev) < 0)


def test_hypMg_closed_form_gamma_two():
    spec = GSpec(2.0)
    t = build_coeffs(spec, 10**4 + 1)
    for n, expected in ((1000, 0.006935493278212007), (10**4, 0.0014847379582209948)):
        assert check_hypMg(t, spec, 0.3, n) == pytest.approx(expected, rel=1e-9)
    assert check_hypMg(build_coeffs(GSpec(1.0), 200), GSpec(1.0), 0.2, 100) == 0.0
    with pytest.raises(DomainError):
        check_hypMg(t, spec, 0.6, 100)


def test_rv_index_decreasing():
    t = build_coeffs(GSpec(1.5, (1.0, 0.3), (1.0, -0.4)), 10**6 + 2)
    dev = rv_index_deviation(t, [10**2, 10**3, 10**4, 10**5, 10**6])
    assert np.all(np.diff(dev) < 0)


stable_phi = st.lists(st.floats(-0.45, 0.45), min_size=0, max_size=2).map(lambda c: (1.0, *c))
theta = st.lists(st.floats(-0.4, 0.9), min_size=0, max_size=3).map(lambda c: (1.0, *c))


@given(st.floats(0.3, 2.5), theta, stable_phi)
def test_recurrence_consistency(gamma, th, ph):
    # g * Phi * (1 - x)**gamma recovers Theta on the first 64 terms
    try:
        spec = GSpec(gamma, th, ph)
    except ConfigurationError:
        return
    n = 64
    g = build_coeffs(spec, n).g
    i = np.arange(1, n)
    inv = np.concatenate(([1.0], np.cumprod((i - 1.0 - gamma) / i)))
    back = np.convolve(np.convolve(g, ph)[:n], inv)[:n]
    target = np.zeros(n)
    target[: len(th)] = th
    assert np.allclose(back, target, atol=1e-8 * max(1.0, np.abs(g).max()))


@given(st.floats(1.01, 2.5), st.integers(1, 5000))
def test_partial_sums_exact_differences(gamma, n):
    t = build_coeffs(GSpec(gamma), n)
    assert np.allclose(np.diff(t.G), t.g, rtol=1e-12)
    assert math.isclose(t.G[-1], math.fsum(t.g), rel_tol=1e-14)


def test_write_coeffs_csv(tmp_path):
    t = build_coeffs(GSpec(1.5), 5)
    path = write_coeffs_csv(t, tmp_path / "g.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["i", "g", "G"]
    assert float(rows[3][1]) == t.g[2] and float(rows[3][2]) == t.G[3]


def test_polynomial_convention():
    # ascending coefficients: Theta(x) = 1 + 0.5 x
    spec = GSpec(1.0, (1.0, 0.5))
    assert g_at(spec, 0.2) == pytest.approx(P.polyval(0.2, (1.0, 0.5)) / 0.8)
