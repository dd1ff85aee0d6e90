import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heavytraffic.exceptions import ConfigurationError
from heavytraffic.farima import GSpec, build_coeffs
from heavytraffic.harness import (
    ExperimentConfig,
    ExperimentResult,
    dumps,
    emit_outputs,
    format_moment_report,
    load_config,
    loads,
    moment_oracle,
    run_condition_checks,
    run_scaling_experiment,
    save_config,
    simulate_prelimit,
)
from heavytraffic.harness.cli import main
from heavytraffic.harness.stats import fit_slope, ks_noise, median_stderr

SMALL = dict(a_grid=(0.2, 0.14, 0.1), replicates=100, limit_replicates=100, t_max=10.0, max_scale=10.0,
             oracle_clouds=2000, master_seed=99)


def small_config(**kw):
    return ExperimentConfig(**{**SMALL, **kw})


finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)


@settings(max_examples=20)
@given(
    gamma=st.floats(1.01, 3.0),
    theta=st.lists(st.floats(0.0, 0.9), max_size=3).map(lambda c: (1.0, *c)),
    alpha=st.floats(1.01, 1.99),
    p=st.floats(0.01, 1.0),
    grid=st.lists(st.floats(1e-3, 0.2), min_size=1, max_size=5, unique=True).map(lambda g: tuple(sorted(g, reverse=True))),
    seed=st.integers(0, 2**63),
    max_scale=st.one_of(st.none(), st.floats(1.0, 1e3)),
    pert=st.sampled_from(["none", "log", "power(0.5, 0.25)"]),
)
def test_config_round_trip(gamma, theta, alpha, p, grid, seed, max_scale, pert):
    try:
        c = ExperimentConfig(gamma=gamma, theta=theta, alpha=alpha, p=p, q=1.0 - p, a_grid=grid,
                             master_seed=seed, max_scale=max_scale, perturbation=pert)
    except ConfigurationError:
        return
    assert loads(dumps(c)) == c
    assert dumps(loads(dumps(c))) == dumps(c)


def test_config_file_round_trip(tmp_path):
    c = small_config()
    assert load_config(save_config(c, tmp_path / "c.ini")) == c


@pytest.mark.parametrize("text", [
    "[model]\ngamma = x\n",
    "[model]\ncolour = red\n",
    "[scaling]\na_grid = 0.1, 0.2\n",
    "[scaling]\nreplicates = 10\n",
    "[model]\nphi = 1.0, -1.5\n",
    "[scaling]\na_grid = 0.9\n",
    "[model]\nperturbation = cubic\n",
    "not a config",
])
def test_config_rejects(text):
    with pytest.raises(ConfigurationError):
        loads(text)


def test_missing_q_follows_p():
    assert loads("[model]\np = 0.25\n").q == 0.75


@given(st.floats(-5, 5), st.floats(-3, 3))
def test_slope_recovers_power_law(s, log_c):
    a = np.array([0.2, 0.1, 0.05, 0.025])
    fit = fit_slope(a, np.exp(log_c) * a**s)
    assert abs(fit.slope - s) < 1e-12


def test_slope_needs_three_points():
    assert np.isnan(fit_slope([0.1, 0.2], [1.0, 2.0]).slope)


def test_ks_noise_and_median_se():
    assert ks_noise(100, 100) == pytest.approx(0.2603 * np.sqrt(0.02))
    x = np.random.default_rng(0).standard_normal(10**5)
    assert median_stderr(x) == pytest.approx(np.sqrt(np.pi / 2) / np.sqrt(1e5), rel=0.1)


def test_zero_stream_smoke():
    c = small_config()
    g0 = build_coeffs(GSpec(1.5), 1).g[0]
    for s in simulate_prelimit(c, zero_stream=True):
        assert np.all(s.sup == -s.a * g0) and np.all(s.argmax == 1)


def test_outputs_deterministic_across_workers(tmp_path):
    c = small_config()
    emit_outputs(run_scaling_experiment(c, workers=1), tmp_path / "one")
    emit_outputs(run_scaling_experiment(c, workers=2), tmp_path / "two")
    for name in ("scaling.csv", "limit.csv", "slope.txt", "scaling.dat", "replicates.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
    header = (tmp_path / "one" / "scaling.csv").read_text().splitlines()[0]
    assert header == "a,median,q10,q90,ks,n_eff"


def test_result_tables(tmp_path):
    r = run_scaling_experiment(small_config())
    q = r.quantile_table()
    assert np.all(np.diff(q, axis=1) >= 0)
    assert r.limit.sup.size == 100 and np.all(r.limit.sup >= 0)
    assert r.total_draws == sum(s.horizon for s in r.samples) * 100
    assert r.target_slope == -3.5


def test_empty_result_writes_headers(tmp_path):
    emit_outputs(ExperimentResult(small_config()), tmp_path)
    assert (tmp_path / "scaling.csv").read_text() == "a,median,q10,q90,ks,n_eff\n"
    assert (tmp_path / "limit.csv").read_text() == "replicate,sup,argmax_t\n"
    assert (tmp_path / "replicates.csv").read_text().count("\n") == 1


def test_heavy_traffic_monotonicity():
    c = small_config(a_grid=(0.2, 0.1, 0.05), replicates=200)
    samples = simulate_prelimit(c)
    med = np.array([np.median(s.sup) for s in samples])
    se = np.array([median_stderr(s.sup) for s in samples])
    assert np.all(med[:-1] <= med[1:] + 2 * np.hypot(se[:-1], se[1:]))


def test_condition_checks_exact_model():
    report = run_condition_checks(ExperimentConfig())
    assert report.ok
    stats = {i.name: i for i in report.items}
    assert "rv_rate" in stats and "hypMg[0.3]" in stats
    assert float(stats["rv_rate"].detail.split()[-1].split(":")[1]) <= 1e-6


def test_condition_checks_log_perturbation_warns():
    report = run_condition_checks(ExperimentConfig(perturbation="log"))
    assert not report.ok
    assert {i.name for i in report.items if i.status == "warn"} >= {"rv_rate"}


def test_condition_checks_two_sided():
    report = run_condition_checks(ExperimentConfig(p=0.5, q=0.5))
    assert report.ok
    assert any(i.name == "lower_mgf" and "0.001" in i.detail for i in report.items)


def test_moment_report():
    rows = moment_oracle(small_config())
    assert [r[0] for r in rows] == ["mean", "M2", "M3", "M4"]
    text = format_moment_report(rows)
    assert text.splitlines()[0].split() == ["moment", "closed_form", "monte_carlo", "stderr", "z"]


def test_cli_exit_codes(tmp_path, capsys):
    good = save_config(small_config(), tmp_path / "good.ini")
    assert main(["check", "--config", str(good), "--out", str(tmp_path / "c")]) == 0
    log = tmp_path / "log.ini"
    log.write_text("[model]\nperturbation = log\n")
    assert main(["check", "--config", str(log), "--out", str(tmp_path / "l")]) == 3
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nphi = 1.0, -1.5\n")
    assert main(["check", "--config", str(bad), "--out", str(tmp_path / "b")]) == 2
    assert main(["check", "--config", str(tmp_path / "missing.ini")]) == 2
    assert (tmp_path / "c" / "checks.txt").exists()


def test_cli_simulate_and_limit(tmp_path, capsys):
    cfg = save_config(small_config(), tmp_path / "c.ini")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "s"), "--seed", "5"]) == 0
    lines = (tmp_path / "s" / "replicates.csv").read_text().splitlines()
    assert lines[0] == "replicate,a,sup,scaled_sup,argmax,horizon,warn" and len(lines) == 301
    assert "master_seed = 5" in (tmp_path / "s" / "config.ini").read_text()
    assert main(["limit", "--config", str(cfg), "--out", str(tmp_path / "l")]) == 0
    assert (tmp_path / "l" / "moments.txt").read_text().startswith("moment")
    assert (tmp_path / "l" / "limit.csv").read_text().count("\n") == 101
