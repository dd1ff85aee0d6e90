"""Monte Carlo orchestration: pre-limit sups, limit sups, condition checks, outputs."""

from __future__ import annotations

import csv
import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import fraclevy, regvar
from ..exceptions import HeavyTrafficError, UsageError
from ..farima import build_coeffs, check_hypMg, karamata_ratio, rv_index_deviation
from ..innovations import decompose_UL, mgf_check, sample_stream
from ..pathsim import PathConvolver, horizon, normalizer, partial_sum_normalizer
from . import stats
from .config import ExperimentConfig

# spawn-key streams; each replicate gets SeedSequence(master, (stream, index, replicate))
PRELIMIT_STREAM = 0
LIMIT_STREAM = 1
ORACLE_STREAM = 2

PRELIMIT_CHUNK = 25
LIMIT_CHUNK = 250


def replicate_rng(master_seed: int, stream: int, index: int, replicate: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(stream, index, replicate))
    return np.random.default_rng(ss)


def _fmt(x) -> str:
    return repr(float(x))


# workers ------------------------------------------------------------------

@functools.lru_cache(maxsize=2)
def _table(spec, n):
    return build_coeffs(spec, n)


@functools.lru_cache(maxsize=1)
def _convolver(spec, n_table, n):
    return PathConvolver(_table(spec, n_table).g, n)


def _prelimit_chunk(config: ExperimentConfig, n_table: int, a_index: int, n_max: int, start: int, stop: int,
                    zero_stream: bool = False):
    spec = config.gspec()
    table = _table(spec, n_table)
    conv = _convolver(spec, n_table, n_max)
    model = config.innovation_model()
    a = config.a_grid[a_index]
    drift = a * table.G[1 : n_max + 1]
    out = []
    for rep in range(start, stop):
        if zero_stream:
            x = np.zeros(n_max)
        else:
            x = sample_stream(model, n_max, replicate_rng(config.master_seed, PRELIMIT_STREAM, a_index, rep))
        d = conv(x) - drift
        j = int(np.argmax(d))
        out.append((rep, float(d[j]), j + 1))
    return out


def _limit_chunk(config: ExperimentConfig, t_max: float, index: int, start: int, stop: int):
    grid = fraclevy.limit_grid(t_max, config.grid_size)
    w_cut = config.w_cut
    q = 1.0 - config.p
    out = []
    for rep in range(start, stop):
        rng = replicate_rng(config.master_seed, LIMIT_STREAM, index, rep)
        path = fraclevy.frac_levy_path(config.gamma, config.alpha, config.p, q, grid=grid, t_max=t_max,
                                       w_cut=w_cut, rng=rng, rel=config.rel_truncation)
        sup, arg_t = fraclevy.limit_sup(path)
        out.append((rep, sup, arg_t, fraclevy.boundary_warning(path, arg_t)))
    return out


def _run_tasks(fn, tasks, workers: int):
    """Run ``fn(*task)`` for every task; results come back in task order."""
    if workers <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


# results ------------------------------------------------------------------

@dataclass
class LimitSample:
    t_max: float
    sup: np.ndarray
    argmax_t: np.ndarray
    warn: np.ndarray

    @property
    def warn_rate(self) -> float:
        return float(np.mean(self.warn)) if self.warn.size else math.nan


@dataclass
class PrelimitSample:
    a: float
    lam: float
    horizon: int
    sup: np.ndarray
    argmax: np.ndarray
    norm_theorem: float
    norm_partial_sum: float
    warn_fraction: float

    @property
    def warn(self) -> np.ndarray:
        return self.argmax > self.warn_fraction * self.horizon

    def scaled(self, which: str = "partial_sum") -> np.ndarray:
        norm = self.norm_partial_sum if which == "partial_sum" else self.norm_theorem
        return self.sup / norm


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    samples: list[PrelimitSample] = field(default_factory=list)
    limit: LimitSample | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def a_grid(self) -> np.ndarray:
        return np.array([s.a for s in self.samples])

    def scaled(self, i: int) -> np.ndarray:
        return self.samples[i].scaled(self.config.normalizer)

    def quantile_table(self) -> np.ndarray:
        """Rows ``(q10, median, q90)`` of the scaled sups, one per drift."""
        if not self.samples:
            return np.empty((0, 3))
        return np.array([stats.quantile_row(self.scaled(i)) for i in range(len(self.samples))])

    def limit_quantiles(self) -> np.ndarray:
        return stats.quantile_row(self.limit.sup) if self.limit is not None else np.full(3, math.nan)

    def ks(self, which: str | None = None) -> np.ndarray:
        which = self.config.normalizer if which is None else which
        if self.limit is None:
            return np.full(len(self.samples), math.nan)
        return np.array([stats.ks_distance(s.scaled(which), self.limit.sup)[0] for s in self.samples])

    def ks_noise(self) -> np.ndarray:
        if self.limit is None:
            return np.full(len(self.samples), math.nan)
        return np.array([stats.ks_noise(s.sup.size, self.limit.sup.size) for s in self.samples])

    def raw_medians(self) -> np.ndarray:
        return np.array([np.median(s.sup) for s in self.samples])

    def slope(self) -> stats.SlopeFit:
        return stats.fit_slope(self.a_grid, self.raw_medians())

    @property
    def target_slope(self) -> float:
        c = self.config
        return 1.0 - c.gamma * c.alpha / (c.alpha - 1.0)

    @property
    def total_draws(self) -> int:
        return sum(s.horizon * s.sup.size for s in self.samples)


def _table_size(config: ExperimentConfig, lams, horizons) -> int:
    return max(max(horizons), int(math.ceil(max(lams))) + 2)


def simulate_prelimit(config: ExperimentConfig, workers: int = 1, zero_stream: bool = False) -> list[PrelimitSample]:
    """``R`` drifted sups at every drift in the grid."""
    model = config.innovation_model()
    spec = config.gspec()
    policy = config.horizon_policy()
    lams = [regvar.k_inverse(model, 1.0 / a) for a in config.a_grid]
    horizons = [horizon(policy, a, model) for a in config.a_grid]
    n_table = _table_size(config, lams, horizons)
    table = _table(spec, n_table)
    tasks = []
    for ai, n_max in enumerate(horizons):
        for start in range(0, config.replicates, PRELIMIT_CHUNK):
            tasks.append((config, n_table, ai, n_max, start, min(start + PRELIMIT_CHUNK, config.replicates), zero_stream))
    chunks = _run_tasks(_prelimit_chunk, tasks, workers)
    rows = {ai: [] for ai in range(len(horizons))}
    for task, chunk in zip(tasks, chunks):
        rows[task[2]].extend(chunk)
    samples = []
    for ai, a in enumerate(config.a_grid):
        got = sorted(rows[ai])
        samples.append(PrelimitSample(
            a=a,
            lam=lams[ai],
            horizon=horizons[ai],
            sup=np.array([r[1] for r in got]),
            argmax=np.array([r[2] for r in got], dtype=np.int64),
            norm_theorem=normalizer(a, spec, model),
            norm_partial_sum=partial_sum_normalizer(a, table, model),
            warn_fraction=config.warn_fraction,
        ))
    return samples


def simulate_limit(config: ExperimentConfig, workers: int = 1, t_max: float | None = None, index: int = 0,
                   replicates: int | None = None) -> LimitSample:
    """Grid sups of the limit process; ``index`` selects an independent stream."""
    t_max = config.t_max if t_max is None else t_max
    n = config.limit_replicates if replicates is None else replicates
    tasks = [(config, t_max, index, s, min(s + LIMIT_CHUNK, n)) for s in range(0, n, LIMIT_CHUNK)]
    rows = [r for chunk in _run_tasks(_limit_chunk, tasks, workers) for r in chunk]
    rows.sort()
    return LimitSample(
        t_max=t_max,
        sup=np.array([r[1] for r in rows]),
        argmax_t=np.array([r[2] for r in rows]),
        warn=np.array([r[3] for r in rows], dtype=bool),
    )


def run_scaling_experiment(config: ExperimentConfig, workers: int = 1, zero_stream: bool = False) -> ExperimentResult:
    samples = simulate_prelimit(config, workers, zero_stream)
    limit = simulate_limit(config, workers)
    result = ExperimentResult(config, samples, limit)
    for s in samples:
        w = int(s.warn.sum())
        if w:
            result.warnings.append(f"a={_fmt(s.a)}: argmax beyond {config.warn_fraction} of horizon in {w} of {s.sup.size} replicates")
    w = int(limit.warn.sum())
    if w:
        result.warnings.append(f"limit: argmax in the last grid decile in {w} of {limit.sup.size} paths")
    return result


# outputs ------------------------------------------------------------------

def _write_csv(path: Path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def write_replicates(samples, out_dir, normalizer_name: str = "partial_sum") -> Path:
    rows = []
    for s in samples:
        scaled = s.scaled(normalizer_name)
        warn = s.warn
        for r in range(s.sup.size):
            rows.append((r, _fmt(s.a), _fmt(s.sup[r]), _fmt(scaled[r]), int(s.argmax[r]), s.horizon, int(warn[r])))
    return _write_csv(Path(out_dir) / "replicates.csv",
                      ("replicate", "a", "sup", "scaled_sup", "argmax", "horizon", "warn"), rows)


def write_limit(limit: LimitSample | None, out_dir) -> Path:
    rows = []
    if limit is not None:
        rows = [(r, _fmt(limit.sup[r]), _fmt(limit.argmax_t[r])) for r in range(limit.sup.size)]
    return _write_csv(Path(out_dir) / "limit.csv", ("replicate", "sup", "argmax_t"), rows)


def emit_outputs(result: ExperimentResult, out_dir) -> list[Path]:
    """Write scaling.csv, limit.csv, slope.txt, scaling.dat and replicates.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    q = result.quantile_table()
    ks = result.ks()
    rows = [
        (_fmt(s.a), _fmt(q[i, 1]), _fmt(q[i, 0]), _fmt(q[i, 2]), _fmt(ks[i]), s.sup.size)
        for i, s in enumerate(result.samples)
    ]
    paths = [_write_csv(out / "scaling.csv", ("a", "median", "q10", "q90", "ks", "n_eff"), rows)]
    paths.append(write_limit(result.limit, out))

    fit = result.slope()
    target = result.target_slope if result.samples else math.nan
    rel = abs(fit.slope - target) / abs(target) if result.samples else math.nan
    lines = [
        f"slope {_fmt(fit.slope)}",
        f"stderr {_fmt(fit.stderr)}",
        f"intercept {_fmt(fit.intercept)}",
        f"points {fit.n_points}",
        f"target {_fmt(target)}",
        f"relative_error {_fmt(rel)}",
    ]
    lines += [f"warning {w}" for w in result.warnings]
    paths.append(out / "slope.txt")
    paths[-1].write_text("\n".join(lines) + "\n")

    med = result.raw_medians()
    dat = ["# a raw_median scaled_q10 scaled_median scaled_q90 ks"]
    for i, s in enumerate(result.samples):
        dat.append(" ".join(_fmt(v) for v in (s.a, med[i], q[i, 0], q[i, 1], q[i, 2], ks[i])))
    paths.append(out / "scaling.dat")
    paths[-1].write_text("\n".join(dat) + "\n")

    paths.append(write_replicates(result.samples, out, result.config.normalizer))
    return paths


# moment oracle --------------------------------------------------------------

def moment_oracle(config: ExperimentConfig, w_big: float = 500.0) -> list[tuple[str, float, float, float]]:
    """``(name, closed form, Monte Carlo, standard error)`` rows for the cloud functional."""
    t, m, g, al = config.oracle_t, config.oracle_m, config.gamma, config.alpha
    rng = replicate_rng(config.master_seed, ORACLE_STREAM, 0, 0)
    ups, res = fraclevy.upsilon_batch(config.oracle_clouds, t, m, g, al, rng, w_big=max(w_big, 2.0 * m / t))
    n = ups.size
    rows = [("mean", fraclevy.upsilon_mean(t, m, g, al), float(ups.mean()), float(ups.std(ddof=1) / math.sqrt(n)))]
    exact = fraclevy.moment_recursion(config.oracle_p_max, t, m, g, al)
    for p, value in enumerate(exact, start=2):
        x = res**p
        rows.append((f"M{p}", value, float(x.mean()), float(x.std(ddof=1) / math.sqrt(n))))
    return rows


def format_moment_report(rows) -> str:
    lines = [f"{'moment':<8}{'closed_form':>22}{'monte_carlo':>22}{'stderr':>22}{'z':>10}"]
    for name, exact, mc, se in rows:
        z = (mc - exact) / se if se > 0 else math.nan
        lines.append(f"{name:<8}{exact:>22.15g}{mc:>22.15g}{se:>22.15g}{z:>10.3f}")
    return "\n".join(lines) + "\n"


# condition checks -------------------------------------------------------------

@dataclass(frozen=True)
class CheckItem:
    name: str
    status: str  # "pass" or "warn"
    detail: str


@dataclass
class CheckReport:
    items: list[CheckItem] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(i.status == "pass" for i in self.items)

    def add(self, name, passed: bool, detail: str):
        self.items.append(CheckItem(name, "pass" if passed else "warn", detail))

    def format(self) -> str:
        return "".join(f"{i.name:<14}{i.status:<6}{i.detail}\n" for i in self.items)


def _nonincreasing(x, slack: float = 1e-12) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.all(np.diff(x) <= slack + 1e-9 * np.abs(x[:-1])))


def _join(pairs) -> str:
    return " ".join(f"{k:g}:{v:.3e}" for k, v in pairs)


def run_condition_checks(config: ExperimentConfig, n_grid=(100, 1000, 10000, 100000)) -> CheckReport:
    """Pass/warn verdicts on the memory and innovation assumptions."""
    report = CheckReport()
    spec = config.gspec()
    n_grid = [int(n) for n in n_grid]
    table = build_coeffs(spec, max(n_grid) + 2)

    dev = [abs(karamata_ratio(table, spec, n) - 1.0) for n in n_grid]
    report.add("karamata", _nonincreasing(dev) and dev[-1] <= 1e-2, _join(zip(n_grid, dev)))
    for delta in (0.1, 0.2, 0.3):
        h = [check_hypMg(table, spec, delta, n) for n in n_grid[1:]]
        report.add(f"hypMg[{delta}]", _nonincreasing(h), _join(zip(n_grid[1:], h)))
    rv = rv_index_deviation(table, np.array(n_grid))
    report.add("rv_index", _nonincreasing(rv), _join(zip(n_grid, rv)))

    base = config.quantile_model()
    law = config.innovation_model()
    report.add("centered", abs(law.mean()) <= 1e-10, f"mean={law.mean():.3e}")

    t_grid = np.array([1e2, 1e3, 1e4, 1e5, 1e6]) * max(1.0, 2.0 * base.p ** (-1.0 / (1.0 - config.kappa)))
    rate = regvar.check_rv_rate(base, config.kappa, t_grid)
    report.add("rv_rate", _nonincreasing([s for _, s in rate]), _join(rate))
    x_grid = base.tail_scale * np.array([1e1, 1e2, 1e3, 1e4, 1e5])
    form = regvar.check_tail_form(base, config.kappa, x_grid)
    report.add("tail_form", _nonincreasing([s for _, s in form]), _join(form))
    upper, _ = regvar.tail_balance(base, x_grid)
    dev_bal = np.abs(np.asarray(upper, dtype=float) - base.p)
    report.add("tail_balance", _nonincreasing(dev_bal) and dev_bal[-1] <= 1e-2, _join(zip(x_grid, dev_bal)))

    if base.p < 1.0:
        try:
            dec = decompose_UL(law)
            rows = np.array(mgf_check(dec, law, np.array([1e-3, 2e-3, 5e-3])))
            lam, lhs, rhs = rows.T
            ok = bool(np.all(lhs[:2] <= rhs[:2] * (1.0 + 1e-6)))
            report.add("lower_mgf", ok, _join(zip(lam, lhs - rhs)))
        except HeavyTrafficError as exc:
            report.add("lower_mgf", False, f"error: {exc}")
    else:
        report.add("lower_mgf", True, "bounded below; moment generating function finite")
    return report
