"""Experiment configuration: ``key = value`` lines grouped under ``[section]`` headers."""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from ..exceptions import ConfigurationError, HeavyTrafficError
from ..farima import GSpec
from ..innovations import InnovationModel
from ..pathsim import HorizonPolicy
from ..regvar import Perturbation, QuantileModel, k_inverse

# field name -> (section, key, kind)
_LAYOUT = {
    "gamma": ("model", "gamma", "float"),
    "theta": ("model", "theta", "floats"),
    "phi": ("model", "phi", "floats"),
    "alpha": ("model", "alpha", "float"),
    "p": ("model", "p", "float"),
    "q": ("model", "q", "float"),
    "c": ("model", "c", "float"),
    "perturbation": ("model", "perturbation", "str"),
    "a_grid": ("scaling", "a_grid", "floats"),
    "replicates": ("scaling", "replicates", "int"),
    "master_seed": ("scaling", "master_seed", "int"),
    "normalizer": ("scaling", "normalizer", "str"),
    "epsilon": ("horizon", "epsilon", "float"),
    "multiplier": ("horizon", "multiplier", "float"),
    "warn_fraction": ("horizon", "warn_fraction", "float"),
    "max_scale": ("horizon", "max_scale", "optfloat"),
    "t_max": ("limit", "t_max", "float"),
    "grid_size": ("limit", "grid_size", "int"),
    "limit_replicates": ("limit", "replicates", "int"),
    "w_cut": ("limit", "w_cut", "optfloat"),
    "rel_truncation": ("limit", "rel_truncation", "float"),
    "oracle_t": ("oracle", "t", "float"),
    "oracle_m": ("oracle", "m", "float"),
    "oracle_clouds": ("oracle", "clouds", "int"),
    "oracle_p_max": ("oracle", "p_max", "int"),
    "kappa": ("checks", "kappa", "float"),
    "delta": ("checks", "delta", "float"),
    "beta": ("checks", "beta", "float"),
    "directory": ("output", "directory", "str"),
}

NORMALIZERS = ("partial_sum", "theorem")
MIN_REPLICATES = 100


@dataclass(frozen=True)
class ExperimentConfig:
    gamma: float = 1.5
    theta: tuple[float, ...] = (1.0,)
    phi: tuple[float, ...] = (1.0,)
    alpha: float = 1.5
    p: float = 1.0
    q: float = 0.0
    c: float = 1.0
    perturbation: str = "none"
    a_grid: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    replicates: int = 2000
    master_seed: int = 20240601
    normalizer: str = "partial_sum"
    epsilon: float = 0.5
    multiplier: float = 1.0
    warn_fraction: float = 0.9
    max_scale: float | None = 25.0
    t_max: float = 25.0
    grid_size: int = 2048
    limit_replicates: int = 10000
    w_cut: float | None = None
    rel_truncation: float = 0.01
    oracle_t: float = 1.0
    oracle_m: float = 4.0
    oracle_clouds: int = 100000
    oracle_p_max: int = 4
    kappa: float = 0.1
    delta: float = 0.3
    beta: float = 0.1
    directory: str = "out"

    def __post_init__(self):
        if abs(self.p + self.q - 1.0) > 1e-12:
            raise ConfigurationError("p + q must equal 1")
        if self.normalizer not in NORMALIZERS:
            raise ConfigurationError(f"normalizer must be one of {NORMALIZERS}")
        if not self.a_grid or any(a <= 0.0 for a in self.a_grid):
            raise ConfigurationError("a_grid needs positive entries")
        if any(b >= a for a, b in zip(self.a_grid, self.a_grid[1:])):
            raise ConfigurationError("a_grid must be strictly decreasing")
        if self.replicates < MIN_REPLICATES or self.limit_replicates < MIN_REPLICATES:
            raise ConfigurationError(f"KS comparisons need at least {MIN_REPLICATES} replicates")
        if self.oracle_clouds < 1 or self.oracle_p_max < 2:
            raise ConfigurationError("oracle needs clouds >= 1 and p_max >= 2")
        if self.master_seed < 0:
            raise ConfigurationError("master_seed must be nonnegative")
        # build every model once so that bad parameters surface at load time
        try:
            self.gspec()
            law = self.innovation_model()
            self.horizon_policy()
            for a in self.a_grid:
                k_inverse(law, 1.0 / a)
        except HeavyTrafficError as exc:
            raise ConfigurationError(str(exc)) from exc

    # model objects ----------------------------------------------------------
    def gspec(self) -> GSpec:
        return GSpec(self.gamma, self.theta, self.phi)

    def quantile_model(self) -> QuantileModel:
        return QuantileModel(self.alpha, self.c, self.p, Perturbation.parse(self.perturbation))

    def innovation_model(self) -> InnovationModel:
        return InnovationModel(self.quantile_model())

    def horizon_policy(self) -> HorizonPolicy:
        return HorizonPolicy(self.epsilon, self.multiplier, self.warn_fraction, self.max_scale)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _fmt(value, kind: str) -> str:
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "optfloat":
        return "none" if value is None else repr(float(value))
    if kind == "float":
        return repr(float(value))
    return str(value)


def _parse(text: str, kind: str, key: str):
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "floats":
            return tuple(float(s) for s in text.split(",") if s.strip())
        if kind == "optfloat":
            return None if text.strip().lower() in ("none", "auto") else float(text)
        return text.strip()
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {text!r}") from exc


def dumps(config: ExperimentConfig) -> str:
    """Serialise a configuration; ``loads(dumps(c)) == c``."""
    sections: dict[str, list[str]] = {}
    for f in fields(config):
        section, key, kind = _LAYOUT[f.name]
        sections.setdefault(section, []).append(f"{key} = {_fmt(getattr(config, f.name), kind)}")
    return "\n".join(f"[{s}]\n" + "\n".join(lines) + "\n" for s, lines in sections.items())


def loads(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"unreadable config: {exc}") from exc
    known = {(s, k) for s, k, _ in _LAYOUT.values()}
    for section in parser.sections():
        for key in parser[section]:
            if (section, key) not in known:
                raise ConfigurationError(f"unknown key [{section}] {key}")
    values = {}
    for name, (section, key, kind) in _LAYOUT.items():
        if parser.has_option(section, key):
            values[name] = _parse(parser.get(section, key), kind, key)
    if "p" in values and "q" not in values:
        values["q"] = 1.0 - values["p"]
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def save_config(config: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(dumps(config))
    return path
