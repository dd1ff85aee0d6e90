"""Configuration, Monte Carlo orchestration and command line entry point."""

from .config import ExperimentConfig, dumps, load_config, loads, save_config
from .experiment import (
    CheckReport,
    ExperimentResult,
    LimitSample,
    PrelimitSample,
    emit_outputs,
    format_moment_report,
    moment_oracle,
    replicate_rng,
    run_condition_checks,
    run_scaling_experiment,
    simulate_limit,
    simulate_prelimit,
)

__all__ = [
    "ExperimentConfig",
    "dumps",
    "loads",
    "load_config",
    "save_config",
    "CheckReport",
    "ExperimentResult",
    "LimitSample",
    "PrelimitSample",
    "emit_outputs",
    "format_moment_report",
    "moment_oracle",
    "replicate_rng",
    "run_condition_checks",
    "run_scaling_experiment",
    "simulate_limit",
    "simulate_prelimit",
]
