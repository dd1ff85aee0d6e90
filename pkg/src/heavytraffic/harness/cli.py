"""Command line entry point: ``heavytraffic {check,simulate,limit,scaling}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..exceptions import ConfigurationError, HeavyTrafficError
from .config import ExperimentConfig, dumps, load_config
from .experiment import (
    emit_outputs,
    format_moment_report,
    moment_oracle,
    run_condition_checks,
    run_scaling_experiment,
    simulate_limit,
    simulate_prelimit,
    write_limit,
    write_replicates,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3

log = logging.getLogger("heavytraffic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heavytraffic", description="Heavy-traffic Monte Carlo for (g,F)-processes.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("check", "assumption diagnostics for the configured model"),
        ("simulate", "pre-limit drifted sups on the a-grid"),
        ("limit", "limit-process sups and the moment-oracle report"),
        ("scaling", "full scaling experiment with KS comparison and slope fit"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, default=None, help="config file (defaults are used when omitted)")
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides [output] directory)")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides [scaling] master_seed)")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _resolve(args) -> tuple[ExperimentConfig, Path]:
    config = load_config(args.config) if args.config is not None else ExperimentConfig()
    if args.seed is not None:
        config = config.replace(master_seed=args.seed)
    out = args.out if args.out is not None else Path(config.directory)
    if args.workers < 1:
        raise ConfigurationError("--workers must be at least 1")
    return config, out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config, out = _resolve(args)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    (out / "config.ini").write_text(dumps(config))

    try:
        if args.command == "check":
            report = run_condition_checks(config)
            text = report.format()
            (out / "checks.txt").write_text(text)
            sys.stdout.write(text)
            return EXIT_OK if report.ok else EXIT_CHECK
        if args.command == "simulate":
            samples = simulate_prelimit(config, args.workers)
            write_replicates(samples, out, config.normalizer)
            for s in samples:
                log.info("a=%g Lambda=%.6g horizon=%d", s.a, s.lam, s.horizon)
            return EXIT_OK
        if args.command == "limit":
            limit = simulate_limit(config, args.workers)
            write_limit(limit, out)
            report = format_moment_report(moment_oracle(config))
            (out / "moments.txt").write_text(report)
            sys.stdout.write(report)
            if limit.warn.any():
                log.warning("boundary argmax in %d of %d limit paths", int(limit.warn.sum()), limit.sup.size)
            return EXIT_OK
        result = run_scaling_experiment(config, args.workers)
        emit_outputs(result, out)
        sys.stdout.write((out / "slope.txt").read_text())
        return EXIT_OK
    except HeavyTrafficError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
