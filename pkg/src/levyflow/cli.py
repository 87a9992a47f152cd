"""Command line interface: one subcommand per experiment kind plus report.

Exit codes: 0 all criteria passed, 1 criterion failure, 2 configuration
error, 3 admissibility error, 4 numeric failure (non-convergence or
quadrature breakdown).
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENT_KINDS, load_config, parse_config
from .errors import (
    AdmissibilityError,
    ConfigError,
    DivergentMoment,
    EnvelopeFailure,
    InadmissibleModel,
    InverseNoConvergence,
    LambdaSearchFailure,
    NoConvergence,
    QuadratureFailure,
    R0SearchFailure,
    UnsupportedModel,
)

EXIT_OK = 0
EXIT_CRITERION = 1
EXIT_CONFIG = 2
EXIT_ADMISSIBILITY = 3
EXIT_NUMERIC = 4

_ADMISSIBILITY_ERRORS = (AdmissibilityError, InadmissibleModel, UnsupportedModel,
                         DivergentMoment)
_NUMERIC_ERRORS = (NoConvergence, LambdaSearchFailure, R0SearchFailure,
                   InverseNoConvergence, QuadratureFailure, EnvelopeFailure)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levyflow",
        description="Stochastic flow numerics for Levy-driven SDEs with Holder drifts",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--replicas", type=int, default=None, help="override replica count")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
    p = sub.add_parser("report", help="aggregate saved records into a report")
    p.add_argument("records", nargs="*", help="summary.json files")
    p.add_argument("--out", default="out", help="report directory")
    p.add_argument("--no-plots", action="store_true")
    return parser


def run_cli(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "report":
        from .report import emit_report, load_record

        try:
            records = [load_record(p) for p in args.records]
            summary = emit_report(records, args.out, plots=not args.no_plots)
        except OSError as exc:
            print(f"io error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"report: {summary['n_records']} records, "
              f"{'PASS' if summary['all_passed'] else 'FAIL'}")
        return EXIT_OK if summary["all_passed"] else EXIT_CRITERION

    try:
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(
                f"config declares experiment {cfg.kind!r} but subcommand is "
                f"{args.command!r}"
            )
        overrides = {}
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.out is not None:
            overrides["out_dir"] = args.out
        numerics = dict(cfg.numerics)
        if args.replicas is not None:
            numerics["n_replicas"] = args.replicas
        if args.threads != 1:
            numerics["threads"] = args.threads
        raw = cfg.canonical()
        raw["numerics"] = numerics
        raw["seed"] = {"master_seed": overrides.get("master_seed", cfg.master_seed)}
        raw["output"] = {"dir": overrides.get("out_dir", cfg.out_dir),
                         "formats": list(cfg.formats)}
        cfg = parse_config(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .experiments import run_experiment
    from .report import write_record

    try:
        rec = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _ADMISSIBILITY_ERRORS as exc:
        print(f"admissibility error: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    base = write_record(rec, cfg.out_dir, cfg.formats)
    for row in rec.rows:
        flag = "PASS" if row.passed else "FAIL"
        print(f"[{flag}] {row.name} = {row.value:.6g}"
              + ("" if row.oracle != row.oracle else f" (oracle {row.oracle:.6g})"))
    print(f"record written to {base} ({'PASS' if rec.passed else 'FAIL'}, "
          f"{rec.wall_clock:.1f}s)")
    return EXIT_OK if rec.passed else EXIT_CRITERION


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
