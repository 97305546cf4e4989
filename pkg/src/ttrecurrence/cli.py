"""Command line entry point: ``ttrec run|validate|report``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiment import ConfigError, format_report, load_config, load_report, run
from .parallel import WORKERS_ENV


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2
    outdir = Path(args.output) if args.output else Path("results") / Path(args.config).stem
    report = run(config, outdir, workers=args.workers)
    print(format_report(report.as_dict()))
    print(f"wrote {outdir / 'samples.csv'} and {outdir / 'report.json'}")
    return 0 if report.ok else 1


def _cmd_validate(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2
    print(f"ok: scenario {config.scenario}, seed {config.seed}, sha256 {config.sha256[:16]}...")
    return 0


def _cmd_report(args) -> int:
    try:
        data = load_report(args.results_dir)
    except FileNotFoundError:
        print(f"no report.json in {args.results_dir}", file=sys.stderr)
        return 2
    print(format_report(data))
    return 0 if data["status"] == "PASS" else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ttrec", description="Recurrence experiments for T,T^-1 skew products.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="results directory (default results/<config name>)")
    p.add_argument("-w", "--workers", type=int, default=None,
                   help=f"worker processes (default from ${WORKERS_ENV}, else 1)")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)
    p = sub.add_parser("report", help="print the report stored in a results directory")
    p.add_argument("results_dir")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
