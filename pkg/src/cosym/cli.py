"""Command line entry point: ``cosym list | run <config> | explain <check>``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import CHECKS, DEFAULT_TOLERANCES, parse_config, read_config
from .constructions import registry
from .errors import CosymError, ParseError
from .report import EXPLAIN, run, write_csvs


def _tol_pair(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    name, value = text.split("=", 1)
    name = name.strip()
    if name not in DEFAULT_TOLERANCES:
        raise argparse.ArgumentTypeError(f"unknown tolerance {name!r}")
    return name, value.strip()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cosym", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list registered scenarios")

    r = sub.add_parser("run", help="run the checks of a configuration file")
    r.add_argument("config", help="configuration file, or a scenario name to run with defaults")
    r.add_argument("--out", help="write the JSON report here (default: stdout)")
    r.add_argument("--csv", metavar="DIR", help="write CSV tables and figures into DIR")
    r.add_argument("--seed", type=int)
    r.add_argument("--tol", type=_tol_pair, action="append", default=[], metavar="NAME=VALUE")
    r.add_argument("--no-figures", action="store_true", help="skip the PNG figures when --csv is given")
    r.add_argument("--timing", action="store_true", help="record wall time (breaks byte-identical output)")

    e = sub.add_parser("explain", help="describe what a check computes")
    e.add_argument("check", choices=CHECKS)
    return p


def _load(target: str):
    path = Path(target)
    if path.is_file():
        return read_config(path)
    # convenience: a bare scenario name runs every applicable check
    return parse_config(f"scenario = {target}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, desc in registry():
            print(f"{name:28s} {desc}")
        return 0
    if args.command == "explain":
        print(f"{args.check}: {EXPLAIN[args.check]}")
        return 0

    try:
        cfg = _load(args.config).with_overrides(args.seed, dict(args.tol))
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CosymError as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    report = run(cfg, timing=args.timing)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.csv:
        for path in write_csvs(report, args.csv):
            print(f"wrote {path}", file=sys.stderr)
        if not args.no_figures:
            from .plotting import render_figures

            for path in render_figures(report, args.csv):
                print(f"wrote {path}", file=sys.stderr)
    for name in CHECKS:
        verdict = report.checks[name]["verdict"]
        if verdict != "skipped":
            print(f"{name:10s} {verdict}", file=sys.stderr)
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
