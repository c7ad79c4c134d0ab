"""Command-line entry point: run or validate a JSON experiment config."""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .config import ConfigError, ExperimentConfig, validate
from .experiments import run


def _load(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SystemExit(f"error: config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise SystemExit(f"error: config is not valid JSON: {exc}")


def _cmd_run(args: argparse.Namespace) -> int:
    raw = _load(args.config)
    try:
        report = run(
            raw,
            output_dir=args.output_dir,
            seed=args.seed,
            workers=args.workers,
            make_plots=not args.no_plots,
        )
    except ConfigError as exc:
        print("config invalid:", file=sys.stderr)
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return 2
    doc = report.report
    print(f"experiment: {doc['experiment']}")
    for key, value in sorted(doc["aggregate"].items()):
        if key == "min_slack_witness":
            continue
        print(f"  {key}: {value}")
    if report.output_dir is not None:
        print(f"wrote {len(report.files)} files to {report.output_dir}:")
        for name in report.files:
            print(f"  {name}")
    else:
        print("no output directory configured; files not written")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    raw = _load(args.config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        violations = validate(raw)
    for w in caught:
        print(f"warning: {w.message}")
    if violations:
        print("config invalid:")
        for violation in violations:
            print(f"  - {violation}")
        return 1
    config = ExperimentConfig.from_dict(raw)
    print(f"ok: {config.experiment} config is valid")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ergolab",
        description=(
            "Seeded experiments on special flows and cylindrical cascades: "
            "trajectory-integral zeros, recurrence statistics, and the "
            "image-measure bound, with JSON/CSV/PNG reports."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", type=Path, help="path to the JSON config")
    p_run.add_argument("--output-dir", type=Path, default=None,
                       help="override the config's output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's sampling seed")
    p_run.add_argument("--workers", type=int, default=1,
                       help="sample-level worker processes (default 1)")
    p_run.add_argument("--no-plots", action="store_true",
                       help="skip PNG rendering")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config", type=Path, help="path to the JSON config")
    p_val.set_defaults(func=_cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
