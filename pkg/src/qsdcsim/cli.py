"""Command-line entry point.

    qsdcsim run <config.yaml> [--seed-override S ...] [--out-dir DIR]
                              [--jobs N] [--format {csv,json}]
    qsdcsim table <config.yaml> [--out FILE]

Exit codes: 0 success, 2 config error, 3 session failure, 4 IO error.
Environment variables QSDCSIM_SEEDS (comma-separated) and QSDCSIM_OUT_DIR
override seeds and the output directory only.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .experiment import (
    TABLE_COLUMNS,
    ConfigError,
    ExperimentConfig,
    SessionFailure,
    capacity_table_from_dict,
    rows_to_csv,
    run_experiment,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SESSION = 3
EXIT_IO = 4


def _load_yaml(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return doc


def _seeds_from_env() -> tuple[int, ...] | None:
    raw = os.environ.get("QSDCSIM_SEEDS")
    if not raw:
        return None
    try:
        return tuple(int(s) for s in raw.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(f"QSDCSIM_SEEDS is not a comma-separated int list: {raw!r}") from exc


def _cmd_run(args) -> int:
    doc = _load_yaml(args.config)
    cfg = ExperimentConfig.from_dict(doc)

    seeds = _seeds_from_env()
    if args.seed_override:
        seeds = tuple(args.seed_override)
    if seeds:
        cfg = replace(cfg, seeds=seeds)

    out_dir = os.environ.get("QSDCSIM_OUT_DIR") or args.out_dir
    if out_dir is None:
        out_dir = doc.get("output", {}).get("dir", "qsdcsim-out")

    try:
        summary = run_experiment(cfg, out_dir, jobs=args.jobs, fmt=args.format)
    except SessionFailure as exc:
        print(f"session failure: {exc}", file=sys.stderr)
        return EXIT_SESSION
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {summary['rows']} rows to {out_dir}")
    return EXIT_OK


def _cmd_table(args) -> int:
    doc = _load_yaml(args.config)
    rows = capacity_table_from_dict(doc)
    csv_text = rows_to_csv(rows, TABLE_COLUMNS)
    try:
        if args.out:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            Path(args.out).write_text(csv_text, encoding="utf-8")
            print(f"wrote {len(rows)} rows to {args.out}")
        else:
            sys.stdout.write(csv_text)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsdcsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run seeded protocol sessions / sweeps")
    run_p.add_argument("config", help="YAML experiment config")
    run_p.add_argument("--seed-override", type=int, action="append", default=None)
    run_p.add_argument("--out-dir", default=None)
    run_p.add_argument("--jobs", type=int, default=1)
    run_p.add_argument("--format", choices=("csv", "json"), default="csv")
    run_p.set_defaults(func=_cmd_run)

    table_p = sub.add_parser("table", help="emit a deterministic capacity table")
    table_p.add_argument("config", help="YAML table config")
    table_p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    table_p.set_defaults(func=_cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
