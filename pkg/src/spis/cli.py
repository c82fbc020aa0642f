"""Command line entry point: ``spis run | list-scenarios | validate``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import (
    ConfigError,
    bundled_scenarios,
    emit_report,
    load_config,
    resolve_config_path,
    rows_to_csv,
    rows_to_json,
    run_experiment,
)

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spis", description="Saddle-point importance sampling experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every cell of an experiment")
    run.add_argument("config", help="TOML config path or bundled scenario name")
    run.add_argument("--out", help="output file; defaults to the config's output key, else stdout")
    run.add_argument("--workers", type=int, help="worker threads per cell (results do not depend on it)")
    run.add_argument("--format", choices=("csv", "json"), default=None, help="output format (default: from --out suffix, else csv)")

    sub.add_parser("list-scenarios", help="list bundled scenario names")

    check = sub.add_parser("validate", help="check a config without running it")
    check.add_argument("config")
    return parser


def _load(name):
    return load_config(resolve_config_path(name))


def _run(args) -> int:
    config = _load(args.config)
    if args.workers is not None and args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    out = args.out or config.output
    fmt = args.format or ("json" if out and out.endswith(".json") else "csv")
    rows = run_experiment(config, workers=args.workers)
    if out:
        emit_report(rows, out, fmt)
    else:
        sys.stdout.write(rows_to_json(rows) if fmt == "json" else rows_to_csv(rows))
    failed = [r for r in rows if r.error]
    for r in failed:
        print(f"cell {r.scenario}/{r.method}/n={r.n}/N={r.N} failed: {r.error}", file=sys.stderr)
    return EXIT_RUNTIME if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list-scenarios":
            for name, path in sorted(bundled_scenarios().items()):
                print(name)
            return EXIT_OK
        if args.command == "validate":
            config = _load(args.config)
            print(f"{config.scenario}: ok ({len(config.methods)} methods, {len(config.n)} n values, {len(config.N)} N values)")
            return EXIT_OK
        return _run(args)
    except ConfigError as err:
        print(f"invalid config: {err}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
