"""Command line entry point: ``cqpv <experiment> --config FILE``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .config import EXPERIMENTS, ConfigValidationError, load_config
from .report import emit_report
from .runner import EXIT_CONFIG, execute


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqpv", description="Committing QPV simulator and analysis toolkit.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="JSON or YAML experiment file; defaults are used when omitted")
    parser.add_argument("--seed", type=int, help="master seed, overrides the config")
    parser.add_argument("--trials", type=int, help="trial count, overrides the config")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for trial execution")
    parser.add_argument("--out-dir", help="artifact directory (default: outputs.out_dir or ./results)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data = load_config(args.config) if args.config else {}
        if args.seed is not None:
            data["seed"] = args.seed
        if args.trials is not None:
            data["trials"] = args.trials
        if args.workers < 1:
            raise ConfigValidationError(["--workers: must be at least 1"])
        results, code = execute(data, args.experiment, args.workers)
    except ConfigValidationError as err:
        for msg in err.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out_dir or (data.get("outputs") or {}).get("out_dir", "results")
    try:
        written = emit_report(results, out_dir)
    except OSError as err:
        print(f"cannot write artifacts: {err}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
