from __future__ import annotations

"""fedwind CLI

Commands:
  run        Run every stage: generate -> features -> cluster -> train -> forecast -> evaluate
  generate   Load or synthesize the fleet into <out>/data
  features   Behaviour fingerprints + scaled feature matrix
  cluster    Group turbines with the primary method and every baseline
  train      Federated LSTM-MLP training per group
  forecast   24h rolling forecasts for one representative turbine per group
  evaluate   Comparison tables, PCA projections, plots and evaluation.json

Each command prints a JSON summary on stdout; errors are printed as
``{"ok": false, ...}`` with a nonzero exit status.
"""

import argparse
import json
import logging
import sys
from typing import Any

from .config import METHODS
from .errors import ConfigError, FedwindError
from .pipeline import STAGES
from .sdk import run, stage
from .utils.logs import configure_logging

log = logging.getLogger(__name__)


def _print_json(obj: Any) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, default=str)
    sys.stdout.write("\n")


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "seed": args.seed,
        "method": args.method,
        "out_dir": args.out,
        "forecast.mode": args.mode,
    }


def cmd_run(args: argparse.Namespace) -> None:
    summaries = run(args.config, overrides=_overrides(args))
    _print_json({"ok": True, "stages": summaries})


def cmd_stage(args: argparse.Namespace) -> None:
    summary = stage(args.cmd, args.config, overrides=_overrides(args))
    _print_json({"ok": True, "stage": args.cmd, "summary": summary})


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="YAML or JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="Override the master seed")
    p.add_argument("--method", choices=METHODS, default=None, help="Override the primary method")
    p.add_argument("--out", default=None, help="Run directory (overrides out_dir)")
    p.add_argument(
        "--mode",
        choices=("teacher_forced", "recursive"),
        default=None,
        help="Rolling forecast mode",
    )
    p.add_argument(
        "-v", "--verbose", action="count", default=0, help="Increase verbosity (-v, -vv)"
    )
    p.add_argument("--log-file", default=None, help="Optional log file path")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fedwind", description="Federated clustering + wind power forecasting"
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="Run the full pipeline")
    _add_common(r)
    r.set_defaults(func=cmd_run)

    helps = {
        "generate": "Load or synthesize the fleet",
        "features": "Compute fingerprints and the feature matrix",
        "cluster": "Group turbines (primary method + baselines)",
        "train": "Train one federated model per group",
        "forecast": "Rolling forecasts per group",
        "evaluate": "Write comparison tables, PCA and plots",
    }
    for name in STAGES:
        s = sub.add_parser(name, help=helps[name])
        _add_common(s)
        s.set_defaults(func=cmd_stage)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.log_file)
    try:
        args.func(args)
    except FedwindError as e:
        log.error("%s", e)
        _print_json(
            {
                "ok": False,
                "error": type(e).__name__,
                "message": str(e),
                "stage": getattr(e, "stage", None),
            }
        )
        return 2 if isinstance(e, ConfigError) else 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
