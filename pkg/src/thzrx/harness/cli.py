"""Command-line entry point.

    thzrx <scenario> [--config FILE] [--seed N] [--out DIR]
                     [--trials N] [--threads N] [--no-figures]

Scenarios: channel-response, mode-detect, classify, predict.  Exit codes:
0 success, 2 configuration/validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys

from ..channel import ChannelDomainError
from ..classify import ClassifyError
from ..detector import DetectorError
from ..equalize import EqualizeError
from ..predict import PredictError
from ..waveform import WaveformError
from .config import SCENARIOS, ConfigError, load_config
from .runner import NumericFailure, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_VALIDATION_ERRORS = (
    ConfigError,
    ChannelDomainError,
    ClassifyError,
    DetectorError,
    EqualizeError,
    PredictError,
    WaveformError,
    FileNotFoundError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thzrx",
        description="Cognitive THz nano-receiver experiment harness",
    )
    parser.add_argument("scenario", choices=SCENARIOS, help="experiment to run")
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--seed", type=int, help="master seed (reproducibility)")
    parser.add_argument("--out", help="output directory (default: $THZRX_OUT/<scenario>)")
    parser.add_argument("--trials", type=int, help="Monte-Carlo trials per cell")
    parser.add_argument("--threads", type=int, help="worker threads for sweep cells")
    parser.add_argument(
        "--no-figures", action="store_true", help="write CSV artifacts only"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "seed": args.seed,
        "out_dir": args.out,
        "trials": args.trials,
        "threads": args.threads,
    }
    if args.no_figures:
        overrides["figures"] = False
    try:
        config = load_config(args.config, scenario=args.scenario, overrides=overrides)
        artifacts = run(config)
    except _VALIDATION_ERRORS as exc:
        print(f"thzrx: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"thzrx: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"thzrx: wrote {len(artifacts)} artifacts to {config.out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
