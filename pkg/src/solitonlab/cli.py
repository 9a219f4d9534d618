"""Command-line entry point: solitonlab <stage> --config <path> [--out <dir>].

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ConfigInvalid, SolitonLabError
from .harness import STAGES, run


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="solitonlab",
        description="Trapped-soliton relaxation laboratory for the generalized NLS",
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sp = sub.add_parser(stage, help=f"run the {stage} pipeline")
        sp.add_argument("--config", required=True, help="experiment configuration file")
        sp.add_argument("--out", default=None, help="artifact directory (default from config)")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        out = run(args.stage, cfg, out_dir=args.out)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolitonLabError as exc:
        print(f"numerical failure in stage {args.stage}: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
