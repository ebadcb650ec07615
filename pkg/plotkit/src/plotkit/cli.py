"""Command line entry: plotkit <figure-id> --run-dir <dir> --out <file>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import FIGURE_IDS, __version__
from .figures import RENDERERS
from .readers import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render one figure from a run directory.",
    )
    parser.add_argument("figure", choices=FIGURE_IDS, help="figure id")
    parser.add_argument("--run-dir", required=True,
                        help="run directory written by the experiment CLI")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--version", action="version",
                        version=f"plotkit {__version__}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        print(f"plotkit: run directory not found: {run_dir}", file=sys.stderr)
        return 2
    try:
        RENDERERS[args.figure](run_dir, Path(args.out))
    except FileNotFoundError as exc:
        print(f"plotkit: missing input: {exc}", file=sys.stderr)
        return 2
    except (SchemaError, ValueError, KeyError) as exc:
        print(f"plotkit: bad input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"plotkit: cannot write output: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
