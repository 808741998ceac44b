"""Figure rendering entry point: --figure <id> --in <dir> --out <file>."""
from __future__ import annotations

import argparse
import sys

from .io import FigureInputError
from .render import FIGURES, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shotvqe-figures",
        description="Render experiment figures from harness CSV outputs",
    )
    parser.add_argument("--figure", required=True, choices=sorted(FIGURES))
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding the scenario output folders")
    parser.add_argument("--out", required=True,
                        help="output image path (.png or .svg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = render(args.figure, args.in_dir, args.out)
    except FigureInputError as exc:
        print(f"figure input error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
