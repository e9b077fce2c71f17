"""Command-line interface: one figure per invocation."""

import argparse
import sys
from pathlib import Path

from . import __version__
from .figures import KINDS, FigureSpec, render
from .io import PlotDataError


def _parse_window(text):
    try:
        lo, hi = text.split(":")
        lo, hi = float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"window must be t0:t1, got {text!r}"
        ) from None
    if hi <= lo:
        raise argparse.ArgumentTypeError(f"window must have t0 < t1, got {text!r}")
    return (lo, hi)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gravwave-plot",
        description="Render figures from a simulator run directory.",
    )
    parser.add_argument("--kind", required=True, choices=KINDS,
                        help="which figure to draw")
    parser.add_argument("--input", required=True, type=Path,
                        help="run directory with diagnostics.csv")
    parser.add_argument("--out", required=True, type=Path,
                        help="output image path (extension picks the format)")
    parser.add_argument("--window", type=_parse_window, default=None,
                        help="fit/shade window t0:t1 (default: from analysis.json)")
    parser.add_argument("--force", action="store_true",
                        help="overwrite an existing output file")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--version", action="version", version=__version__)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(input_dir=args.input, kind=args.kind, out_path=args.out,
                      window=args.window, force=args.force, dpi=args.dpi)
    try:
        out = render(spec)
    except PlotDataError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
