"""``plot`` console entry point: one figure per invocation."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_CLASSES, FigureRequest, SchemaError, render

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BAD_INPUT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from kvlink experiment CSVs.",
    )
    parser.add_argument(
        "figure_class",
        choices=sorted(FIGURE_CLASSES),
        help="which figure to draw",
    )
    parser.add_argument(
        "--in",
        dest="inputs",
        nargs="+",
        required=True,
        metavar="CSV",
        help="input CSV file(s) in the producing command's schema",
    )
    parser.add_argument(
        "--out",
        required=True,
        metavar="IMG",
        help="output image path (format from the extension)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    request = FigureRequest(
        figure_class=args.figure_class,
        inputs=[Path(p) for p in args.inputs],
        output=Path(args.out),
    )
    try:
        render(request)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
