"""Command line: plot <kind> <input.csv> [more.csv] [-o out.png]."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, FigureJob, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render experiment CSV files as PNG figures."
    )
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument(
        "inputs",
        nargs="+",
        help="input CSV(s); 'boundary' accepts an optional second "
        "points file to overlay",
    )
    parser.add_argument("-o", "--output", help="output PNG path (default: input with .png)")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)

    output = args.output or args.inputs[0].rsplit(".", 1)[0] + ".png"
    try:
        job = FigureJob(tuple(args.inputs), args.kind, output, args.title)
        path = render(job)
    except (SchemaError, OSError) as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
