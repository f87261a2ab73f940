"""``figures <kind> --in <table> --out <image>`` command line."""

import argparse
import sys

from .plots import FIGURE_KINDS, FigureError, PlotSpec, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="figures", description="Render benchmark result files as figures")
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="input_path", required=True,
                        help="CSV/JSON emitted by the simulator CLI")
    parser.add_argument("--out", dest="output_path", required=True,
                        help="image file to write (png/pdf/svg by extension)")
    parser.add_argument("--title")
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(input_path=args.input_path, figure_kind=args.kind,
                    output_path=args.output_path,
                    title=args.title, dpi=args.dpi)
    try:
        render(spec)
    except (FigureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.output_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
