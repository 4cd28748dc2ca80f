"""Command-line entry points for rendering the lgq CSV outputs."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, plot_ellipses, plot_heatmap
from .io import InputError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lgq-plot", description="Render lgq CSV outputs to images.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_ell = sub.add_parser("ellipses", help="covariance-contour panels")
    p_ell.add_argument("--csv", required=True, help="contour CSV from `lgq fig2`")
    p_ell.add_argument("--out", required=True, help="output image (png/svg)")
    p_ell.add_argument("--panels", default=None, help="comma-separated panel subset")
    p_ell.add_argument("--dpi", type=int, default=200)

    p_map = sub.add_parser("heatmap", help="putative-covariance heat map")
    p_map.add_argument("--csv", required=True, help="sweep CSV from `lgq sweep`")
    p_map.add_argument("--out", required=True, help="output image (png/svg)")
    p_map.add_argument("--markers", default=None, help="marker CSV from `lgq classify --csv`")
    p_map.add_argument("--boundary", default=None, help="boundary CSV from `lgq boundary`")
    p_map.add_argument("--dpi", type=int, default=200)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "ellipses":
            panels = (
                tuple(p.strip() for p in args.panels.split(",") if p.strip())
                if args.panels
                else None
            )
            spec = FigureSpec(
                source_csv=args.csv, output=args.out, panels=panels, dpi=args.dpi
            )
            summary = plot_ellipses(spec)
            print(f"wrote {summary['output']} ({len(summary['panels'])} panel(s))")
        else:
            spec = FigureSpec(
                source_csv=args.csv,
                output=args.out,
                markers_csv=args.markers,
                boundary_csv=args.boundary,
                dpi=args.dpi,
            )
            summary = plot_heatmap(spec)
            print(
                f"wrote {summary['output']} "
                f"({len(summary['markers'])} marker(s), "
                f"{summary['masked_cells']} masked cell(s))"
            )
        return 0
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
