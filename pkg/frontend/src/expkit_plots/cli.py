"""Command-line entry point: render work-precision figures from CSVs."""

import argparse
import sys

from .figures import (FigureSpec, MissingColumnsError,
                      render_integrator_comparison,
                      render_scheme_comparison)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="expkit-plots",
        description="Render two-panel log-log work-precision figures "
                    "from benchmark sweep CSVs.")
    ap.add_argument("--csv", action="append", required=True,
                    help="input CSV (repeatable)")
    ap.add_argument("--problem", default=None,
                    help="filter rows to one problem")
    ap.add_argument("--param", type=float, default=None,
                    help="filter rows to one parameter value")
    ap.add_argument("--cost-axis", choices=("rhs_evals", "wall_time_s"),
                    default="rhs_evals")
    ap.add_argument("--group-by", choices=("scheme", "integrator"),
                    default="scheme")
    ap.add_argument("--out", default="figure.png", help="output image path")
    ap.add_argument("--svg", action="store_true",
                    help="also write an SVG next to the output")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    spec = FigureSpec(csv_paths=args.csv, out_path=args.out,
                      problem=args.problem, param=args.param,
                      cost_axis=args.cost_axis, group_by=args.group_by,
                      also_svg=args.svg)
    render = (render_scheme_comparison if args.group_by == "scheme"
              else render_integrator_comparison)
    try:
        render(spec)
    except (MissingColumnsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
