"""Command-line entry point for the benchmark sweep.

Axes can come from a JSON config file and/or be overridden with flags; the
sweep writes a work-precision CSV. Exit code 0 means every run succeeded.
"""

import argparse
import json
import math
import sys

from .bench import DEFAULT_TOLS, SweepConfig, expand_matrix, run_sweep
from .integrators import INTEGRATORS, SCHEMES
from .problems import PROBLEMS


def build_parser():
    p = argparse.ArgumentParser(
        prog="expkit-bench",
        description="Work-precision benchmark sweep for the exponential "
                    "integrator toolkit.")
    p.add_argument("--config", help="JSON file with sweep axes")
    p.add_argument("--problem", choices=PROBLEMS, action="append")
    p.add_argument("--alpha", type=float, action="append",
                   help="diffusion coefficient (repeatable)")
    p.add_argument("--grid", type=int, help="grid points per dimension")
    p.add_argument("--integrator", choices=INTEGRATORS, action="append")
    p.add_argument("--scheme", choices=SCHEMES, action="append")
    p.add_argument("--tol", type=float, action="append",
                   help="single tolerance (repeatable)")
    p.add_argument("--tols", help="comma-separated tolerance list")
    p.add_argument("--t-final", type=float, dest="t_final")
    p.add_argument("--out", default="bench.csv", help="output CSV path")
    p.add_argument("--ref-cache-dir", help="directory for reference caches")
    return p


def sweep_from_args(args):
    cfg = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)

    problems = args.problem or cfg.get("problems") or ["semilinear"]
    alphas = args.alpha or cfg.get("alphas")
    params = cfg.get("params", {})
    if alphas:
        params = {prob: list(alphas) for prob in problems}
    sweep = SweepConfig(
        problems=list(problems),
        params={k: list(v) for k, v in params.items()},
        n=args.grid or cfg.get("grid", 64),
        integrators=list(args.integrator or cfg.get("integrators")
                         or INTEGRATORS),
        schemes=list(args.scheme or cfg.get("schemes") or SCHEMES),
        t_final=args.t_final if args.t_final is not None
        else cfg.get("t_final"),
    )
    if args.tols:
        sweep.tols = tuple(float(t) for t in args.tols.split(","))
    elif args.tol:
        sweep.tols = tuple(args.tol)
    elif "tols" in cfg:
        sweep.tols = tuple(float(t) for t in cfg["tols"])
    else:
        sweep.tols = DEFAULT_TOLS
    return sweep


def main(argv=None):
    args = build_parser().parse_args(argv)
    sweep = sweep_from_args(args)
    configs = expand_matrix(sweep)
    if not configs:
        print("empty sweep matrix", file=sys.stderr)
        return 2
    records = run_sweep(configs, args.out, ref_cache_dir=args.ref_cache_dir)
    failures = [r for r in records if r.failed]
    for rec in failures:
        c = rec.config
        print(f"FAILED {c.problem} {c.integrator}/{c.scheme} "
              f"tol={c.tol:g}: {rec.error}", file=sys.stderr)
    ok = len(records) - len(failures)
    print(f"{ok}/{len(records)} runs succeeded -> {args.out}")
    return 0 if not failures else 1


if __name__ == "__main__":
    sys.exit(main())
