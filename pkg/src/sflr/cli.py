"""Command-line entry point: ``python -m sflr`` or ``sflr``."""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import ExperimentConfig, ExperimentError, emit_report, format_tables, run_experiment


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v)


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v)


def _rho_grid(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, count = text.split(":")
        return float(lo), float(hi), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected min:max:count, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sflr",
        description="Monte-Carlo study of smoothing-spline estimation and kriged prediction "
                    "for spatial functional linear regression.",
    )
    ap.add_argument("--n", type=_ints, default=(10, 15, 20, 25), help="grid side lengths, comma separated")
    ap.add_argument("--snr", type=_floats, default=(0.05, 0.10), help="signal-to-noise ratios in (0,1)")
    ap.add_argument("--case", choices=["A", "B"], nargs="+", default=["A", "B"])
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--p", type=int, default=101, help="observation points per curve")
    ap.add_argument("--m", type=int, default=2, help="penalised derivative order")
    ap.add_argument("--d", type=int, default=2, help="lattice dimension")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rho-grid", type=_rho_grid, default=(1e-8, 1e2, 25), metavar="MIN:MAX:COUNT")
    ap.add_argument("--target", type=_floats, default=(13.5, 5.0), metavar="X,Y")
    ap.add_argument("--lambda-mode", choices=["per-point", "per-replicate"], default="per-point")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes")
    ap.add_argument("--out", default="results", metavar="DIR")
    ap.add_argument("--format", choices=["csv", "table"], default="csv")
    ap.add_argument("--diagnostics", action="store_true",
                    help="also report trace inequality, eigenvalue decay and site separation")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    lo, hi, count = args.rho_grid
    try:
        config = ExperimentConfig(
            d=args.d, n_list=args.n, snr_list=args.snr, cases=tuple(args.case), replications=args.reps,
            p=args.p, m=args.m, rho_min=lo, rho_max=hi, rho_count=count, target=args.target,
            seed=args.seed, lambda_mode=args.lambda_mode, jobs=args.jobs,
        )
        report = run_experiment(config, diagnostics=args.diagnostics)
        paths = emit_report(report, args.out, args.format)
    except (ValueError, OSError, ExperimentError) as exc:
        print(f"sflr: error: {exc}", file=sys.stderr)
        return 2
    if args.verbose:
        print(format_tables(report))
    for path in paths:
        print(path)
    if report.failures:
        print(f"sflr: {len(report.failures)} failure(s), see failures.txt", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
