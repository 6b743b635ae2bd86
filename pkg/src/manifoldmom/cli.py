"""Command line interface.

Two subcommands:

``sim``     runs one of the five simulations or the hand study and writes
            the result table (or hand artifacts) to ``--out``;
``bounds``  prints the planning table of Chebyshev eta, deviation constant,
            and concentration bound over a grid of alpha values.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import DataError, DomainError, EstimationError
from .experiments import (
    bounds_csv_text,
    default_hands_path,
    load_landmarks,
    make_config,
    report_bounds,
    run_experiment,
    run_hands,
    run_rpga_experiment,
)
from .geometry import MetricKind

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _int_list(text: str):
    try:
        return tuple(int(v) for v in text.split(",") if v != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from exc


def _float_list(text: str):
    try:
        return tuple(float(v) for v in text.split(",") if v != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manifoldmom",
        description="Median-of-means robust estimation experiments on manifolds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="run a simulation or the hand study")
    sim.add_argument("--experiment", required=True,
                     choices=["sim1", "sim2", "sim3", "sim4", "sim5", "hands"])
    sim.add_argument("--runs", type=int, default=None, help="replicate count")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=None, help="output CSV path (directory for hands)")
    sim.add_argument("--full", action="store_true", help="use the published run counts")
    sim.add_argument("--metric", choices=["intrinsic", "extrinsic"], default=None)
    sim.add_argument("--groups", type=_int_list, default=None, help="e.g. 1,5,15,30,60")
    sim.add_argument("--outliers", type=_int_list, default=None, help="e.g. 0,5,10,15")
    sim.add_argument("--outlier-mode", default=None,
                     choices=["conditional", "uniform", "cluster", "shell"])
    sim.add_argument("--data", default=None, help="landmark CSV for the hand study")

    bnd = sub.add_parser("bounds", help="print the bound planning table")
    bnd.add_argument("--experiment", default="sim1",
                     choices=["sim1", "sim2", "sim3", "sim4", "sim5"])
    bnd.add_argument("--epsilon", type=float, required=True)
    bnd.add_argument("--alpha-grid", type=_float_list, required=True, help="e.g. 0.1,0.2,0.3")
    bnd.add_argument("--groups", type=_int_list, default=None)
    bnd.add_argument("--seed", type=int, default=0)
    bnd.add_argument("--draws", type=int, default=20000)
    bnd.add_argument("--out", default=None)
    return parser


def _config_from_args(args) -> "ExperimentConfig":
    overrides = {"seed": args.seed}
    if args.runs is not None:
        overrides["runs"] = args.runs
    if getattr(args, "metric", None):
        overrides["metric"] = MetricKind(args.metric)
    if getattr(args, "groups", None):
        overrides["group_counts"] = args.groups
    if getattr(args, "outliers", None) is not None:
        overrides["outlier_counts"] = args.outliers
    if getattr(args, "outlier_mode", None):
        overrides["outlier_mode"] = args.outlier_mode
    return make_config(args.experiment, full=getattr(args, "full", False), **overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sim":
            return _run_sim(args)
        return _run_bounds(args)
    except (DomainError, EstimationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _run_sim(args) -> int:
    config = _config_from_args(args)
    if args.experiment == "hands":
        dataset = load_landmarks(args.data or default_hands_path())
        result = run_hands(config, dataset, out_dir=args.out or ".")
        print(f"distance of contaminated mean to clean mean:   {result.mean_to_clean:.6f}")
        print(f"distance of geometric median to clean mean:    {result.median_to_clean:.6f}")
        for name, path in result.artifact_paths.items():
            print(f"wrote {name}: {path}")
        return EXIT_OK
    if args.experiment == "sim5":
        table = run_rpga_experiment(config)
    else:
        table = run_experiment(config)
    if args.out:
        table.write_csv(args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(table.csv_text())
    return EXIT_OK


def _run_bounds(args) -> int:
    overrides = {"seed": args.seed}
    if args.groups:
        overrides["group_counts"] = args.groups
    config = make_config(args.experiment, **overrides)
    rows = report_bounds(config, args.epsilon, args.alpha_grid, draws=args.draws)
    text = bounds_csv_text(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
