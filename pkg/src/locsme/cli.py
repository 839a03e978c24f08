"""Command line entry point.

    locsme run --config cfg.json [--seed N] [--out curve.csv] [--sweep snapshots|snr]
               [--trials N] [--jobs N]
    locsme list-algorithms

Exit codes: 0 success, 2 configuration error, 3 every trial failed numerically.
"""

import argparse
import logging
import sys

import numpy as np

from .evaluation import ALGORITHMS, ConfigError, RunConfig, emit_csv, monte_carlo

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser():
    parser = argparse.ArgumentParser(prog="locsme", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a Monte Carlo SINR experiment")
    run.add_argument("--config", required=True, help="JSON run configuration")
    run.add_argument("--seed", type=int, help="override master_seed")
    run.add_argument("--out", help="CSV output path (default: stdout)")
    run.add_argument("--sweep", choices=("snapshots", "snr"), help="override the sweep axis")
    run.add_argument("--trials", type=int, help="override n_trials")
    run.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    run.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("list-algorithms", help="print the available algorithm names")
    return parser


def _load_config(args):
    try:
        with open(args.config) as fh:
            config = RunConfig.from_json(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {args.config}: {exc}") from exc
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.sweep is not None:
        changes["sweep"] = args.sweep
    if args.trials is not None:
        changes["n_trials"] = args.trials
    return config.replace(**changes) if changes else config


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list-algorithms":
        print("\n".join(ALGORITHMS))
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    curve = monte_carlo(config, n_jobs=args.jobs)
    text = emit_csv(curve, args.out)
    if args.out is None:
        sys.stdout.write(text)
    if curve.algorithms and all(np.all(curve.counts[k] == 0) for k in curve.algorithms):
        print("every trial failed numerically", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK
