"""Command line interface: spectrum, rmse, bmr, and keygen experiments."""

import argparse
import sys
from dataclasses import replace

from .experiments import ConfigError, ExperimentSpec, load_spec, run_experiment


def _add_common(sub):
    sub.add_argument("--config", help="INI experiment config file")
    sub.add_argument("--seed", type=int, help="master seed (overrides config)")
    sub.add_argument("--out", default="results", help="output directory root")
    sub.add_argument("--trials", type=int, help="Monte Carlo trials (overrides config)")
    sub.add_argument("--parallel", type=int, default=1, help="worker processes")


DEFAULTS = {
    "spectrum": dict(kind="spectrum", snr_grid_db=(-15.0,),
                     sample_counts=(100, 1000, 2000), trials=20),
    "rmse": dict(kind="rmse"),
    "bmr": dict(kind="bmr", snr_grid_db=(-10.0, -15.0, -20.0, -25.0, -30.0),
                sample_counts=(1000,), trials=50),
    "keygen": dict(kind="keygen", estimator="xsbs", snr_grid_db=(-10.0,),
                   sample_counts=(1000,), trials=1),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aoakey",
        description="Angle-of-arrival secret key generation experiments")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "rmse", "bmr", "keygen"):
        _add_common(subs.add_parser(name, help=f"run the {name} experiment"))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            spec = load_spec(args.config, kind=args.command)
        else:
            spec = ExperimentSpec(**DEFAULTS[args.command])
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.trials is not None:
            overrides["trials"] = args.trials
        if overrides:
            spec = replace(spec, **overrides)
        target, rows, elapsed = run_experiment(spec, args.out, parallel=args.parallel)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"aoakey: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(rows)} result rows to {target} ({elapsed:.1f}s)")
    if spec.kind == "keygen":
        print((target / "report.txt").read_text().rstrip())
    return 0


if __name__ == "__main__":
    sys.exit(main())
