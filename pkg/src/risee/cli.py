"""Command-line experiment runner.

    risee run --experiment pmax-sweep --profile desk --out results/ \
              --trials 20 --seed 1 --methods method1-gee,method2-gee

Exit codes: 0 success, 2 configuration error, 3 solver failure rate above
the configured threshold.  Every JSON config field can be overridden with
a RISEE_<FIELD> environment variable.
"""

import argparse
import sys

from .errors import ConfigError, RiseeError
from .harness import METHODS, ExperimentSpec, emit_results, run_experiment
from .scenario import load_config
from .solvers import SolverOptions

_DEFAULT_GRIDS = {
    "pmax-sweep": [-40.0, -30.0, -20.0, -10.0, 0.0, 10.0, 20.0],
    "pcn-sweep": [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
    "timing": [-40.0, -20.0, 0.0, 20.0],
    "single": [],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risee",
                                     description="Active-RIS energy-efficiency experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment and emit CSV + JSON sidecar")
    run.add_argument("--config", help="JSON scenario config file")
    run.add_argument("--experiment", required=True,
                     choices=["pmax-sweep", "pcn-sweep", "timing", "single"])
    run.add_argument("--profile", choices=["desk", "paper"], default="desk")
    run.add_argument("--out", default="results")
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--methods", default=None,
                     help=f"comma-separated subset of {','.join(METHODS)}")
    run.add_argument("--grid", default=None,
                     help="comma-separated grid values (dBW for pmax/timing, dBm for pcn)")
    run.add_argument("--n-grid", default=None,
                     help="comma-separated RIS sizes for the pcn sweep")
    run.add_argument("--failure-threshold", type=float, default=0.25)
    return parser


def _parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}") from exc


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        cfg = load_config(args.config, profile=args.profile, overrides=overrides)
        trials = args.trials if args.trials is not None else (
            20 if args.profile == "desk" else 50)
        methods = (args.methods.split(",") if args.methods
                   else ["method1-gee", "method2-gee"])
        grid = (_parse_floats(args.grid) if args.grid
                else list(_DEFAULT_GRIDS[args.experiment]))
        spec = ExperimentSpec(kind=args.experiment, base=cfg, grid=grid,
                              methods=methods, trials=trials,
                              solver=SolverOptions(seed=cfg.seed),
                              failure_threshold=args.failure_threshold)
        if args.n_grid:
            spec.n_grid = [int(v) for v in args.n_grid.split(",") if v.strip()]
        result = run_experiment(spec)
        paths = emit_results(result, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RiseeError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    for row in result.rows:
        print("  ".join(str(v) for v in row))
    for key, value in result.extras.items():
        print(f"# {key}: {value}")
    print(f"wrote {paths['csv']} and {paths['meta']}")
    failure_rate = result.extras.get("failure_rate", 0.0)
    if failure_rate > spec.failure_threshold:
        print(f"failure rate {failure_rate:.2f} above threshold "
              f"{spec.failure_threshold:.2f}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
