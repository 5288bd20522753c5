"""Command-line entry point: ``interfero run|sweep|diagnostics``."""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, SolverFailure
from .experiments import emit_outputs, load_config, monte_carlo_sweep, run_scenario
from .experiments.config import DIAGNOSTICS, ScenarioConfig

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="interfero",
                                     description="Interferometric sparse-recovery experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=_seed, help="base seed (overrides the config)")
    common.add_argument("--plots", action="store_true", help="also write SVG plots")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run one seeded instance of a scenario"),
                       ("sweep", "Monte Carlo sweep over M and SNR")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("config", help="scenario JSON file")
        p.add_argument("--workers", type=int, help="worker processes for Monte Carlo runs")
    p = sub.add_parser("diagnostics", parents=[common], help="sensing-matrix diagnostics")
    p.add_argument("--what", choices=DIAGNOSTICS, action="append", required=True)
    p.add_argument("--N", type=int, default=64, help="modes per block")
    p.add_argument("--s", type=int, default=4, help="sparsity of test vectors")
    p.add_argument("--M", type=int, action="append", help="rows (repeat for several)")
    p.add_argument("--trials", type=int, default=1000)
    return parser


def _config_for(args) -> ScenarioConfig:
    if args.command == "diagnostics":
        return ScenarioConfig("diagnostics", N=args.N, s=args.s, M=tuple(args.M or (64,)),
                              trials=args.trials, what=tuple(args.what),
                              seed=args.seed or 0, out=args.out or "results")
    config = load_config(args.config)
    return config.with_overrides(seed=args.seed, out=args.out, workers=args.workers,
                                 plots=True if args.plots else None)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_for(args)
        if args.command == "sweep":
            table = monte_carlo_sweep(config)
        else:
            table = run_scenario(config)
        paths = emit_outputs(table, config.out, plots=config.plots,
                             summary=args.command == "sweep")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
