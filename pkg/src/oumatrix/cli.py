"""Command-line entry point: ``oumatrix run`` and ``oumatrix list``."""

from __future__ import annotations

import argparse
import math
import sys

from .config import EXPERIMENTS, parse_config
from .core import ConfigurationError, ContractError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="oumatrix", description="Matrix Ornstein-Uhlenbeck experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--experiment", help="experiment id (see 'oumatrix list')")
    r.add_argument("--seed", type=int)
    r.add_argument("--config", help="flat 'key = value' file; flags override it")
    r.add_argument("--n", type=int)
    r.add_argument("--a", type=float)
    r.add_argument("--samples", type=int)
    r.add_argument("--tau", type=float)
    r.add_argument("--dt", type=float)
    r.add_argument("--bins", type=int)
    r.add_argument("--regulator", type=float, help="|w| for generalized-resolvent probes")
    r.add_argument("--out", help="output directory (default: results/<experiment>)")
    r.add_argument("--workers", type=int)
    r.add_argument("--no-plot", action="store_true", help="skip PNG figures")
    r.add_argument("--sign-flip", action="store_true", help=argparse.SUPPRESS)
    sub.add_parser("list", help="list experiments with their defaults")
    return p


def _list() -> int:
    print(f"{'experiment':<20}{'n':>5}{'a':>6}{'samples':>9}{'tau':>7}  description")
    for name, d in EXPERIMENTS.items():
        tau = "inf" if math.isinf(d.tau) else f"{d.tau:g}"
        print(f"{name:<20}{d.n:>5}{d.a:>6g}{d.samples:>9}{tau:>7}  {d.description}")
    return EXIT_PASS


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return _list()
    overrides = {k: getattr(args, k) for k in ("experiment", "seed", "n", "a", "samples", "tau", "dt", "bins", "regulator", "out", "workers")}
    if args.no_plot:
        overrides["plot"] = False
    if args.sign_flip:
        overrides["sign_flip"] = True
    try:
        cfg = parse_config(args.config, **overrides)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    from .experiments import run

    try:
        report = run(cfg)
    except (ConfigurationError, ContractError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure inside a run is a runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    sys.stdout.write(report.text())
    print(f"output written to {cfg.out}")
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
