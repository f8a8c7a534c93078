"""Command-line front-end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 every grid state absorbs in one step.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import analysis
from .config import ConfigError, load_config
from .core import PSDError
from .estimators import LinearizationError
from .markov import NumericalError
from .reduction import InsufficientDataError
from .systems import DomainError, IntegrationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ABSORBED = 4

NUMERICAL_ERRORS = (
    NumericalError,
    LinearizationError,
    IntegrationError,
    DomainError,
    PSDError,
    InsufficientDataError,
    np.linalg.LinAlgError,
    FloatingPointError,
)


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _threads(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("threads must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metastable",
        description="Stochastic stability analysis of return maps via absorbing Markov chains.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON configuration file")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=_seed, help="master seed (overrides seed)")
    common.add_argument("--threads", type=_threads, help="worker threads (overrides threads)")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="build the chain and report its metrics")
    sub.add_parser("sweep-noise", parents=[common], help="system MFPT across noise scales")
    sub.add_parser(
        "compare-estimators", parents=[common], help="per-state moments and eigenvalues per estimator"
    )
    sub.add_parser("reduce", parents=[common], help="choose the indicator coordinate")
    sub.add_parser("simulate", parents=[common], help="dump one noisy trajectory")
    return parser


def _fmt_eigs(values) -> str:
    return ", ".join(f"{v.real:.6f}" + (f"{v.imag:+.6f}j" if v.imag else "") for v in values)


def _run(args) -> int:
    cfg = load_config(args.config).with_overrides(args.seed, args.threads, args.out)

    if args.command == "analyze":
        res = analysis.analyze(cfg)
        rep = res.report
        print(f"eigenvalues: {_fmt_eigs(rep.spectrum.values)}")
        flag = "" if rep.mfpt.reliable else " (unreliable)"
        print(f"system MFPT: {rep.mfpt.value:.6g}{flag}")
        for w in rep.warnings:
            print(f"warning: {w}", file=sys.stderr)
        print(f"wrote {cfg.output_dir}")
        return EXIT_ABSORBED if res.totally_absorbed else EXIT_OK

    if args.command == "sweep-noise":
        if not cfg.sweep:
            raise ConfigError(["sweep: sweep-noise needs sweep.sigmas"])
        rows = analysis.sweep_noise(cfg)
        for r in rows:
            print(f"sigma={r['sigma']:g} lambda2={r['lambda2']:.6f} M={r['mfpt']:.6g} {r['status']}")
        return EXIT_OK

    if args.command == "compare-estimators":
        if cfg.estimator.n_samples < 1000:
            raise ConfigError(["estimator: compare-estimators needs n_samples >= 1000"])
        out = analysis.compare_estimators(cfg)
        print(f"{'method':<12}{'evals':>10}  lambda1..lambda4")
        for method, evals, *lams, _ in out["table"]:
            print(f"{method:<12}{evals:>10}  " + "  ".join(f"{x:.4f}" for x in lams))
        return EXIT_OK

    if args.command == "reduce":
        res = analysis.reduce(cfg)
        tie = " (tie)" if res["pca_tie"] else ""
        print(f"PCA indicator: {res['pca_index']}{tie}")
        print(f"Jacobian indicator: {res['jacobian_index']}")
        return EXIT_OK

    traj = analysis.simulate(cfg)
    print(f"simulated {int(traj[-1, 0])} steps; absorbed={bool(traj[-1, 1])}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"configuration error in {args.config}:", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
