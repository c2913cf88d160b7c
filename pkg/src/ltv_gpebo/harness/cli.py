"""Command-line entry point.

    ltv-gpebo simulate <config> [--out DIR] [--h H] [--T T] [--seed-check] [--plots]
    ltv-gpebo verify <config>
    ltv-gpebo pe <config> --window DELTA [--start T0] [--alpha2-min A]

Exit status: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import tempfile
from pathlib import Path

import numpy as np

from ..estimator import EstimationError, gram_from_arrays, is_pe
from ..exprs import ExprEvalError
from ..numerics import ContractError, IntegrationError, NumericalError
from ..observer import ObserverDivergence, run_observer
from ..oracles import oracle_report
from ..plant import SimulationError
from .config import ConfigError, load_scenario
from .csvio import write_csv
from .plots import PlotError, render_plots

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (IntegrationError, NumericalError, SimulationError, ObserverDivergence,
                    EstimationError, ExprEvalError, ArithmeticError)


class NumericalFailure(Exception):
    pass


def _scenario(args):
    cfg = load_scenario(args.config)
    overrides = {}
    if getattr(args, "h", None) is not None:
        overrides["h"] = args.h
    if getattr(args, "T", None) is not None:
        overrides["T"] = args.T
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg, cfg.to_run()


def _simulate(args) -> int:
    cfg, run = _scenario(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = run_observer(run)
    csv_path = out / "trace.csv"
    if "csv" in cfg.outputs:
        write_csv(trace, csv_path)
        print(f"wrote {csv_path} ({len(trace)} rows)")
    if args.seed_check:
        with tempfile.TemporaryDirectory() as tmp:
            first = write_csv(trace, Path(tmp) / "first.csv").read_bytes()
            again = write_csv(run_observer(run), Path(tmp) / "again.csv").read_bytes()
        if again != first:
            raise NumericalFailure("determinism check failed: a second run produced a different CSV")
        print("determinism check: identical CSV bytes on rerun")
    if args.plots or "plots" in cfg.outputs:
        paths = render_plots(trace, run.truth, out)
        print(f"wrote {len(paths)} plots to {out}")
    err = trace.theta_hat[-1] - run.truth.theta
    xerr = trace.x_hat[-1] - trace.x[-1]
    print(f"t = {trace.t[-1]:g}: max |theta_hat - theta| = {np.abs(err).max():.3e}, "
          f"max |x_hat - x| = {np.abs(xerr).max():.3e}")
    return EXIT_OK


def _verify(args) -> int:
    cfg, run = _scenario(args)
    trace = run_observer(run)
    rep = oracle_report(run.sys, trace, run.truth, run.h)
    print(f"max regression residual |z - Psi Theta|     = {rep.max_residual:.3e}")
    print(f"max reconstruction-oracle error |x_hat - x| = {rep.max_reconstruction:.3e}")
    print(f"max |Phi|_F                                 = {rep.max_phi_norm:.6g}")
    if rep.phi_closed_form is not None:
        print(f"max |Phi - expm(A0 t)| (constant A0)        = {rep.phi_closed_form:.3e}")
    print(f"tolerance                                   = {rep.tolerance:.3e}")
    if not rep.passed:
        print("FAIL: oracle identity outside tolerance", file=sys.stderr)
        return EXIT_NUMERICAL
    print("PASS")
    return EXIT_OK


def _pe(args) -> int:
    cfg, run = _scenario(args)
    if not args.window > 0:
        raise ContractError(f"--window must be positive, got {args.window!r}")
    if args.start < 0:
        raise ContractError(f"--start must be >= 0, got {args.start!r}")
    end = args.start + args.window
    # only [0, t0 + delta] is needed
    run = dataclasses.replace(run, T=round(end / run.h) * run.h)
    trace = run_observer(run)
    i0 = int(round(args.start / run.h))
    i1 = int(round(end / run.h))
    gram = gram_from_arrays(trace.t[i0:i1 + 1], trace.psi[i0:i1 + 1])
    cert = is_pe(gram, args.alpha2_min)
    print(f"window [{trace.t[i0]:g}, {trace.t[i1]:g}]: alpha2 (min eig) = {cert.alpha2:.6e}, "
          f"alpha1 (max eig) = {cert.alpha1:.6e}")
    print("persistently exciting" if cert.is_pe else f"not exciting at alpha2_min = {args.alpha2_min:g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltv-gpebo", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the observer and write trace.csv (and plots)")
    sim.add_argument("config")
    sim.add_argument("--out", default="out", help="output directory (default: ./out)")
    sim.add_argument("--h", type=float, help="override the integration step")
    sim.add_argument("--T", type=float, help="override the horizon")
    sim.add_argument("--seed-check", action="store_true", help="rerun and require byte-identical CSV output")
    sim.add_argument("--plots", action="store_true", help="write one SVG per figure")
    sim.set_defaults(func=_simulate)

    ver = sub.add_parser("verify", help="check the regression and reconstruction identities")
    ver.add_argument("config")
    ver.add_argument("--h", type=float)
    ver.add_argument("--T", type=float)
    ver.set_defaults(func=_verify)

    pe = sub.add_parser("pe", help="excitation certificate of the regressor over one window")
    pe.add_argument("config")
    pe.add_argument("--window", type=float, required=True, help="window length delta, seconds")
    pe.add_argument("--start", type=float, default=0.0, help="window start t0 (default 0)")
    pe.add_argument("--alpha2-min", type=float, default=1e-6)
    pe.set_defaults(func=_pe)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ContractError, PlotError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailure, *NUMERICAL_ERRORS) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run_cli())
