"""Command-line driver for the KdV experiments.

Exit codes: 0 success, 2 configuration error, 3 solver divergence.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, SolverDivergenceError
from .experiments import (
    SCHEMES,
    Bimodal,
    ExperimentConfig,
    Soliton,
    ThreeSolitons,
    TwoSolitonRational,
    load_config,
    max_relative_drift,
    refinement_study,
    simulate,
    write_columns,
    write_csv,
    write_gnuplot_script,
    write_refinement_table,
)
from .initial import BimodalSpectrum
from .integrator import SolverConfig
from .model import KdvParams

log = logging.getLogger("qavkdv")

EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def _onoff(text):
    t = text.lower()
    if t not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return t == "on"


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run overrides")
    g.add_argument("--scheme", choices=SCHEMES)
    g.add_argument("--dt", type=float)
    g.add_argument("--grid-n", type=int, dest="grid_n")
    g.add_argument("--t-final", type=float, dest="t_final")
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", type=int, dest="max_iter")
    g.add_argument("--eip", type=_onoff, metavar="{on,off}")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output CSV path (or output directory for 'accuracy')")
    g.add_argument("--record-every", type=int, dest="record_every")
    g.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script next to the data files")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    for attr, key in (("scheme", "scheme"), ("dt", "dt"), ("grid_n", "N"), ("t_final", "T_final"),
                      ("tol", "tol"), ("max_iter", "max_iter"), ("eip", "eip"), ("seed", "seed"),
                      ("out", "output_path"), ("record_every", "record_every")):
        value = getattr(args, attr, None)
        if value is not None:
            changes[key] = value
    return cfg.replace(**changes) if changes else cfg


def _preset(name: str, args) -> ExperimentConfig:
    if name == "solitons3":
        cfg = ExperimentConfig("qav_eprk_2", (-100.0, 100.0), 512, 40.0, KdvParams(1.0, 1.0),
                               SolverConfig(dt=0.1), ThreeSolitons(), output_path="solitons3.csv")
    elif name == "twosoliton":
        cfg = ExperimentConfig("qav_eprk_2", (-20.0, 20.0), 256, 200.0, KdvParams(6.0, 1.0),
                               SolverConfig(dt=0.005, tol=1e-7, eip=True), TwoSolitonRational(),
                               output_path="twosoliton.csv", record_every=20)
    elif name == "bimodal":
        spec = BimodalSpectrum.case(args.case, Q1=args.q1)
        cfg = ExperimentConfig("qav_eprk_2", (0.0, 200.0 * math.pi), 4096, 20.0, KdvParams(1.0, math.sqrt(2.0 / 9.0)),
                               SolverConfig(dt=0.01, eip=True), Bimodal(spec), seed=0,
                               output_path=f"bimodal_{args.case}.csv", record_every=10)
    else:
        raise ValueError(name)
    return _apply_overrides(cfg, args)


def _emit_run(cfg: ExperimentConfig, args) -> int:
    log.info("running %s: N=%d dt=%g T=%g eip=%s tol=%g", cfg.scheme, cfg.N, cfg.dt, cfg.T_final,
             cfg.solver.eip, cfg.solver.tol)
    result = simulate(cfg)
    recs = result.records
    out = Path(cfg.output_path or "run.csv")
    write_csv(recs, out)
    t = np.array([r.t for r in recs])
    H = np.array([r.energy_H for r in recs])
    mass = np.array([r.mass for r in recs])
    mom = np.array([r.momentum for r in recs])
    stem = out.with_suffix("")
    files = [
        (f"{stem}_energy.dat", H - H[0], "energy error"),
        (f"{stem}_mass.dat", mass - mass[0], "mass error"),
        (f"{stem}_momentum.dat", mom - mom[0], "momentum error"),
    ]
    for fname, col, title in files:
        write_columns(fname, t, col, header=f"t {title}")
    write_columns(f"{stem}_profile.dat", result.grid.nodes, result.u, header=f"x u(x, T={cfg.T_final:g})")
    if args.gnuplot:
        write_gnuplot_script(f"{stem}.gp", [(f, title, "t", title) for f, _, title in files])
    unconverged = sum(1 for r in recs[1:] if not r.converged)
    print(f"{cfg.scheme}: {cfg.n_steps} steps in {result.wall_time:.2f} s, max iterations {result.max_iterations}")
    print(f"  max relative energy error {max_relative_drift(H):.3e}")
    print(f"  max relative mass error   {max_relative_drift(mass):.3e}")
    print(f"  recorded steps not meeting tol: {unconverged}")
    print(f"  wrote {out}")
    return 0


def _cmd_accuracy(args) -> int:
    outdir = Path(args.out or "accuracy")
    base = ExperimentConfig("qav_eprk_2", (-40.0, 40.0), 512, 1.0, KdvParams(1.0, 1.0), SolverConfig(dt=0.1), Soliton())
    overrides = argparse.Namespace(**{**vars(args), "out": None, "scheme": None})
    base = _apply_overrides(base, overrides)
    schemes = [args.scheme] if args.scheme else ["avf", "qav_eprk_2", "qav_eprk_3"]
    plots = []
    if args.axis in ("time", "both"):
        levels = args.levels or [0.1, 0.05, 0.025, 0.0125]
        for scheme in schemes:
            rows = refinement_study(base.replace(scheme=scheme), "time", levels)
            write_refinement_table(rows, outdir / f"time_{scheme}.csv")
            fname = outdir / f"time_{scheme}.dat"
            write_columns(fname, [r.resolution for r in rows], [r.l2_error for r in rows],
                          [r.linf_error for r in rows], header="dt L2 Linf")
            plots.append((str(fname), f"{scheme} time refinement", "dt", "error"))
            orders = ", ".join("-" if r.observed_order is None else f"{r.observed_order:.2f}" for r in rows)
            print(f"time  {scheme:12s} L2 errors " + " ".join(f"{r.l2_error:.3e}" for r in rows) + f"  orders {orders}")
    if args.axis in ("space", "both"):
        sdt = args.dt if args.dt is not None else 1e-3
        sT = args.t_final if args.t_final is not None else 0.1
        sbase = base.replace(scheme=args.scheme or "qav_eprk_3", dt=sdt, T_final=sT)
        levels = [int(v) for v in (args.space_levels or [100, 150, 200, 250, 300])]
        rows = refinement_study(sbase, "space", levels)
        write_refinement_table(rows, outdir / "space.csv")
        fname = outdir / "space.dat"
        write_columns(fname, [r.resolution for r in rows], [r.l2_error for r in rows],
                      [r.linf_error for r in rows], header="N L2 Linf")
        plots.append((str(fname), "space refinement", "N", "error"))
        print("space " + " ".join(f"N={int(r.resolution)}:{r.l2_error:.3e}" for r in rows))
    if args.gnuplot and plots:
        write_gnuplot_script(outdir / "accuracy.gp", plots)
    print(f"wrote tables to {outdir}/")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="qavkdv", description="QAV energy-preserving KdV solver experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    acc = sub.add_parser("accuracy", parents=[common], help="time/space refinement on the single soliton")
    acc.add_argument("--axis", choices=("time", "space", "both"), default="both")
    acc.add_argument("--levels", type=float, nargs="+", help="time-step ladder")
    acc.add_argument("--space-levels", type=int, nargs="+", dest="space_levels", help="grid-size ladder")

    sub.add_parser("solitons3", parents=[common], help="three-soliton interaction, invariant history")
    sub.add_parser("twosoliton", parents=[common], help="convection-dominated two-soliton run")
    bim = sub.add_parser("bimodal", parents=[common], help="random bimodal wave")
    bim.add_argument("--case", default="II", choices=("I", "II", "III", "IV", "V", "VI"))
    bim.add_argument("--q1", type=float, default=1.0, help="spectral scale Q1 (only Q2/Q1 is tabulated)")

    run = sub.add_parser("run", parents=[common], help="run an experiment from a config file")
    run.add_argument("config")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "accuracy":
            return _cmd_accuracy(args)
        if args.command == "run":
            cfg = _apply_overrides(load_config(args.config), args)
        else:
            cfg = _preset(args.command, args)
        return _emit_run(cfg, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverDivergenceError as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
