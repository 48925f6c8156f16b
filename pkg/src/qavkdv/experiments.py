"""Experiment configuration, simulation driver, CSV output and refinement studies."""
from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .baselines import avf_step, grk_step
from .errors import ConfigurationError, SolverDivergenceError
from .initial import (
    THREE_SOLITON_CENTERS,
    THREE_SOLITON_KAPPAS,
    BimodalSpectrum,
    init_bimodal,
    init_three_solitons,
    init_two_soliton,
    soliton_exact,
)
from .integrator import SolverConfig, qav_eprk_step, qav_rk_step_with_q
from .model import InvariantRecord, KdvParams, hamiltonian_h, mass_h, modified_energy_h, momentum_h
from .projection import ReferenceInvariants
from .spectral import Grid, make_grid, norm_h
from .tableau import gauss_tableau

log = logging.getLogger(__name__)

SCHEMES = ("qav_eprk_1", "qav_eprk_2", "qav_eprk_3", "qav_rk_with_q", "grk_2", "grk_3", "avf")

CSV_COLUMNS = (
    "step", "t", "mass", "momentum", "energy_H", "energy_E",
    "mass_err", "energy_err", "iterations", "converged", "lambda_eip",
)


# --------------------------------------------------------------------------
# initial conditions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Soliton:
    c: float = 1.0
    x0: float = 0.0
    kind = "soliton"

    def evaluate(self, grid: Grid, params: KdvParams, seed: int = 0) -> np.ndarray:
        return soliton_exact(grid.nodes, 0.0, self.c, self.x0, params)

    def exact(self, grid: Grid, t: float, params: KdvParams) -> np.ndarray:
        return soliton_exact(grid.nodes, t, self.c, self.x0, params)


@dataclass(frozen=True)
class ThreeSolitons:
    kappas: tuple = THREE_SOLITON_KAPPAS
    centers: tuple = THREE_SOLITON_CENTERS
    kind = "three_solitons"

    def __post_init__(self):
        if len(self.kappas) != len(self.centers):
            raise ConfigurationError("kappas and centers must have equal length")

    def evaluate(self, grid: Grid, params: KdvParams, seed: int = 0) -> np.ndarray:
        return init_three_solitons(grid, self.kappas, self.centers)


@dataclass(frozen=True)
class TwoSolitonRational:
    kind = "two_soliton"

    def evaluate(self, grid: Grid, params: KdvParams, seed: int = 0) -> np.ndarray:
        return init_two_soliton(grid)


@dataclass(frozen=True)
class Bimodal:
    spectrum: BimodalSpectrum = field(default_factory=lambda: BimodalSpectrum.case("II"))
    kind = "bimodal"

    def evaluate(self, grid: Grid, params: KdvParams, seed: int = 0) -> np.ndarray:
        return init_bimodal(grid, self.spectrum, seed)


InitialCondition = Union[Soliton, ThreeSolitons, TwoSolitonRational, Bimodal]


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    domain: tuple
    N: int
    T_final: float
    params: KdvParams
    solver: SolverConfig
    initial: InitialCondition
    seed: int = 0
    output_path: Optional[str] = None
    record_every: int = 1
    stages: int = 2  # Gauss stages for the q-carrying scheme

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; expected one of {', '.join(SCHEMES)}")
        if self.solver.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.solver.dt}")
        if not self.T_final >= 0 or not math.isfinite(self.T_final):
            raise ConfigurationError(f"T_final must be finite and non-negative, got {self.T_final}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigurationError(f"record_every must be a positive integer, got {self.record_every}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigurationError(f"seed must be an unsigned integer, got {self.seed}")
        if self.stages not in (1, 2, 3):
            raise ConfigurationError(f"stages must be 1, 2 or 3, got {self.stages}")
        self.grid  # validates domain and N
        self.n_steps

    @property
    def dt(self) -> float:
        return self.solver.dt

    @property
    def grid(self) -> Grid:
        a, b = self.domain
        return make_grid(a, b, self.N)

    @property
    def n_steps(self) -> int:
        ratio = self.T_final / self.dt
        n = round(ratio)
        if abs(ratio - n) > 1e-9 * max(1.0, n):
            raise ConfigurationError(f"T_final={self.T_final} is not an integer multiple of dt={self.dt}")
        return int(n)

    def replace(self, **changes) -> "ExperimentConfig":
        solver_keys = {"dt", "tol", "max_iter", "eip", "warm_start", "eip_mode"}
        solver_changes = {k: changes.pop(k) for k in list(changes) if k in solver_keys}
        if solver_changes:
            changes["solver"] = dataclasses.replace(self.solver, **solver_changes)
        return dataclasses.replace(self, **changes)


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ConfigurationError(f"expected on/off, got {text!r}")


def _parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in str(text).replace(",", " ").split())


_KNOWN_KEYS = {
    "experiment": {"scheme", "t_final", "dt", "seed", "output_path", "record_every", "stages"},
    "domain": {"a", "b", "n"},
    "params": {"eta", "mu"},
    "solver": {"tol", "max_iter", "eip", "warm_start", "eip_mode"},
    "initial": {"kind", "c", "x0", "kappas", "centers", "case", "q1", "q2", "k1", "k2", "kk1", "kk2", "dk"},
}


def config_from_mapping(sections: dict) -> ExperimentConfig:
    """Build a config from ``{section: {key: text}}`` (keys case-insensitive)."""
    sec = {s.lower(): {k.lower(): v for k, v in d.items()} for s, d in sections.items()}
    for name, entries in sec.items():
        if name not in _KNOWN_KEYS:
            raise ConfigurationError(f"unknown config section [{name}]")
        unknown = set(entries) - _KNOWN_KEYS[name]
        if unknown:
            raise ConfigurationError(f"unknown keys in [{name}]: {', '.join(sorted(unknown))}")
    ex = sec.get("experiment", {})
    dom = sec.get("domain", {})
    par = sec.get("params", {})
    sol = sec.get("solver", {})
    ini = sec.get("initial", {})
    try:
        kind = ini.get("kind", "soliton").strip().lower()
        if kind == "soliton":
            initial = Soliton(float(ini.get("c", 1.0)), float(ini.get("x0", 0.0)))
        elif kind == "three_solitons":
            initial = ThreeSolitons(
                _parse_floats(ini["kappas"]) if "kappas" in ini else THREE_SOLITON_KAPPAS,
                _parse_floats(ini["centers"]) if "centers" in ini else THREE_SOLITON_CENTERS,
            )
        elif kind == "two_soliton":
            initial = TwoSolitonRational()
        elif kind == "bimodal":
            spec = BimodalSpectrum.case(ini.get("case", "II"), Q1=float(ini.get("q1", 1.0)),
                                        dk=float(ini.get("dk", 0.01)))
            overrides = {name: float(ini[key]) for key, name in
                         (("q2", "Q2"), ("k1", "k1"), ("k2", "k2"), ("kk1", "K1"), ("kk2", "K2")) if key in ini}
            initial = Bimodal(dataclasses.replace(spec, **overrides))
        else:
            raise ConfigurationError(f"unknown initial condition kind {kind!r}")
        solver = SolverConfig(
            dt=float(ex.get("dt", 0.01)),
            tol=float(sol.get("tol", 1e-14)),
            max_iter=int(sol.get("max_iter", 100)),
            eip=_parse_bool(sol.get("eip", "off")),
            warm_start=_parse_bool(sol.get("warm_start", "off")),
            eip_mode=sol.get("eip_mode", "one_step").strip(),
        )
        return ExperimentConfig(
            scheme=ex.get("scheme", "qav_eprk_2").strip(),
            domain=(float(dom.get("a", -40.0)), float(dom.get("b", 40.0))),
            N=int(dom.get("n", 512)),
            T_final=float(ex.get("t_final", 1.0)),
            params=KdvParams(float(par.get("eta", 1.0)), float(par.get("mu", 1.0))),
            solver=solver,
            initial=initial,
            seed=int(ex.get("seed", 0)),
            output_path=ex.get("output_path") or None,
            record_every=int(ex.get("record_every", 1)),
            stages=int(ex.get("stages", 2)),
        )
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad configuration value: {exc}") from exc


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read an INI-style config file; ``overrides`` uses the same ``{section: {key: value}}`` shape."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    sections = {s: dict(parser.items(s)) for s in parser.sections()}
    for s, kv in (overrides or {}).items():
        sections.setdefault(s, {}).update({k: str(v) for k, v in kv.items()})
    return config_from_mapping(sections)


def dump_config(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser["experiment"] = {
        "scheme": cfg.scheme, "t_final": repr(cfg.T_final), "dt": repr(cfg.dt), "seed": str(cfg.seed),
        "record_every": str(cfg.record_every), "stages": str(cfg.stages),
    }
    if cfg.output_path:
        parser["experiment"]["output_path"] = cfg.output_path
    parser["domain"] = {"a": repr(cfg.domain[0]), "b": repr(cfg.domain[1]), "n": str(cfg.N)}
    parser["params"] = {"eta": repr(cfg.params.eta), "mu": repr(cfg.params.mu)}
    s = cfg.solver
    parser["solver"] = {"tol": repr(s.tol), "max_iter": str(s.max_iter), "eip": "on" if s.eip else "off",
                        "warm_start": "on" if s.warm_start else "off", "eip_mode": s.eip_mode}
    ini = cfg.initial
    if isinstance(ini, Soliton):
        parser["initial"] = {"kind": "soliton", "c": repr(ini.c), "x0": repr(ini.x0)}
    elif isinstance(ini, ThreeSolitons):
        parser["initial"] = {"kind": "three_solitons", "kappas": ", ".join(map(repr, ini.kappas)),
                             "centers": ", ".join(map(repr, ini.centers))}
    elif isinstance(ini, TwoSolitonRational):
        parser["initial"] = {"kind": "two_soliton"}
    else:
        sp = ini.spectrum
        parser["initial"] = {"kind": "bimodal", "q1": repr(sp.Q1), "q2": repr(sp.Q2), "k1": repr(sp.k1),
                             "k2": repr(sp.k2), "kk1": repr(sp.K1), "kk2": repr(sp.K2), "dk": repr(sp.dk)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------


@dataclass
class SimulationResult:
    records: list
    u: np.ndarray
    q: Optional[np.ndarray]
    grid: Grid
    wall_time: float
    max_iterations: int = 0


def _make_stepper(cfg: ExperimentConfig, ref: ReferenceInvariants) -> Callable:
    grid, params, solver = cfg.grid, cfg.params, cfg.solver
    scheme = cfg.scheme
    if scheme.startswith("qav_eprk_"):
        tab = gauss_tableau(int(scheme[-1]))
        return lambda u, q, k0: qav_eprk_step(u, grid, tab, params, solver, reference=ref, k0=k0) + (None,)
    if scheme.startswith("grk_"):
        tab = gauss_tableau(int(scheme[-1]))
        return lambda u, q, k0: grk_step(u, grid, tab, params, solver, k0=k0) + (None,)
    if scheme == "avf":
        return lambda u, q, k0: avf_step(u, grid, params, solver) + (None,)
    tab = gauss_tableau(cfg.stages)

    def step(u, q, k0):
        u, q, diag = qav_rk_step_with_q(u, q, grid, tab, params, solver, k0=k0)
        return u, diag, q

    return step


def _record(step, t, u, q, grid, params, diag=None) -> InvariantRecord:
    H = hamiltonian_h(u, grid, params)
    E = modified_energy_h(u, q if q is not None else u * u, grid, params)
    return InvariantRecord(
        t=t, mass=mass_h(u, grid), momentum=momentum_h(u, grid), energy_H=H, energy_E=E,
        iterations=diag.iterations if diag else 0,
        converged=diag.converged if diag else True,
        lambda_eip=diag.lambda_eip if diag else 0.0,
        step=step,
    )


def simulate(cfg: ExperimentConfig, record: bool = True, on_record: Optional[Callable] = None) -> SimulationResult:
    """Integrate ``cfg`` to ``T_final``.

    Records an :class:`InvariantRecord` at step 0 and every ``record_every``
    steps (and always at the final step).  Non-converged steps are flagged,
    not fatal; non-finite iterates raise :class:`SolverDivergenceError`
    carrying the step index.
    """
    grid, params = cfg.grid, cfg.params
    u = cfg.initial.evaluate(grid, params, cfg.seed)
    q = u * u if cfg.scheme == "qav_rk_with_q" else None
    ref = ReferenceInvariants.from_initial(u, grid, params)
    stepper = _make_stepper(cfg, ref)
    n_steps = cfg.n_steps
    records = [_record(0, 0.0, u, q, grid, params)] if record else []
    if on_record and record:
        on_record(records[-1])
    k_prev = None
    max_it = 0
    t0 = time.perf_counter()
    for n in range(1, n_steps + 1):
        try:
            u, diag, q = stepper(u, q, k_prev if cfg.solver.warm_start else None)
        except SolverDivergenceError as exc:
            exc.step = n
            raise SolverDivergenceError(f"step {n}: {exc}", iteration=exc.iteration, step=n) from exc
        k_prev = diag.stages
        max_it = max(max_it, diag.iterations)
        if not diag.converged:
            log.debug("step %d did not converge (residual %.3e)", n, diag.final_residual)
        if record and (n % cfg.record_every == 0 or n == n_steps):
            records.append(_record(n, n * cfg.dt, u, q, grid, params, diag))
            if on_record:
                on_record(records[-1])
    wall = time.perf_counter() - t0
    return SimulationResult(records, u, q, grid, wall, max_it)


def write_csv(records: Sequence[InvariantRecord], path) -> None:
    """Write the invariant series; floats with 17 significant digits."""
    if not records:
        raise ValueError("no records to write")
    mass0, H0 = records[0].mass, records[0].energy_H
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([
                r.step, f"{r.t:.17g}", f"{r.mass:.17g}", f"{r.momentum:.17g}", f"{r.energy_H:.17g}",
                f"{r.energy_E:.17g}", f"{r.mass - mass0:.17g}", f"{r.energy_H - H0:.17g}",
                r.iterations, int(bool(r.converged)), f"{r.lambda_eip:.17g}",
            ])


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_simulation(cfg: ExperimentConfig) -> list:
    """Run ``cfg``, write its CSV to ``cfg.output_path`` (if set) and return the records."""
    result = simulate(cfg)
    if cfg.output_path:
        write_csv(result.records, cfg.output_path)
    return result.records


def max_relative_drift(values: Sequence[float]) -> float:
    """``max_n |v_n - v_0| / (1 + |v_0|)``."""
    v = np.asarray(values, dtype=float)
    return float(np.max(np.abs(v - v[0])) / (1.0 + abs(v[0])))


# --------------------------------------------------------------------------
# refinement studies
# --------------------------------------------------------------------------


@dataclass
class RefinementRow:
    resolution: float
    l2_error: float
    linf_error: float
    observed_order: Optional[float] = None
    observed_order_linf: Optional[float] = None
    wall_time: float = 0.0


def fourier_resample(u: np.ndarray, N: int) -> np.ndarray:
    """Trigonometric interpolation of a periodic grid function onto ``N`` nodes of the same domain."""
    M = u.size
    uh = np.fft.rfft(u) / M
    out = np.zeros(N // 2 + 1, dtype=complex)
    m = min(M, N) // 2
    out[:m] = uh[:m]
    if M == N:
        out[m] = uh[m]
    return np.fft.irfft(out * N, n=N)


def refinement_study(
    base_cfg: ExperimentConfig,
    axis: str,
    levels: Sequence[float],
    reference: Optional[ExperimentConfig] = None,
) -> list:
    """Errors at ``T_final`` for a ladder of time steps (``axis="time"``) or grid sizes (``"space"``).

    Errors are taken against the exact soliton when the initial condition is
    a :class:`Soliton`, otherwise against ``reference``, which must be
    strictly finer than every level along the refined axis.  Observed orders
    are ``log(e_i/e_{i+1}) / log(r_i)`` with ``r_i`` the refinement ratio.
    """
    if axis not in ("time", "space"):
        raise ConfigurationError(f"axis must be 'time' or 'space', got {axis!r}")
    if not levels:
        raise ConfigurationError("no refinement levels given")
    ref_u = ref_grid = None
    if not isinstance(base_cfg.initial, Soliton) or reference is not None:
        if reference is None:
            raise ConfigurationError("no closed-form solution for this initial condition; supply a reference config")
        finer = (reference.dt < min(levels)) if axis == "time" else (reference.N > max(levels))
        if not finer:
            raise ConfigurationError("reference configuration must be strictly finer than all levels")
        if not math.isclose(reference.T_final, base_cfg.T_final):
            raise ConfigurationError("reference must end at the same T_final")
        ref_res = simulate(reference, record=False)
        ref_u, ref_grid = ref_res.u, ref_res.grid

    rows = []
    for level in levels:
        cfg = base_cfg.replace(dt=float(level)) if axis == "time" else base_cfg.replace(N=int(level))
        res = simulate(cfg, record=False)
        grid = res.grid
        if ref_u is None:
            target = cfg.initial.exact(grid, cfg.T_final, cfg.params)
        elif ref_grid.N == grid.N:
            target = ref_u
        else:
            target = fourier_resample(ref_u, grid.N)
        err = res.u - target
        rows.append(RefinementRow(float(level), norm_h(err, grid), float(np.max(np.abs(err))), wall_time=res.wall_time))

    for prev, row in zip(rows, rows[1:]):
        ratio = prev.resolution / row.resolution if axis == "time" else row.resolution / prev.resolution
        if ratio > 0 and ratio != 1:
            row.observed_order = _order(prev.l2_error, row.l2_error, ratio)
            row.observed_order_linf = _order(prev.linf_error, row.linf_error, ratio)
    return rows


def _order(e_coarse: float, e_fine: float, ratio: float) -> Optional[float]:
    if e_coarse <= 0 or e_fine <= 0:
        return None
    return math.log(e_coarse / e_fine) / math.log(ratio)


def write_refinement_table(rows: Sequence[RefinementRow], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("resolution", "L2_error", "Linf_error", "observed_order", "observed_order_linf"))
        for r in rows:
            w.writerow([
                f"{r.resolution:.17g}", f"{r.l2_error:.17g}", f"{r.linf_error:.17g}",
                "" if r.observed_order is None else f"{r.observed_order:.6f}",
                "" if r.observed_order_linf is None else f"{r.observed_order_linf:.6f}",
            ])


# --------------------------------------------------------------------------
# plot data
# --------------------------------------------------------------------------


def write_columns(path, *columns, header: str = "") -> None:
    """Whitespace-separated column file for gnuplot and friends."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack(columns), fmt="%.17g", header=header)


def write_gnuplot_script(path, datafiles: Sequence[tuple], logscale_y: bool = True) -> None:
    """``datafiles`` is a sequence of ``(filename, title, xlabel, ylabel)``."""
    lines = ["set terminal pngcairo size 900,600", "set grid"]
    for fname, title, xlabel, ylabel in datafiles:
        stem = Path(fname).stem
        lines += [
            f"set output '{stem}.png'",
            f"set title '{title}'",
            f"set xlabel '{xlabel}'",
            f"set ylabel '{ylabel}'",
            "set logscale y" if logscale_y else "unset logscale y",
            f"plot '{Path(fname).name}' using 1:(abs($2)) with lines title '{title}'",
        ]
    Path(path).write_text("\n".join(lines) + "\n")
