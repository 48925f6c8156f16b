"""Fully discrete QAV energy-preserving Runge-Kutta steps.

The stage equations are solved with the linear-implicit fixed-point
iteration: the dispersive term ``mu^2 D1^3`` is treated implicitly and, since
it has constant coefficients, is inverted exactly mode by mode in Fourier
space (one ``s x s`` complex system per wavenumber).  Everything nonlinear is
lagged by one iterate.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DegenerateProjectionError, SolverDivergenceError
from .model import KdvParams
from .spectral import Grid
from .tableau import ButcherTableau, symplectic_residual

log = logging.getLogger(__name__)

# below this slope size the relative stopping test switches to an absolute one
_TINY_SLOPE = 1e-30


@dataclass(frozen=True)
class SolverConfig:
    """Time step and stage-iteration controls.

    ``dt`` may be negative (backward stepping is used for symmetry checks);
    experiment configurations require it to be positive.
    """

    dt: float
    tol: float = 1e-14
    max_iter: int = 100
    eip: bool = False
    warm_start: bool = False
    eip_mode: str = "one_step"

    def __post_init__(self):
        if not np.isfinite(self.dt) or self.dt == 0.0:
            raise ConfigurationError(f"dt must be finite and nonzero, got {self.dt}")
        if not self.tol > 0.0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be a positive integer, got {self.max_iter}")
        if self.eip_mode not in ("one_step", "full_newton"):
            raise ConfigurationError(f"unknown EIP mode {self.eip_mode!r}")


@dataclass
class StageSet:
    """Stage values stacked as ``(s, N)`` arrays."""

    U: np.ndarray
    Q: np.ndarray
    k: np.ndarray
    l: np.ndarray


@dataclass
class StepDiagnostics:
    iterations: int
    final_residual: float
    converged: bool
    lambda_eip: float = 0.0
    projection_skipped: bool = False
    stages: Optional[np.ndarray] = field(default=None, repr=False)


@functools.lru_cache(maxsize=32)
def _stage_inverse(grid: Grid, tab: ButcherTableau, mu2: float, dt: float) -> np.ndarray:
    """Per-mode inverses of ``I + mu^2 dt (i theta)^3 A``, laid out as ``(s, s, N//2+1)``."""
    sym3 = grid.operator.symbol(3)
    M = np.eye(tab.s)[None, :, :] + (mu2 * dt) * sym3[:, None, None] * tab.a[None, :, :]
    return np.ascontiguousarray(np.linalg.inv(M).transpose(1, 2, 0))


def _solve_hat(rhs_hat: np.ndarray, inv: np.ndarray) -> np.ndarray:
    return (inv * rhs_hat[None, :, :]).sum(axis=1)


def solve_stage_system(rhs: np.ndarray, grid: Grid, tab: ButcherTableau, mu2: float, dt: float) -> np.ndarray:
    """Solve ``k_i + mu^2 dt sum_j a_ij D1^3 k_j = rhs_i`` for all stages at once."""
    op = grid.operator
    inv = _stage_inverse(grid, tab, mu2, dt)
    return op.inverse(_solve_hat(op.forward(np.atleast_2d(rhs)), inv))


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    """Max over stages of the relative sup-norm change; NaN if anything is non-finite."""
    delta = np.abs(new - old).max(axis=-1)
    scale = np.abs(new).max(axis=-1)
    worst = 0.0
    for d, sc in zip(delta.tolist(), scale.tolist()):
        r = d if sc < _TINY_SLOPE else d / sc
        if r != r or sc == np.inf:
            return np.nan
        worst = max(worst, r)
    return worst


def _check_tableau(tab: ButcherTableau) -> None:
    if symplectic_residual(tab) > 1e-12:
        raise ConfigurationError(
            f"tableau {tab.name or '?'} violates the symplectic condition "
            f"(residual {symplectic_residual(tab):.3e})"
        )


def fixed_point_solve(
    u_n: np.ndarray,
    grid: Grid,
    tab: ButcherTableau,
    params: KdvParams,
    cfg: SolverConfig,
    q_n: Optional[np.ndarray] = None,
    k0: Optional[np.ndarray] = None,
) -> tuple[StageSet, StepDiagnostics]:
    """Iterate the stage slopes of the QAV-RK scheme to a fixed point.

    With ``q_n=None`` the auxiliary variable is eliminated (``q^n = (u^n)^2``);
    passing ``q_n`` evolves the stage auxiliaries from an independent ``q``.
    """
    _check_tableau(tab)
    u_n = np.asarray(u_n, dtype=float)
    op = grid.operator
    A = tab.a
    dt = cfg.dt
    eta = params.eta
    base = u_n * u_n if q_n is None else np.asarray(q_n, dtype=float)
    sym1 = op.symbol(1)
    inv = _stage_inverse(grid, tab, params.mu2, dt)
    # Fourier coefficients of mu^2 D1^3 u^n
    disp_hat = params.mu2 * op.symbol(3) * op.forward(u_n)

    k = np.zeros((tab.s, grid.N)) if k0 is None else np.array(k0, dtype=float)
    residual = np.inf
    converged = False
    iterations = 0
    for m in range(cfg.max_iter):
        U = u_n + dt * (A @ k)
        Q = base + 2.0 * dt * (A @ (U * k))
        g = -eta / 6.0 * Q - eta / 3.0 * U * U
        k_new = op.inverse(_solve_hat(sym1 * op.forward(g) - disp_hat, inv))
        residual = _relative_change(k_new, k)
        if residual != residual:
            raise SolverDivergenceError(f"stage iteration diverged at iteration {m + 1}", iteration=m + 1)
        k = k_new
        iterations = m + 1
        if residual < cfg.tol:
            converged = True
            break

    U = u_n + dt * (A @ k)
    l = 2.0 * U * k
    Q = base + dt * (A @ l)
    diag = StepDiagnostics(iterations, residual, converged, stages=k)
    return StageSet(U=U, Q=Q, k=k, l=l), diag


def stage_rhs(U: np.ndarray, Q: np.ndarray, grid: Grid, params: KdvParams) -> np.ndarray:
    """Slope ``D1(-eta/6 Q - eta/3 U^2 - mu^2 D1^2 U)``; accepts stacked stages."""
    op = grid.operator
    U = np.asarray(U, dtype=float)
    Q = np.asarray(Q, dtype=float)
    inner = -params.eta / 6.0 * Q - params.eta / 3.0 * U * U - params.mu2 * op.d1(U, 2)
    return op.d1(inner, 1)


def stage_residual(u_n: np.ndarray, stages: StageSet, grid: Grid, tab: ButcherTableau,
                   params: KdvParams, dt: float, q_n: Optional[np.ndarray] = None) -> float:
    """Max-norm defect of the stage equations evaluated at ``stages.k``."""
    k = stages.k
    base = u_n * u_n if q_n is None else q_n
    U = u_n + dt * (tab.a @ k)
    Q = base + 2.0 * dt * (tab.a @ (U * k))
    return float(np.max(np.abs(k - stage_rhs(U, Q, grid, params))))


def _apply_eip(u, reference, grid, params, cfg, diag):
    from .projection import project_eip

    if reference is None:
        raise ConfigurationError("EIP projection requested without reference invariants")
    try:
        u, info = project_eip(u, reference, grid, params, mode=cfg.eip_mode, full_output=True)
        diag.lambda_eip = info["lambda"]
    except DegenerateProjectionError as exc:
        log.warning("EIP projection skipped: %s", exc)
        diag.projection_skipped = True
    return u


def qav_eprk_step(
    u_n: np.ndarray,
    grid: Grid,
    tab: ButcherTableau,
    params: KdvParams,
    cfg: SolverConfig,
    reference=None,
    k0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, StepDiagnostics]:
    """One step of the fully discrete QAV-EPRK scheme.

    A step that hits ``max_iter`` without meeting ``tol`` still returns the
    last iterate, flagged with ``converged=False``.  With ``cfg.eip`` the
    result is projected back onto the reference mass and energy.
    """
    u_n = np.asarray(u_n, dtype=float)
    stages, diag = fixed_point_solve(u_n, grid, tab, params, cfg, k0=k0)
    u = u_n + cfg.dt * (tab.b @ stages.k)
    if cfg.eip:
        u = _apply_eip(u, reference, grid, params, cfg, diag)
    return u, diag


def qav_rk_step_with_q(
    u_n: np.ndarray,
    q_n: np.ndarray,
    grid: Grid,
    tab: ButcherTableau,
    params: KdvParams,
    cfg: SolverConfig,
    k0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray, StepDiagnostics]:
    """One step of the QAV-RK scheme carrying the auxiliary variable ``q``.

    No projection is applied on this path: it would break the pointwise
    ``q - u^2`` invariant the scheme exists to demonstrate.
    """
    u_n = np.asarray(u_n, dtype=float)
    q_n = np.asarray(q_n, dtype=float)
    if q_n.shape != u_n.shape:
        raise ConfigurationError("u and q must live on the same grid")
    stages, diag = fixed_point_solve(u_n, grid, tab, params, cfg, q_n=q_n, k0=k0)
    u = u_n + cfg.dt * (tab.b @ stages.k)
    q = q_n + cfg.dt * (tab.b @ stages.l)
    return u, q, diag
