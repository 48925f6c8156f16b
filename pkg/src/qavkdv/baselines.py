"""Comparison schemes: the averaged vector field (AVF) method and classic Gauss RK.

Both reuse the linear-implicit fixed-point splitting of the QAV solver so
that timings compare formulations rather than nonlinear solvers.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import SolverDivergenceError
from .integrator import SolverConfig, StepDiagnostics, _relative_change, _solve_hat, _stage_inverse
from .model import KdvParams
from .spectral import Grid
from .tableau import ButcherTableau


def avf_step(
    u_n: np.ndarray, grid: Grid, params: KdvParams, cfg: SolverConfig
) -> tuple[np.ndarray, StepDiagnostics]:
    """One step of the AVF scheme for the Fourier-discretized KdV equation.

    Solves ``(w - u)/dt = D1(-eta/6 (u^2 + u w + w^2) - mu^2 D1^2 (u + w)/2)``
    for ``w``.  The iteration variable is the slope ``(w - u)/dt`` so the
    stopping rule matches the Runge-Kutta solvers.
    """
    u_n = np.asarray(u_n, dtype=float)
    op = grid.operator
    dt = cfg.dt
    half = 0.5 * dt * params.mu2
    sym3 = op.symbol(3)
    u_hat = op.forward(u_n)
    lin_inv = 1.0 / (1.0 + half * sym3)
    lin_rhs = u_hat - half * sym3 * u_hat

    k = np.zeros(grid.N)
    w = u_n.copy()
    residual = np.inf
    converged = False
    iterations = 0
    dsym1 = dt * op.symbol(1)
    for m in range(cfg.max_iter):
        g = -params.eta / 6.0 * (u_n * u_n + u_n * w + w * w)
        w = op.inverse(lin_inv * (lin_rhs + dsym1 * op.forward(g)))
        k_new = (w - u_n) / dt
        residual = _relative_change(k_new[None, :], k[None, :])
        if residual != residual:
            raise SolverDivergenceError(f"AVF iteration diverged at iteration {m + 1}", iteration=m + 1)
        k = k_new
        iterations = m + 1
        if residual < cfg.tol:
            converged = True
            break
    return w, StepDiagnostics(iterations, residual, converged)


def grk_step(
    u_n: np.ndarray,
    grid: Grid,
    tab: ButcherTableau,
    params: KdvParams,
    cfg: SolverConfig,
    k0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, StepDiagnostics]:
    """Classic implicit RK applied to ``u_t = D1(-eta/2 u^2 - mu^2 D1^2 u)``."""
    u_n = np.asarray(u_n, dtype=float)
    op = grid.operator
    A = tab.a
    dt = cfg.dt
    sym1 = op.symbol(1)
    inv = _stage_inverse(grid, tab, params.mu2, dt)
    disp_hat = params.mu2 * op.symbol(3) * op.forward(u_n)
    k = np.zeros((tab.s, grid.N)) if k0 is None else np.array(k0, dtype=float)
    residual = np.inf
    converged = False
    iterations = 0
    for m in range(cfg.max_iter):
        U = u_n + dt * (A @ k)
        k_new = op.inverse(_solve_hat(sym1 * op.forward(-0.5 * params.eta * U * U) - disp_hat, inv))
        residual = _relative_change(k_new, k)
        if residual != residual:
            raise SolverDivergenceError(f"GRK iteration diverged at iteration {m + 1}", iteration=m + 1)
        k = k_new
        iterations = m + 1
        if residual < cfg.tol:
            converged = True
            break
    return u_n + dt * (tab.b @ k), StepDiagnostics(iterations, residual, converged, stages=k)
