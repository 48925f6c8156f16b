"""Mass-exact, energy-correcting projection applied after a step (EIP)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateProjectionError
from .model import KdvParams, grad_h, hamiltonian_h, mass_h
from .spectral import Grid, inner_h, norm_h

_NEWTON_MAX = 50


@dataclass(frozen=True)
class ReferenceInvariants:
    mass0: float
    energy0: float
    domain_length: float

    @classmethod
    def from_initial(cls, u0: np.ndarray, grid: Grid, params: KdvParams) -> "ReferenceInvariants":
        return cls(mass_h(u0, grid), hamiltonian_h(u0, grid, params), grid.length)


def projection_directions(u_tilde, ref: ReferenceInvariants, grid: Grid, params: KdvParams):
    """Return ``(phi, psi)``: the mass-corrected state and the zero-mean gradient direction."""
    u_tilde = np.asarray(u_tilde, dtype=float)
    phi = u_tilde + (ref.mass0 - mass_h(u_tilde, grid)) / ref.domain_length
    g = grad_h(u_tilde, grid, params)
    psi = g - mass_h(g, grid) / ref.domain_length
    return phi, psi


def _newton_denominator(v, psi, grid, params):
    denom = inner_h(grad_h(v, grid, params), psi, grid)
    if abs(denom) < 1e-14 * (1.0 + norm_h(psi, grid) ** 2):
        raise DegenerateProjectionError(f"energy gradient orthogonal to projection direction (denominator {denom:.3e})")
    return denom


def project_eip(
    u_tilde: np.ndarray,
    ref: ReferenceInvariants,
    grid: Grid,
    params: KdvParams,
    mode: str = "one_step",
    full_output: bool = False,
):
    """Project ``u_tilde`` onto the reference mass and (approximately) energy.

    The mass constraint is met exactly by a constant shift. The energy
    constraint ``H[phi + lam*psi] = energy0`` is solved for ``lam`` with one
    Newton step from ``lam = 0`` (``mode="one_step"``) or iterated to
    convergence (``mode="full_newton"``).

    Returns the projected state, or ``(state, info)`` with ``info`` holding
    ``lambda`` and ``newton_iterations`` when ``full_output`` is set.

    Raises
    ------
    DegenerateProjectionError
        If ``(grad H[phi], psi)_h`` vanishes to working precision.
    """
    phi, psi = projection_directions(u_tilde, ref, grid, params)
    target = ref.energy0
    if mode == "one_step":
        denom = _newton_denominator(phi, psi, grid, params)
        lam = -(hamiltonian_h(phi, grid, params) - target) / denom
        iters = 1
    elif mode == "full_newton":
        lam = 0.0
        iters = 0
        tol = 1e-13 * (1.0 + abs(target))
        for iters in range(1, _NEWTON_MAX + 1):
            v = phi + lam * psi
            err = hamiltonian_h(v, grid, params) - target
            if abs(err) <= tol:
                iters -= 1
                break
            lam -= err / _newton_denominator(v, psi, grid, params)
    else:
        raise ValueError(f"unknown projection mode {mode!r}")
    u = phi + lam * psi
    if full_output:
        return u, {"lambda": float(lam), "newton_iterations": iters}
    return u
