"""KdV parameters, discrete invariants and the discrete variational derivative."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .spectral import Grid, apply_d1, inner_h, norm_h


@dataclass(frozen=True)
class KdvParams:
    """Coefficients of ``u_t + eta*u*u_x + mu**2 * u_xxx = 0``."""

    eta: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.eta) and np.isfinite(self.mu)):
            raise ConfigurationError(f"non-finite KdV parameters eta={self.eta}, mu={self.mu}")

    @property
    def mu2(self) -> float:
        return self.mu * self.mu


@dataclass
class InvariantRecord:
    t: float
    mass: float
    momentum: float
    energy_H: float
    energy_E: float
    iterations: int = 0
    converged: bool = True
    lambda_eip: float = 0.0
    step: int = 0


def hamiltonian_h(u: np.ndarray, grid: Grid, params: KdvParams) -> float:
    """Original discrete energy ``-eta/6 (u^3, 1)_h + mu^2/2 ||D1 u||_h^2``."""
    ux = apply_d1(u, grid, 1)
    cubic = grid.h * float(np.sum(u * u * u))
    return -params.eta / 6.0 * cubic + 0.5 * params.mu2 * norm_h(ux, grid) ** 2


def modified_energy_h(u: np.ndarray, q: np.ndarray, grid: Grid, params: KdvParams) -> float:
    """Quadratic energy of the auxiliary-variable system; equals H when ``q = u**2``."""
    if np.shape(q) != np.shape(u):
        inner_h(u, q, grid)  # raises GridMismatchError
    ux = apply_d1(u, grid, 1)
    # same summation order as hamiltonian_h, so q = u*u reproduces it
    cubic = grid.h * float(np.sum(u * np.asarray(q, dtype=float)))
    return -params.eta / 6.0 * cubic + 0.5 * params.mu2 * norm_h(ux, grid) ** 2


def mass_h(u: np.ndarray, grid: Grid) -> float:
    return inner_h(u, np.ones(grid.N), grid)


def momentum_h(u: np.ndarray, grid: Grid) -> float:
    return inner_h(u, u, grid)


def grad_h(u: np.ndarray, grid: Grid, params: KdvParams) -> np.ndarray:
    """Variational derivative ``-eta/2 u^2 - mu^2 D1^2 u``."""
    return -0.5 * params.eta * u * u - params.mu2 * apply_d1(u, grid, 2)
