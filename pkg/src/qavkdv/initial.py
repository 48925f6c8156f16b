"""Exact soliton solution and the initial data of the numerical experiments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ParameterError
from .model import KdvParams
from .spectral import Grid

THREE_SOLITON_KAPPAS = (0.3, 0.25, 0.2)
THREE_SOLITON_CENTERS = (-60.0, -44.0, -26.0)


def _sech2(z):
    # 1/cosh^2 without overflow for large |z|
    e = np.exp(-2.0 * np.abs(z))
    return 4.0 * e / (1.0 + e) ** 2


def soliton_kappa_omega(c: float, params: KdvParams) -> tuple[float, float]:
    if not params.eta * c > 0.0 or params.mu == 0.0:
        raise ParameterError(f"soliton needs eta*c > 0 and mu != 0 (eta={params.eta}, c={c}, mu={params.mu})")
    kappa = np.sqrt(params.eta * c) / (2.0 * abs(params.mu))
    return kappa, c * params.eta * kappa


def soliton_exact(x, t: float, c: float, x0: float, params: KdvParams):
    """``3c sech^2(kappa x - omega t - x0)`` with ``kappa = sqrt(eta c)/(2 mu)``, ``omega = c eta kappa``."""
    kappa, omega = soliton_kappa_omega(c, params)
    return 3.0 * c * _sech2(kappa * np.asarray(x, dtype=float) - omega * t - x0)


def init_soliton(grid: Grid, c: float = 1.0, x0: float = 0.0, params: KdvParams = KdvParams(), t: float = 0.0):
    return soliton_exact(grid.nodes, t, c, x0, params)


def init_three_solitons(grid: Grid, kappas=THREE_SOLITON_KAPPAS, centers=THREE_SOLITON_CENTERS) -> np.ndarray:
    x = grid.nodes
    u = np.zeros(grid.N)
    for kappa, xi in zip(kappas, centers):
        u += 12.0 * kappa**2 * _sech2(kappa * (x - xi))
    return u


def two_soliton_profile(x) -> np.ndarray:
    """``12(3 + 4cosh 2x + cosh 4x) / (3cosh x + cosh 3x)^2``, evaluated with scaled exponentials.

    Numerator and denominator are multiplied through by ``exp(-4|x|)`` so
    nothing overflows and the far tail decays like ``24 exp(-2|x|)``.
    """
    y = np.abs(np.asarray(x, dtype=float))
    e2 = np.exp(-2.0 * y)
    e4 = e2 * e2
    e6 = e4 * e2
    num = 3.0 * e4 + 2.0 * (e2 + e6) + 0.5 * (1.0 + e4 * e4)
    den = 1.5 * (e2 + e4) + 0.5 * (1.0 + e6)
    return 12.0 * e2 * num / den**2


def init_two_soliton(grid: Grid) -> np.ndarray:
    return two_soliton_profile(grid.nodes)


@dataclass(frozen=True)
class BimodalSpectrum:
    """Two-peak Gaussian power spectrum ``S(k)`` for the random bimodal wave."""

    Q1: float = 1.0
    Q2: float = 0.5
    k1: float = 1.0
    k2: float = 0.5
    K1: float = 0.1
    K2: float = 0.05
    dk: float = 0.01

    def __post_init__(self):
        vals = (self.Q1, self.Q2, self.k1, self.k2, self.K1, self.K2, self.dk)
        if not all(np.isfinite(v) for v in vals):
            raise ConfigurationError("bimodal spectrum parameters must be finite")
        if self.K1 <= 0 or self.K2 <= 0 or self.dk <= 0:
            raise ConfigurationError("bimodal spectrum needs K1, K2, dk > 0")

    def S(self, k):
        k = np.asarray(k, dtype=float)
        return self.Q1 * np.exp(-((k - self.k1) ** 2) / (2 * self.K1**2)) + self.Q2 * np.exp(
            -((k - self.k2) ** 2) / (2 * self.K2**2)
        )

    @classmethod
    def case(cls, name: str, Q1: float = 1.0, dk: float = 0.01) -> "BimodalSpectrum":
        """Preset cases I-VI; the table fixes only ``Q2/Q1``, so ``Q1`` is a free scale."""
        table = {
            "I": (0.0, 1.0, 0.1, 0.5, 0.05),
            "II": (0.5, 1.0, 0.1, 0.5, 0.05),
            "III": (0.5, 1.0, 0.1, 0.5, 0.1),
            "IV": (1.0, 1.0, 0.1, 0.5, 0.05),
            "V": (0.5, 1.0, 0.1, 1.5, 0.05),
            "VI": (1.0, 1.0, 0.1, 1.5, 0.05),
        }
        key = str(name).upper()
        if key not in table:
            raise ConfigurationError(f"unknown bimodal case {name!r}; expected one of {sorted(table)}")
        ratio, k1, K1, k2, K2 = table[key]
        return cls(Q1=Q1, Q2=ratio * Q1, k1=k1, k2=k2, K1=K1, K2=K2, dk=dk)


def bimodal_phases(n: int, seed: int) -> np.ndarray:
    """Phases ``psi_j ~ U(0, 2 pi)`` from a Philox counter-based generator."""
    rng = np.random.Generator(np.random.Philox(int(seed)))
    return rng.uniform(0.0, 2.0 * np.pi, size=n)


def init_bimodal(grid: Grid, spec: BimodalSpectrum, seed: int) -> np.ndarray:
    """Random-phase cosine sum ``sum_j sqrt(2 S(k_j) dk) cos(k_j x + psi_j)``, j = 1..N/2-1.

    Evaluated with one inverse real FFT, which requires ``dk`` to equal the
    grid's fundamental wavenumber ``2 pi / (b - a)``.
    """
    base = 2.0 * np.pi / grid.length
    if abs(spec.dk - base) > 1e-12 * base:
        raise ConfigurationError(
            f"dk={spec.dk} does not match the grid wavenumber spacing {base:.15g}; use a domain of length 2*pi/dk"
        )
    N = grid.N
    j = np.arange(1, N // 2)
    kj = j * spec.dk
    amp = np.sqrt(2.0 * spec.S(kj) * spec.dk)
    psi = bimodal_phases(j.size, seed)
    coef = np.zeros(N // 2 + 1, dtype=complex)
    coef[1 : N // 2] = 0.5 * N * amp * np.exp(1j * (kj * grid.a + psi))
    return np.fft.irfft(coef, n=N)
