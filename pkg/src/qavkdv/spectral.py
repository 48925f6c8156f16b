"""Periodic uniform grids and Fourier pseudo-spectral differentiation.

Grid functions are plain 1-D ``numpy`` arrays of length ``grid.N``.  The
first-derivative operator ``D1`` acts on the real FFT coefficients with the
Nyquist wavenumber set to zero, so that its real representation is exactly
skew-symmetric and ``D1**2 == D1 @ D1``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, GridMismatchError


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[a, b)`` with ``N`` nodes."""

    a: float
    b: float
    N: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.b <= self.a:
            raise ConfigurationError(f"need b > a, got a={self.a}, b={self.b}")
        if int(self.N) != self.N or self.N < 4 or self.N % 2:
            raise ConfigurationError(f"N must be an even integer >= 4, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.N

    @functools.cached_property
    def nodes(self) -> np.ndarray:
        x = self.a + self.h * np.arange(self.N)
        x.flags.writeable = False
        return x

    @property
    def operator(self) -> "SpectralOperator":
        return _operator_for(self)


def make_grid(a: float, b: float, N: int) -> Grid:
    return Grid(float(a), float(b), N)


class SpectralOperator:
    """Wavenumber table and FFT-based application of ``D1**p``.

    ``wavenumbers`` holds the full length-``N`` table in FFT ordering (Nyquist
    slot zero); ``half_wavenumbers`` is the ``rfft`` half actually used.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        N = grid.N
        scale = 2.0 * np.pi / grid.length
        k = np.fft.fftfreq(N, d=1.0 / N)
        k[N // 2] = 0.0
        self.wavenumbers = scale * k
        half = scale * np.arange(N // 2 + 1, dtype=float)
        half[-1] = 0.0
        self.half_wavenumbers = half
        self._symbols = {p: (1j * half) ** p for p in (1, 2, 3)}
        for arr in (self.wavenumbers, self.half_wavenumbers):
            arr.flags.writeable = False

    def symbol(self, p: int) -> np.ndarray:
        """Fourier multiplier ``(i theta)**p`` on the rfft half-spectrum."""
        if p not in self._symbols:
            raise ValueError(f"derivative power must be 1, 2 or 3, got {p}")
        return self._symbols[p]

    def forward(self, u: np.ndarray) -> np.ndarray:
        return np.fft.rfft(u, axis=-1)

    def inverse(self, uhat: np.ndarray) -> np.ndarray:
        return np.fft.irfft(uhat, n=self.grid.N, axis=-1)

    def d1(self, u: np.ndarray, p: int = 1) -> np.ndarray:
        """Apply ``D1**p``; works row-wise on stacked ``(..., N)`` arrays."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.grid.N:
            raise GridMismatchError(f"expected length {self.grid.N}, got {u.shape[-1]}")
        return self.inverse(self.symbol(p) * self.forward(u))

    def dense_matrix(self) -> np.ndarray:
        """Dense ``D1`` built from the closed-form cotangent formula.

        Independent of the FFT path; only meant for small ``N`` cross-checks.
        """
        N = self.grid.N
        if N > 64:
            raise ValueError("dense D1 is only provided for N <= 64")
        j = np.arange(N)
        diff = j[:, None] - j[None, :]
        D = np.zeros((N, N))
        off = diff != 0
        D[off] = 0.5 * (-1.0) ** diff[off] / np.tan(np.pi * diff[off] / N)
        return D * (2.0 * np.pi / self.grid.length)


@functools.lru_cache(maxsize=64)
def _operator_for(grid: Grid) -> SpectralOperator:
    return SpectralOperator(grid)


def _check(u: np.ndarray, grid: Grid) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.N,):
        raise GridMismatchError(f"grid function of shape {u.shape} does not match N={grid.N}")
    return u


def apply_d1(u: np.ndarray, grid: Grid, p: int = 1) -> np.ndarray:
    """Return ``D1**p u`` for ``p`` in {1, 2, 3}."""
    return grid.operator.d1(_check(u, grid), p)


def inner_h(u: np.ndarray, v: np.ndarray, grid: Grid) -> float:
    """Discrete inner product ``h * sum(u * v)``."""
    u = _check(u, grid)
    v = _check(v, grid)
    return float(grid.h * np.dot(u, v))


def norm_h(u: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(inner_h(u, u, grid)))
