"""Gauss-Legendre collocation tableaus and the symplectic-condition residual."""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = ""

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        c = np.array(self.c, dtype=float)
        s = b.size
        if a.shape != (s, s) or c.shape != (s,):
            raise ValueError(f"inconsistent tableau shapes a{a.shape}, b{b.shape}, c{c.shape}")
        for arr in (a, b, c):
            arr.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def s(self) -> int:
        return self.b.size


def symplectic_residual(tab: ButcherTableau) -> float:
    """``max_ij |b_i a_ij + b_j a_ji - b_i b_j|``."""
    ba = tab.b[:, None] * tab.a
    return float(np.max(np.abs(ba + ba.T - np.outer(tab.b, tab.b))))


def _gauss_general(s: int) -> ButcherTableau:
    x, w = np.polynomial.legendre.leggauss(s)
    c = 0.5 * (x + 1.0)
    b = 0.5 * w
    # collocation: sum_j a_ij c_j^(k-1) = c_i^k / k, k = 1..s
    k = np.arange(1, s + 1)
    V = c[None, :] ** (k[:, None] - 1)
    R = c[:, None] ** k[None, :] / k[None, :]
    a = np.linalg.solve(V, R.T).T
    return ButcherTableau(a, b, c, name=f"gauss{s}")


@functools.lru_cache(maxsize=None)
def gauss_tableau(s: int) -> ButcherTableau:
    """Order-``2s`` Gauss collocation tableau.

    ``s <= 3`` use closed-form coefficients; larger ``s`` fall back to
    Legendre roots and a Vandermonde solve (round-off slightly above 1e-15).
    """
    if s == 1:
        return ButcherTableau([[0.5]], [1.0], [0.5], name="gauss1")
    if s == 2:
        r3 = np.sqrt(3.0)
        return ButcherTableau(
            [[0.25, 0.25 - r3 / 6.0], [0.25 + r3 / 6.0, 0.25]],
            [0.5, 0.5],
            [0.5 - r3 / 6.0, 0.5 + r3 / 6.0],
            name="gauss2",
        )
    if s == 3:
        r15 = np.sqrt(15.0)
        return ButcherTableau(
            [
                [5.0 / 36.0, 2.0 / 9.0 - r15 / 15.0, 5.0 / 36.0 - r15 / 30.0],
                [5.0 / 36.0 + r15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - r15 / 24.0],
                [5.0 / 36.0 + r15 / 30.0, 2.0 / 9.0 + r15 / 15.0, 5.0 / 36.0],
            ],
            [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0],
            [0.5 - r15 / 10.0, 0.5, 0.5 + r15 / 10.0],
            name="gauss3",
        )
    if isinstance(s, (int, np.integer)) and 3 < s <= 12:
        return _gauss_general(int(s))
    raise ValueError(f"unsupported number of Gauss stages: {s!r}")


def forward_euler() -> ButcherTableau:
    return ButcherTableau([[0.0]], [1.0], [0.0], name="euler")
