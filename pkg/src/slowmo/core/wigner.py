"""Wigner functions on rectangular phase-space grids."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import WaveFunction
from .params import fold


@dataclass(frozen=True, eq=False)
class WignerGridState:
    """Real W sampled on ``q`` (axis 0) x ``p`` (axis 1).

    ``q`` is treated as periodic with period ``q_period``; ``p`` is uniform and
    W is assumed to vanish at both ends of the momentum range.  ``ring`` marks
    the Wigner function of a state that is itself periodic in q: it lives on
    half the comb spacing and carries an interference image at q + L/2.
    """

    q: np.ndarray
    p: np.ndarray
    W: np.ndarray
    q_period: float
    ring: bool = False

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        W = np.asarray(self.W)
        if np.iscomplexobj(W):
            raise ValueError("Wigner function must be real")
        if W.shape != (q.size, p.size):
            raise ValueError(f"W has shape {W.shape}, expected {(q.size, p.size)}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "W", W.astype(float))

    @property
    def dq(self) -> float:
        return float(self.q[1] - self.q[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def position_marginal(self) -> np.ndarray:
        return self.W.sum(axis=1) * self.dp

    def momentum_marginal(self) -> np.ndarray:
        return self.W.sum(axis=0) * self.dq

    def total(self) -> float:
        return float(self.W.sum() * self.dq * self.dp)

    def purity(self, kbar: float) -> float:
        """Equals 1 for a pure state: (2 pi kbar) * integral of W^2, or pi kbar on a ring,
        where the interference image doubles the integral."""
        factor = math.pi if self.ring else 2.0 * math.pi
        return float(factor * kbar * np.sum(self.W**2) * self.dq * self.dp)


def gaussian_wigner(q, p, q0: float, p0: float, xi: float, kbar: float, q_period=None):
    """Closed-form Wigner function of a squeezed minimum-uncertainty packet."""
    q = np.asarray(q, dtype=float)[:, None]
    p = np.asarray(p, dtype=float)[None, :]
    dq = q - q0 if q_period is None else fold(q - q0, q_period)
    return np.exp(-xi * dq**2 / kbar - (p - p0) ** 2 / (kbar * xi)) / (math.pi * kbar)


def gaussian_state(q, p, q0, p0, xi, kbar, q_period) -> WignerGridState:
    return WignerGridState(q, p, gaussian_wigner(q, p, q0, p0, xi, kbar, q_period), q_period)


def wigner_of_wavefunction(psi: WaveFunction) -> WignerGridState:
    """Discrete Wigner transform on the wave function's periodic grid.

    Lags are restricted to the grid (y = 2 m dq), so the momentum axis has
    half the comb spacing and spans the inner half of the band.  Even rows sit
    on the comb and hold twice its momentum density; odd rows integrate to
    zero over q.  A packet at q0 shows up again at q0 + L/2 with sign (-1)^k
    on row k: the cross term with its periodic image.
    """
    g = psi.grid
    n = g.n
    amps = psi.amps
    rows = np.arange(n)[:, None]
    lags = np.arange(n)[None, :]
    corr = np.conj(amps[(rows + lags) % n]) * amps[(rows - lags) % n]
    # sum_m corr[., m] exp(2 pi i k m / n) = n * ifft
    W = (n * np.fft.ifft(corr, axis=1)).real * (g.dq / (math.pi * psi.kbar))
    W = np.fft.fftshift(W, axes=1)
    p = np.arange(-(n // 2), n // 2) * (0.5 * g.dp(psi.kbar))
    return WignerGridState(g.q, p, W, g.length, ring=True)
