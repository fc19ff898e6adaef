"""Periodic position grid, wave functions and their momentum representation.

Conventions: plane waves are ``exp(i p q / kbar)``; a wave function is
normalised as ``sum |psi_j|^2 dq = 1`` and its momentum amplitudes as
``sum |phi_j|^2 dp = 1`` on the comb ``p_j = kbar * j / wells``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import BandEdgeError, GridError
from .params import GaussianPacket, fold

#: Fraction of the momentum band (at each end) watched for aliasing.
BAND_EDGE_FRACTION = 0.05
#: Largest probability tolerated in the watched band-edge region.
BAND_EDGE_CUTOFF = 1e-8


@dataclass(frozen=True)
class SpatialGrid:
    n: int
    wells: int

    def __post_init__(self):
        n, wells = self.n, self.wells
        if not isinstance(n, (int, np.integer)) or n < 64 or n & (n - 1):
            raise GridError(f"grid size must be a power of two >= 64, got {n}")
        if not isinstance(wells, (int, np.integer)) or wells < 1:
            raise GridError(f"number of wells must be >= 1, got {wells}")

    @property
    def length(self) -> float:
        return 2.0 * math.pi * self.wells

    @property
    def dq(self) -> float:
        return self.length / self.n

    @property
    def q(self) -> np.ndarray:
        """Positions ``(j - n/2) dq``, covering [-L/2, L/2)."""
        return (np.arange(self.n) - self.n // 2) * self.dq

    @property
    def index(self) -> np.ndarray:
        """Centred momentum indices -n/2 .. n/2-1."""
        return np.arange(-(self.n // 2), self.n // 2)

    def dp(self, kbar: float) -> float:
        return 2.0 * math.pi * kbar / self.length

    def momenta(self, kbar: float) -> np.ndarray:
        """Ascending momentum comb, matching :func:`momentum_representation`."""
        return self.index * self.dp(kbar)

    def fft_momenta(self, kbar: float) -> np.ndarray:
        """Momentum comb in FFT ordering."""
        return kbar * 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.dq)


def build_grid(n: int, wells: int) -> SpatialGrid:
    return SpatialGrid(int(n), int(wells))


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: SpatialGrid
    kbar: float
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=np.complex128)
        if amps.shape != (self.grid.n,):
            raise GridError(f"amplitudes have shape {amps.shape}, grid has {self.grid.n} points")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2) * self.grid.dq)

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.kbar, self.amps / math.sqrt(self.norm()))

    def replace_amps(self, amps) -> "WaveFunction":
        return WaveFunction(self.grid, self.kbar, amps)

    def reflected(self) -> "WaveFunction":
        """Parity image psi(-q)."""
        idx = (-np.arange(self.grid.n)) % self.grid.n
        return self.replace_amps(self.amps[idx])

    def density(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def momentum_density(self) -> np.ndarray:
        return np.abs(momentum_representation(self)) ** 2


def packet_amplitudes(packet: GaussianPacket, grid: SpatialGrid, kbar: float) -> np.ndarray:
    """Unnormalised Gaussian with a plane-wave factor, using the minimum image."""
    var_q = packet.var_q(kbar)
    d = fold(grid.q - packet.q0, grid.length)
    return np.exp(-d * d / (4.0 * var_q) + 1j * packet.p0 * d / kbar)


def init_packet(packet: GaussianPacket, grid: SpatialGrid, kbar: float) -> WaveFunction:
    sigma_q = math.sqrt(packet.var_q(kbar))
    if sigma_q < 4.0 * grid.dq:
        raise GridError(f"packet width {sigma_q:.4g} is below 4 grid spacings ({4 * grid.dq:.4g})")
    if sigma_q > grid.length / 8.0:
        raise GridError(f"packet width {sigma_q:.4g} exceeds L/8 = {grid.length / 8:.4g}")
    return WaveFunction(grid, kbar, packet_amplitudes(packet, grid, kbar)).normalized()


def _comb_sign(n: int) -> np.ndarray:
    return np.where(np.arange(-(n // 2), n // 2) % 2 == 0, 1.0, -1.0)


def momentum_representation(psi: WaveFunction) -> np.ndarray:
    """Momentum amplitudes on the ascending comb ``grid.momenta(kbar)``."""
    g = psi.grid
    scale = g.dq / math.sqrt(2.0 * math.pi * psi.kbar)
    return scale * _comb_sign(g.n) * np.fft.fftshift(np.fft.fft(psi.amps))


def from_momentum(phi: np.ndarray, grid: SpatialGrid, kbar: float) -> WaveFunction:
    """Inverse of :func:`momentum_representation`."""
    scale = grid.dq / math.sqrt(2.0 * math.pi * kbar)
    amps = np.fft.ifft(np.fft.ifftshift(np.asarray(phi) * _comb_sign(grid.n) / scale))
    return WaveFunction(grid, kbar, amps)


def moments(psi: WaveFunction) -> tuple[float, float, float, float]:
    """Return (mean_p, var_p, mean_q, var_q)."""
    g = psi.grid
    w_p = psi.momentum_density() * g.dp(psi.kbar)
    p = g.momenta(psi.kbar)
    mean_p = float(np.sum(w_p * p))
    var_p = float(np.sum(w_p * (p - mean_p) ** 2))
    w_q = psi.density() * g.dq
    q = g.q
    mean_q = float(np.sum(w_q * q))
    var_q = float(np.sum(w_q * (q - mean_q) ** 2))
    return mean_p, var_p, mean_q, var_q


def band_edge_mass(psi: WaveFunction, fraction: float = BAND_EDGE_FRACTION) -> float:
    g = psi.grid
    outer = np.abs(g.index) >= (1.0 - fraction) * (g.n // 2)
    return float(np.sum(psi.momentum_density()[outer]) * g.dp(psi.kbar))


def check_band_edge(psi: WaveFunction, cutoff: float = BAND_EDGE_CUTOFF) -> None:
    mass = band_edge_mass(psi)
    if mass > cutoff:
        raise BandEdgeError(
            f"probability {mass:.3e} in the outer {BAND_EDGE_FRACTION:.0%} of the momentum band "
            f"exceeds {cutoff:.0e}; increase the grid size"
        )
