from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import HistogramRangeError
from .grid import WaveFunction

#: Probability allowed outside the histogram edges before it is an error.
OUTSIDE_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class MomentumHistogram:
    edges: np.ndarray
    masses: np.ndarray
    label: str = "quantum"
    outside: float = 0.0

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise HistogramRangeError("histogram edges must be strictly increasing")
        if masses.shape != (edges.size - 1,):
            raise HistogramRangeError("one mass per bin is required")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "masses", masses)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    def mean(self) -> float:
        return float(np.sum(self.masses * self.centers) / np.sum(self.masses))

    def symmetrized(self) -> "MomentumHistogram":
        """Average with the mirror image p -> -p (edges must be symmetric)."""
        if not np.allclose(self.edges, -self.edges[::-1], atol=1e-12):
            raise HistogramRangeError("symmetrization needs edges symmetric about p = 0")
        return MomentumHistogram(self.edges, 0.5 * (self.masses + self.masses[::-1]), self.label, self.outside)


def uniform_edges(lo: float, hi: float, bins: int) -> np.ndarray:
    return np.linspace(lo, hi, int(bins) + 1)


def comb_to_bins(p: np.ndarray, weights: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Spread comb masses over bins.

    Each comb point carries a constant density over its cell
    ``[p_j - dp/2, p_j + dp/2]``; the bin mass is the overlap integral.
    Mass outside the edges is dropped (the caller checks it).
    """
    dp = float(p[1] - p[0])
    # cumulative mass as a piecewise-linear function of p, evaluated at the edges
    cell_edges = np.concatenate(([p[0] - 0.5 * dp], p + 0.5 * dp))
    cumulative = np.concatenate(([0.0], np.cumsum(weights)))
    at_edges = np.interp(edges, cell_edges, cumulative)
    return np.diff(at_edges)


def quantum_histogram(psi: WaveFunction, edges, label: str = "quantum", max_outside: float = OUTSIDE_TOLERANCE) -> MomentumHistogram:
    g = psi.grid
    weights = psi.momentum_density() * g.dp(psi.kbar)
    return density_histogram(g.momenta(psi.kbar), weights, edges, label, max_outside)


def density_histogram(p, weights, edges, label: str = "quantum", max_outside: float = OUTSIDE_TOLERANCE) -> MomentumHistogram:
    """Histogram of comb masses ``weights`` at momenta ``p``, normalized over the edges.

    The fraction of mass outside the edges is kept in ``outside`` and may not
    exceed ``max_outside``.
    """
    edges = np.asarray(edges, dtype=float)
    masses = comb_to_bins(np.asarray(p), np.asarray(weights), edges)
    total = float(np.sum(weights))
    outside = max(0.0, total - float(np.sum(masses))) / total
    if outside > max_outside:
        raise HistogramRangeError(
            f"probability {outside:.3e} lies outside [{edges[0]}, {edges[-1]}]"
        )
    return MomentumHistogram(edges, masses / np.sum(masses), label, outside)


def particle_counts(p: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Integer counts per bin; values outside the edges are not counted."""
    edges = np.asarray(edges, dtype=float)
    idx = np.searchsorted(edges, p, side="right") - 1
    inside = (idx >= 0) & (idx < edges.size - 1)
    # the last edge belongs to the last bin
    last = p == edges[-1]
    idx = np.where(last, edges.size - 2, idx)
    inside |= last
    return np.bincount(idx[inside], minlength=edges.size - 1).astype(np.int64)


def classical_histogram(p, edges, label: str = "classical", max_outside: float = OUTSIDE_TOLERANCE) -> MomentumHistogram:
    p = np.asarray(p, dtype=float)
    edges = np.asarray(edges, dtype=float)
    counts = particle_counts(p, edges)
    return counts_histogram(counts, p.size, edges, label, max_outside)


def counts_histogram(counts, total: int, edges, label: str = "classical", max_outside: float = OUTSIDE_TOLERANCE) -> MomentumHistogram:
    counts = np.asarray(counts)
    inside = int(np.sum(counts))
    if total == 0:
        raise HistogramRangeError("empty ensemble")
    outside = (total - inside) / total
    if outside > max_outside:
        raise HistogramRangeError(
            f"{total - inside} of {total} particles lie outside [{edges[0]}, {edges[-1]}]"
        )
    return MomentumHistogram(edges, counts / inside, label, outside)


def momentum_histogram(source, edges, label: str | None = None) -> MomentumHistogram:
    """Histogram of a wave function or of an array of particle momenta."""
    if isinstance(source, WaveFunction):
        return quantum_histogram(source, edges, label or "quantum")
    return classical_histogram(getattr(source, "p", source), edges, label or "classical")
