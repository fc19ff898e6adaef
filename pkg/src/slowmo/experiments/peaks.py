"""Peak detection on momentum histograms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.histogram import MomentumHistogram
from ..errors import NoPeaksError

MIN_SEPARATION = 2


@dataclass(frozen=True, eq=False)
class PeakSet:
    positions: np.ndarray
    masses: np.ndarray
    smoothing: int

    def __len__(self) -> int:
        return self.positions.size


def smooth(values: np.ndarray, width: int) -> np.ndarray:
    """Centered moving average; the window shrinks at the ends."""
    if width < 1:
        raise ValueError("smoothing width must be >= 1")
    kernel = np.ones(width)
    num = np.convolve(values, kernel, mode="same")
    den = np.convolve(np.ones_like(values), kernel, mode="same")
    return num / den


def _local_maxima(s: np.ndarray, floor: float) -> list[int]:
    idx = [i for i in range(1, s.size - 1) if s[i] > s[i - 1] and s[i] >= s[i + 1] and s[i] >= floor]
    # drop the lower of two maxima closer than MIN_SEPARATION bins
    kept: list[int] = []
    for i in sorted(idx, key=lambda j: -s[j]):
        if all(abs(i - j) >= MIN_SEPARATION for j in kept):
            kept.append(i)
    return sorted(kept)


def find_peaks(hist: MomentumHistogram, smoothing: int = 5, threshold: float = 0.1) -> PeakSet:
    """Maxima of the smoothed histogram above ``threshold * max``.

    Each peak extends from its maximum down to half its height (never past a
    valley shared with a neighbour); its position is the mass centroid of
    those bins in the raw histogram.
    """
    s = smooth(hist.masses, smoothing)
    top = s.max()
    if not top > 0:
        raise NoPeaksError("histogram is empty")
    maxima = _local_maxima(s, threshold * top)
    if not maxima:
        raise NoPeaksError(f"no local maximum above {threshold} x max")
    bounds = [0] + [i + int(np.argmin(s[i:j + 1])) for i, j in zip(maxima, maxima[1:])] + [s.size - 1]
    centers = hist.centers
    positions, masses = [], []
    for k, i in enumerate(maxima):
        half = 0.5 * s[i]
        lo = i
        while lo > bounds[k] and s[lo - 1] >= half:
            lo -= 1
        hi = i
        while hi < bounds[k + 1] and s[hi + 1] >= half:
            hi += 1
        w = hist.masses[lo:hi + 1]
        mass = float(w.sum())
        positions.append(float(np.sum(w * centers[lo:hi + 1]) / mass) if mass > 0 else float(centers[i]))
        masses.append(mass)
    return PeakSet(np.array(positions), np.array(masses), smoothing)


def side_peak(hist: MomentumHistogram, smoothing: int = 5, threshold: float = 0.1, min_p: float = 0.3) -> float:
    """Position of the dominant peak at ``p > min_p`` of the p-symmetrized histogram."""
    sym = hist.symmetrized()
    peaks = find_peaks(sym, smoothing, threshold)
    right = peaks.positions > min_p
    if not right.any():
        raise NoPeaksError(f"no side peak above p = {min_p}")
    s = smooth(sym.masses, smoothing)
    heights = np.interp(peaks.positions[right], sym.centers, s)
    return float(peaks.positions[right][np.argmax(heights)])
