from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class StroboscopicSeries:
    """Per-snapshot momentum statistics."""

    cycles: np.ndarray
    times: np.ndarray
    mean_p: np.ndarray
    var_p: np.ndarray
    label: str = ""

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=float) for a in (self.cycles, self.times, self.mean_p, self.var_p)]
        if len({a.shape for a in arrays}) != 1:
            raise ValueError("series columns must have equal length")
        object.__setattr__(self, "cycles", arrays[0].astype(np.int64))
        object.__setattr__(self, "times", arrays[1])
        object.__setattr__(self, "mean_p", arrays[2])
        # roundoff can push a vanishing variance slightly negative
        object.__setattr__(self, "var_p", np.maximum(arrays[3], 0.0))

    def __len__(self) -> int:
        return self.cycles.size

    def rows(self):
        return zip(self.cycles, self.times, self.mean_p, self.var_p)
