"""Model parameters for the amplitude-modulated standing wave.

All quantities are in scaled, dimensionless units.  The potential is

    V(q, t) = -kappa * (1 - 2 * epsilon * cos(t - phase)) * cos(q)

with ``phase = 0`` for cosine modulation and ``phase = pi/2`` for sine
modulation (``sin t = cos(t - pi/2)``).  Stroboscopic snapshots are taken at
``t = phase + 2 pi n`` so both variants share the same period-one fixed points.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np


class Modulation(str, enum.Enum):
    COS = "cos"
    SIN = "sin"
    NONE = "none"

    @property
    def phase(self) -> float:
        return math.pi / 2 if self is Modulation.SIN else 0.0


class RecoilModel(str, enum.Enum):
    DIPOLE = "dipole"
    UNIFORM = "uniform"
    OFF = "off"


@dataclass(frozen=True)
class SpontaneousSettings:
    """Poisson-timed recoil events.

    ``rate`` is the number of events per unit scaled time.  Each event kicks
    the momentum by ``kbar * (u_spont + u_stim)``; ``u_spont`` is the projected
    emission direction drawn from ``recoil_model`` and ``u_stim`` is +-1 when
    ``include_stimulated`` is set.
    """

    rate: float = 0.0
    recoil_model: RecoilModel = RecoilModel.OFF
    include_stimulated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "recoil_model", RecoilModel(self.recoil_model))
        if not (self.rate >= 0.0 and math.isfinite(self.rate)):
            raise ValueError(f"spontaneous rate must be finite and >= 0, got {self.rate}")
        if (self.recoil_model is RecoilModel.OFF) != (self.rate == 0.0):
            raise ValueError("recoil_model 'off' is used exactly when rate == 0")

    @property
    def active(self) -> bool:
        return self.rate > 0.0

    @classmethod
    def off(cls) -> "SpontaneousSettings":
        return cls()


@dataclass(frozen=True)
class Params:
    kappa: float = 1.2
    epsilon: float = 0.2
    kbar: float = 0.25
    modulation: Modulation = Modulation.COS
    spont: SpontaneousSettings = field(default_factory=SpontaneousSettings)

    def __post_init__(self):
        object.__setattr__(self, "modulation", Modulation(self.modulation))
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in [0, 0.5), got {self.epsilon}")
        if not self.kbar > 0:
            raise ValueError(f"kbar must be > 0, got {self.kbar}")

    @property
    def eps(self) -> float:
        """Modulation strength actually applied (0 when unmodulated)."""
        return 0.0 if self.modulation is Modulation.NONE else self.epsilon

    @property
    def phase(self) -> float:
        return self.modulation.phase

    def amplitude(self, t):
        """Instantaneous well depth kappa*(1 - 2 eps cos(t - phase))."""
        return self.kappa * (1.0 - 2.0 * self.eps * np.cos(np.asarray(t) - self.phase))

    def snapshot_time(self, cycle: int) -> float:
        return self.phase + 2.0 * math.pi * cycle

    def with_(self, **changes) -> "Params":
        return replace(self, **changes)


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise ValueError(f"non-finite phase point ({self.q}, {self.p})")

    def folded(self, period: float = 2 * math.pi) -> "PhasePoint":
        return PhasePoint(fold(self.q, period), self.p)

    def __iter__(self):
        yield self.q
        yield self.p

    def reflected(self) -> "PhasePoint":
        return PhasePoint(-self.q, -self.p)


def fold(q, period: float = 2 * math.pi):
    """Map q into [-period/2, period/2)."""
    half = 0.5 * period
    return (q + half) % period - half


@dataclass(frozen=True)
class GaussianPacket:
    """Minimum-uncertainty packet; Var[q] = kbar/(2 xi), Var[p] = kbar xi / 2."""

    q0: float = 0.0
    p0: float = 0.0
    xi: float = 1.0

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError(f"squeeze parameter must be > 0, got {self.xi}")

    def var_q(self, kbar: float) -> float:
        return kbar / (2.0 * self.xi)

    def var_p(self, kbar: float) -> float:
        return kbar * self.xi / 2.0

    @classmethod
    def with_momentum_width(cls, sigma_p: float, kbar: float, q0=0.0, p0=0.0):
        return cls(q0, p0, 2.0 * sigma_p**2 / kbar)
