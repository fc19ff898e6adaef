"""Quantum corrections to the classical flow.

For the cosine potential the Wigner equation contains only finite momentum
shifts, and for squeezed Gaussian packets its quantum term divides by
``dW/dp`` into an effective force: the classical one multiplied by

    exp(-kbar / (4 xi)) * sinh(x) / x,   x = (p - p_ref) / xi.

This module provides that factor, the truncated series and shift forms of
the Wigner right-hand side, and the modified (effective) dynamics with its
self-consistent period-one resonance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .classical import (
    DEFAULT_SUBSTEPS,
    TWO_PI,
    ClassicalEnsemble,
    FixedPoint,
    evolve_ensemble,
    find_period1_fixed_point,
    stroboscopic_map,
)
from .core.params import Params, PhasePoint, fold
from .core.wigner import WignerGridState
from .errors import ConvergenceError

RESONANCE_TOL = 1e-8
RESONANCE_MAX_ITER = 100
DAMPING = 0.5
SPECTRAL_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class ReferenceOrbit:
    """Momentum of the reference trajectory over one period.

    Samples are uniform in time, starting at ``t0``; the table is periodic.
    """

    t0: float
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.p, dtype=float)
        q = np.ascontiguousarray(self.q, dtype=float)
        if p.ndim != 1 or p.size == 0 or q.shape != p.shape:
            raise ValueError("reference tables must be equal-length 1-d arrays")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def momentum_at(self, t):
        return kernels._ref_at_array(self.p, self.t0, t)

    def mean(self) -> float:
        return float(self.p.mean())

    def reflected(self) -> "ReferenceOrbit":
        return ReferenceOrbit(self.t0, -self.p, -self.q)

    def blend(self, other: "ReferenceOrbit", weight: float) -> "ReferenceOrbit":
        if other.p.size != self.p.size or other.t0 != self.t0:
            raise ValueError("reference tables are not on the same time grid")
        mix = lambda a, b: (1.0 - weight) * a + weight * b  # noqa: E731
        return ReferenceOrbit(self.t0, mix(self.p, other.p), mix(self.q, other.q))


@dataclass(frozen=True)
class EffectiveContext:
    """Packet data the effective force depends on.

    Without a ``reference`` orbit the reference momentum is the constant
    ``p_mean`` for the whole period; with one it follows the orbit in time.
    """

    p_mean: float
    xi: float
    kbar: float
    reference: ReferenceOrbit | None = None

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError(f"xi must be > 0, got {self.xi}")
        if not self.kbar > 0:
            raise ValueError(f"kbar must be > 0, got {self.kbar}")
        if not math.isfinite(self.p_mean):
            raise ValueError("p_mean must be finite")

    @property
    def compression(self) -> float:
        return math.exp(-self.kbar / (4.0 * self.xi))

    def reference_momentum(self, t=None):
        if t is None or self.reference is None:
            return self.p_mean
        return self.reference.momentum_at(t)

    def reflected(self) -> "EffectiveContext":
        ref = None if self.reference is None else self.reference.reflected()
        return replace(self, p_mean=-self.p_mean, reference=ref)

    def frozen(self) -> "EffectiveContext":
        return replace(self, reference=None)

    def kernel_args(self) -> dict:
        if self.reference is None:
            return dict(ref=np.array([self.p_mean]), ref_t0=0.0, comp=self.compression, xi=self.xi)
        return dict(ref=self.reference.p, ref_t0=self.reference.t0, comp=self.compression, xi=self.xi)


def veff_factor(p, ctx: EffectiveContext, t=None):
    """Multiplier turning the classical potential into the effective one."""
    x = (np.asarray(p, dtype=float) - ctx.reference_momentum(t)) / ctx.xi
    out = ctx.compression * kernels.sinhc_array(x)
    return float(out) if out.ndim == 0 else out


def effective_force(q, p, t, params: Params, ctx: EffectiveContext):
    return veff_factor(p, ctx, t) * (-params.amplitude(t) * np.sin(q))


# -- Wigner right-hand sides -------------------------------------------------


def _spectral_k(n: int, spacing: float) -> np.ndarray:
    return TWO_PI * np.fft.fftfreq(n, d=spacing)


def _dq(state: WignerGridState) -> np.ndarray:
    """Spectral q derivative; the q grid must cover whole periods."""
    span = state.q.size * state.dq
    periods = span / state.q_period
    if abs(periods - round(periods)) > 1e-9:
        raise ValueError("q grid does not cover a whole number of periods")
    k = _spectral_k(state.q.size, state.dq)
    return np.fft.ifft(1j * k[:, None] * np.fft.fft(state.W, axis=0), axis=0).real


def _dp_power(state: WignerGridState, nu: int) -> np.ndarray:
    k = _spectral_k(state.p.size, state.dp)
    spec = np.fft.fft(state.W, axis=1)
    # high powers of k amplify round-off in the tail of the spectrum
    spec[np.abs(spec) < SPECTRAL_FLOOR * np.abs(spec).max()] = 0.0
    spec *= (1j * k[None, :]) ** nu
    out = np.fft.ifft(spec, axis=1).real
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"momentum derivative of order {nu} overflowed")
    return out


def liouville_rhs(state: WignerGridState, t, params: Params) -> np.ndarray:
    """Classical flow ``-p dW/dq + V'(q) dW/dp``."""
    return moyal_series_rhs(state, t, params, order=1)


def moyal_series_rhs(state: WignerGridState, t, params: Params, order: int) -> np.ndarray:
    """Wigner right-hand side with the potential series truncated after ``order``.

    For V = -a cos q every odd derivative is ``+-a sin q`` and the signs cancel
    against those of the series, leaving positive coefficients
    ``(kbar/2)^(nu-1) / nu!``.
    """
    if order < 1 or order % 2 == 0:
        raise ValueError("order must be an odd integer >= 1")
    a = float(params.amplitude(t))
    force_shape = a * np.sin(state.q)[:, None]
    half = 0.5 * params.kbar
    acc = np.zeros_like(state.W)
    for nu in range(1, order + 1, 2):
        acc += half ** (nu - 1) / math.factorial(nu) * _dp_power(state, nu)
    return -state.p[None, :] * _dq(state) + force_shape * acc


def shift_momentum(state: WignerGridState, shift: float) -> np.ndarray:
    """``W(q, p + shift)``; exact roll when the shift is a whole number of cells."""
    cells = shift / state.dp
    whole = int(round(cells))
    if abs(cells - whole) < 1e-9:
        out = np.zeros_like(state.W)
        if whole >= 0:
            out[:, : state.p.size - whole] = state.W[:, whole:]
        else:
            out[:, -whole:] = state.W[:, : state.p.size + whole]
        return out
    k = _spectral_k(state.p.size, state.dp)
    return np.fft.ifft(np.fft.fft(state.W, axis=1) * np.exp(1j * k * shift)[None, :], axis=1).real


def moyal_shift_rhs(state: WignerGridState, t, params: Params) -> np.ndarray:
    """Resummed right-hand side: ``-p dW/dq + a sin q [W(p+kbar/2) - W(p-kbar/2)] / kbar``."""
    a = float(params.amplitude(t))
    h = 0.5 * params.kbar
    diff = shift_momentum(state, h) - shift_momentum(state, -h)
    return -state.p[None, :] * _dq(state) + (a / params.kbar) * np.sin(state.q)[:, None] * diff


def quantum_term(state: WignerGridState, t, params: Params) -> np.ndarray:
    """Shift-form right-hand side without the streaming part."""
    return moyal_shift_rhs(state, t, params) + state.p[None, :] * _dq(state)


# -- modified dynamics -------------------------------------------------------


def modified_stroboscopic_map(x0: PhasePoint, cycle_index: int, params: Params, ctx: EffectiveContext, *, substeps=DEFAULT_SUBSTEPS) -> PhasePoint:
    return stroboscopic_map(x0, cycle_index, params, substeps=substeps, ctx=ctx)


def record_reference(x: PhasePoint, params: Params, ctx: EffectiveContext | None = None, *, cycle_index=0, substeps=DEFAULT_SUBSTEPS) -> ReferenceOrbit:
    """Tabulate one period of the orbit through ``x`` (original or effective force)."""
    t0 = params.snapshot_time(cycle_index)
    h = TWO_PI / substeps
    extra = {} if ctx is None else dict(ctx.kernel_args(), sgn=1)
    _, _, qs, ps = kernels.record_orbit(x.q, x.p, t0, h, substeps, params.kappa, params.eps, params.phase, **extra)
    return ReferenceOrbit(t0, ps, qs)


@dataclass(frozen=True)
class ModifiedResonance:
    fixed_point: FixedPoint
    ctx: EffectiveContext
    classical: FixedPoint
    iterations: int
    history: tuple[float, ...]

    @property
    def p(self) -> float:
        return self.fixed_point.point.p

    @property
    def q(self) -> float:
        return self.fixed_point.point.q


def find_modified_resonance(
    guess: PhasePoint,
    params: Params,
    kbar: float | None = None,
    xi: float = 1.0,
    *,
    reference: str = "orbit",
    cycle_index: int = 0,
    substeps: int = DEFAULT_SUBSTEPS,
    tol: float = RESONANCE_TOL,
    max_iter: int = RESONANCE_MAX_ITER,
    damping: float = DAMPING,
) -> ModifiedResonance:
    """Self-consistent period-one resonance of the effective dynamics.

    Starts from the classical fixed point near ``guess`` and alternates a
    Newton solve of the effective map with an update of the packet reference,
    damped by ``damping``, until the fixed-point momentum moves less than
    ``tol``.  ``reference="orbit"`` makes the reference follow the resonant
    orbit through the period; ``"frozen"`` holds it at a constant momentum.
    """
    if reference not in ("orbit", "frozen"):
        raise ValueError(f"unknown reference mode {reference!r}")
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    if kbar is not None:
        params = params.with_(kbar=kbar)
    fp_kw = dict(cycle_index=cycle_index, substeps=substeps)
    classical = find_period1_fixed_point(guess, params, "original", **fp_kw)
    orbit = record_reference(classical.point, params, cycle_index=cycle_index, substeps=substeps)
    ctx = EffectiveContext(orbit.mean(), xi, params.kbar, orbit if reference == "orbit" else None)
    if reference == "frozen":
        ctx = replace(ctx, p_mean=classical.point.p)
    point = classical.point
    p_prev = point.p
    history = [p_prev]
    for it in range(1, max_iter + 1):
        fp = find_period1_fixed_point(point, params, "effective", ctx=ctx, **fp_kw)
        point = fp.point
        history.append(point.p)
        if abs(point.p - p_prev) < tol:
            return ModifiedResonance(fp, ctx, classical, it, tuple(history))
        p_prev = point.p
        if reference == "orbit":
            new = record_reference(point, params, ctx, cycle_index=cycle_index, substeps=substeps)
            blended = ctx.reference.blend(new, damping)
            ctx = replace(ctx, reference=blended, p_mean=blended.mean())
        else:
            ctx = replace(ctx, p_mean=(1.0 - damping) * ctx.p_mean + damping * point.p)
    raise ConvergenceError(
        f"resonance did not settle in {max_iter} iterations", p=point.p, step=abs(history[-1] - history[-2])
    )


# -- modified ensembles ------------------------------------------------------


@dataclass(frozen=True)
class MembershipRegion:
    """Axis-aligned ellipse around a side-island centre (q folded)."""

    center: PhasePoint
    half_q: float = 1.0
    half_p: float = 0.35

    def contains(self, q, p) -> np.ndarray:
        dq = fold(np.asarray(q, dtype=float) - self.center.q) / self.half_q
        dp = (np.asarray(p, dtype=float) - self.center.p) / self.half_p
        return dq * dq + dp * dp <= 1.0


def island_center_at(res: ModifiedResonance, params: Params, t: float, substeps=DEFAULT_SUBSTEPS) -> PhasePoint:
    """Where the modified resonant orbit sits at time ``t``."""
    t_fp = params.snapshot_time(0)
    h = TWO_PI / substeps
    nsteps = int(round(((t - t_fp) % TWO_PI) / h))
    if nsteps == 0:
        return res.fixed_point.point
    extra = dict(res.ctx.kernel_args(), sgn=1)
    pt = res.fixed_point.point
    qe, pe, _, _ = kernels.record_orbit(pt.q, pt.p, t_fp, h, nsteps, params.kappa, params.eps, params.phase, **extra)
    return PhasePoint(float(fold(qe)), float(pe))


def classify_members(ens: ClassicalEnsemble, regions) -> np.ndarray:
    """Per-particle routing sign: +1 / -1 for the upper / lower island, 0 otherwise."""
    sign = np.zeros(len(ens), dtype=np.int8)
    for s, region in regions:
        sign[(sign == 0) & region.contains(ens.q, ens.p)] = s
    return sign


def evolve_modified_ensemble(
    ens: ClassicalEnsemble,
    n_cycles: int,
    params: Params,
    resonance: ModifiedResonance | None,
    spont=None,
    *,
    t_start: float = 0.0,
    half_q: float = 1.0,
    half_p: float = 0.35,
    **kw,
):
    """Ensemble in which side-island members follow the effective force.

    Membership is decided once, at ``t_start``, against ellipses centred on
    the modified resonant orbit and its mirror image.  Without modulation or
    without a resonance every particle keeps the original force.
    Returns ``(snapshots, sign)``.
    """
    if resonance is None or params.eps == 0.0:
        sign = np.zeros(len(ens), dtype=np.int8)
        return evolve_ensemble(ens, n_cycles, params, spont, t_start=t_start, **kw), sign
    center = island_center_at(resonance, params, t_start, kw.get("substeps", DEFAULT_SUBSTEPS))
    regions = [
        (1, MembershipRegion(center, half_q, half_p)),
        (-1, MembershipRegion(center.reflected(), half_q, half_p)),
    ]
    sign = classify_members(ens, regions)
    snaps = evolve_ensemble(ens, n_cycles, params, spont, t_start=t_start, sign=sign, ctx=resonance.ctx, **kw)
    return snaps, sign
