"""Classical dynamics in the modulated standing wave.

Leapfrog integration, stroboscopic maps, portraits, period-one fixed points
and noisy particle ensembles.  The effective-potential variant shares every
routine here; it is selected by passing an effective context (see
:mod:`slowmo.moyal`), whose ``kernel_args()`` feed the integration kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import kernels
from .core.params import Params, PhasePoint, SpontaneousSettings, fold
from .errors import EnsembleError, FixedPointError, IntegrationError
from .parallel import chunk_bounds, pmap, resolve_workers
from .recoil import CLASSICAL, CLOUD, draw_schedules, stream

TWO_PI = 2.0 * math.pi
DEFAULT_SUBSTEPS = 2048
FD_STEP = 1e-6
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
SINGULAR_DET = 1e-12


def potential_and_force(q, t, params: Params):
    """Potential ``-a(t) cos q`` and force ``-a(t) sin q``."""
    a = params.amplitude(t)
    return -a * np.cos(q), -a * np.sin(q)


def energy(q, p, t, params: Params):
    return 0.5 * np.asarray(p) ** 2 + potential_and_force(q, t, params)[0]


def shadow_energy(q, p, kappa: float, h: float):
    """Modified Hamiltonian conserved by kick-drift-kick to O(h^4) for a static pendulum.

    Using it in place of the plain energy removes the bounded O(h^2)
    oscillation, so what remains measures genuine drift.
    """
    q = np.asarray(q)
    p = np.asarray(p)
    v2 = kappa * np.cos(q)
    v1 = kappa * np.sin(q)
    return 0.5 * p**2 - kappa * np.cos(q) + h * h / 12.0 * p**2 * v2 - h * h / 24.0 * v1**2


def _effective_args(ctx, sign, n):
    if ctx is None:
        return {}
    args = dict(ctx.kernel_args())
    args["sign"] = np.broadcast_to(np.asarray(sign, dtype=np.int8), (n,)).copy()
    return args


def _step_count(span: float, h: float) -> int:
    steps = int(round(span / h))
    if steps < 0 or abs(steps * h - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError(f"time span {span!r} is not a whole number of steps of {h!r}")
    return steps


def propagate(q, p, t0: float, t1: float, params: Params, *, substeps=DEFAULT_SUBSTEPS, ctx=None, sign=1):
    """Advance arrays of phase points from ``t0`` to ``t1``; returns ``(q, p, flags)`` copies."""
    if substeps < 16:
        raise ValueError("need at least 16 substeps per period")
    q = np.array(q, dtype=float, ndmin=1)
    p = np.array(p, dtype=float, ndmin=1)
    h = TWO_PI / substeps
    nsteps = _step_count(t1 - t0, h)
    flags = kernels.leapfrog_ensemble(
        q, p, t0, h, nsteps, params.kappa, params.eps, params.phase, **_effective_args(ctx, sign, q.size)
    )
    return q, p, flags


def integrate_trajectory(x0: PhasePoint, t0: float, t1: float, substeps: int, params: Params, *, ctx=None, sign=1) -> PhasePoint:
    q, p, flags = propagate([x0.q], [x0.p], t0, t1, params, substeps=substeps, ctx=ctx, sign=sign)
    if flags[0] != kernels.OK:
        raise IntegrationError(f"trajectory from {tuple(x0)} left the finite range before t={t1}")
    return PhasePoint(float(q[0]), float(p[0]))


def map_points(q, p, params: Params, cycle_index: int = 0, *, substeps=DEFAULT_SUBSTEPS, ctx=None, sign=1):
    """One modulation period from the snapshot phase of ``cycle_index``, vectorized."""
    t0 = params.snapshot_time(cycle_index)
    return propagate(q, p, t0, t0 + TWO_PI, params, substeps=substeps, ctx=ctx, sign=sign)


def stroboscopic_map(x0: PhasePoint, cycle_index: int, params: Params, *, substeps=DEFAULT_SUBSTEPS, ctx=None, sign=1) -> PhasePoint:
    t0 = params.snapshot_time(cycle_index)
    return integrate_trajectory(x0, t0, t0 + TWO_PI, substeps, params, ctx=ctx, sign=sign)


# -- portraits -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Portrait:
    """Orbits of shape ``(n_seeds, n_cycles + 1, 2)``; NaN after a seed fails."""

    orbits: np.ndarray
    failed: np.ndarray
    label: str = ""

    def points(self) -> np.ndarray:
        """All finite orbit points, stacked as ``(N, 2)`` with q folded."""
        pts = self.orbits.reshape(-1, 2)
        pts = pts[np.isfinite(pts).all(axis=1)]
        return np.column_stack([fold(pts[:, 0]), pts[:, 1]])


def seed_lattice(nq: int = 24, np_: int = 24, p_range=(-2.0, 2.0)) -> list[PhasePoint]:
    qs = -math.pi + TWO_PI * (np.arange(nq) + 0.5) / nq
    ps = np.linspace(p_range[0], p_range[1], np_)
    return [PhasePoint(float(q), float(p)) for p in ps for q in qs]


def _portrait_chunk(job, params, n_cycles, substeps, ctx):
    q, p, sign = job
    q = q.copy()
    p = p.copy()
    out = np.full((q.size, n_cycles + 1, 2), np.nan)
    out[:, 0, 0] = q
    out[:, 0, 1] = p
    h = TWO_PI / substeps
    flags = np.zeros(q.size, dtype=np.int8)
    eff = _effective_args(ctx, sign, q.size)
    for c in range(n_cycles):
        t0 = params.snapshot_time(c)
        kernels.leapfrog_ensemble(q, p, t0, h, substeps, params.kappa, params.eps, params.phase, flags=flags, **eff)
        ok = flags == kernels.OK
        out[ok, c + 1, 0] = q[ok]
        out[ok, c + 1, 1] = p[ok]
        # keep folded so long runs never lose precision in q
        q[ok] = fold(q[ok])
    return out, flags != kernels.OK


def poincare_portrait(seeds, n_cycles: int, params: Params, *, substeps=DEFAULT_SUBSTEPS, ctx=None, workers=1, label="") -> Portrait:
    """Stroboscopic orbits of every seed.

    With an effective context, seeds with ``p >= 0`` follow the context about
    its reference and seeds with ``p < 0`` the mirrored one.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    seeds = list(seeds)
    if not seeds:
        raise ValueError("no seeds")
    q = np.array([s.q for s in seeds], dtype=float)
    p = np.array([s.p for s in seeds], dtype=float)
    sign = np.where(p >= 0.0, 1, -1).astype(np.int8)
    jobs = [(q[a:b], p[a:b], sign[a:b]) for a, b in chunk_bounds(q.size, resolve_workers(workers))]
    parts = pmap(partial(_portrait_chunk, params=params, n_cycles=n_cycles, substeps=substeps, ctx=ctx), jobs, workers)
    orbits = np.concatenate([o for o, _ in parts])
    failed = np.concatenate([f for _, f in parts])
    return Portrait(orbits, failed, label)


# -- fixed points ----------------------------------------------------------


@dataclass(frozen=True)
class FixedPoint:
    point: PhasePoint
    residual: float
    monodromy: np.ndarray = field(repr=False)
    iterations: int = 0

    @property
    def trace(self) -> float:
        return float(np.trace(self.monodromy))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.monodromy))

    @property
    def stable(self) -> bool:
        return abs(self.trace) < 2.0


def _map_with_jacobian(x, params, cycle_index, substeps, ctx, sign, step):
    """Image of ``x`` and the central-difference Jacobian of the map."""
    q0, p0 = x
    dq = np.array([0.0, step, -step, 0.0, 0.0])
    dp = np.array([0.0, 0.0, 0.0, step, -step])
    q, p, flags = map_points(q0 + dq, p0 + dp, params, cycle_index, substeps=substeps, ctx=ctx, sign=sign)
    if np.any(flags != kernels.OK):
        raise FixedPointError("map evaluation overflowed", q=q0, p=p0)
    jac = np.array(
        [
            [(q[1] - q[2]) / (2 * step), (q[3] - q[4]) / (2 * step)],
            [(p[1] - p[2]) / (2 * step), (p[3] - p[4]) / (2 * step)],
        ]
    )
    return np.array([q[0], p[0]]), jac


def find_period1_fixed_point(
    guess: PhasePoint,
    params: Params,
    variant: str = "original",
    *,
    ctx=None,
    cycle_index: int = 0,
    substeps: int = DEFAULT_SUBSTEPS,
    tol: float = NEWTON_TOL,
    fd_step: float = FD_STEP,
    max_iter: int = NEWTON_MAX_ITER,
) -> FixedPoint:
    """Newton iteration on ``G(x) = map(x) - x`` (q difference folded)."""
    if variant not in ("original", "effective"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "effective" and ctx is None:
        raise ValueError("effective variant needs a context")
    if variant == "original":
        ctx = None
    x = np.array([guess.q, guess.p], dtype=float)
    residual = math.inf
    for it in range(1, max_iter + 1):
        img, jac = _map_with_jacobian(x, params, cycle_index, substeps, ctx, 1, fd_step)
        g = np.array([fold(img[0] - x[0]), img[1] - x[1]])
        residual = float(np.hypot(*g))
        if residual < tol:
            return FixedPoint(PhasePoint(float(fold(x[0])), float(x[1])), residual, jac, it)
        a = jac - np.eye(2)
        det = float(np.linalg.det(a))
        if abs(det) < SINGULAR_DET:
            raise FixedPointError("Newton Jacobian is singular", det=det, q=float(x[0]), p=float(x[1]))
        x = x - np.linalg.solve(a, g)
        if not np.all(np.isfinite(x)):
            break
    raise FixedPointError(
        f"Newton did not converge in {max_iter} iterations", residual=residual, q=float(x[0]), p=float(x[1])
    )


# -- ensembles -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClassicalEnsemble:
    q: np.ndarray
    p: np.ndarray
    stream_ids: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float, ndmin=1)
        p = np.array(self.p, dtype=float, ndmin=1)
        ids = np.array(self.stream_ids, dtype=np.int64, ndmin=1)
        if q.size == 0:
            raise EnsembleError("ensemble is empty")
        if not (q.shape == p.shape == ids.shape) or q.ndim != 1:
            raise EnsembleError("q, p and stream ids must be 1-d arrays of equal length")
        if np.unique(ids).size != ids.size:
            raise EnsembleError("stream ids must be distinct")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise EnsembleError("non-finite initial phase point")
        for name, arr in (("q", q), ("p", p), ("stream_ids", ids)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.q.size

    @classmethod
    def from_points(cls, points) -> "ClassicalEnsemble":
        points = list(points)
        return cls([x.q for x in points], [x.p for x in points], np.arange(len(points)))

    @classmethod
    def cloud(cls, n: int, sigma_p: float, master_seed: int, p0: float = 0.0) -> "ClassicalEnsemble":
        """Uniform in q over one well, Gaussian in p."""
        rng = stream(master_seed, CLOUD)
        q = rng.uniform(-math.pi, math.pi, n)
        p = p0 + sigma_p * rng.standard_normal(n)
        return cls(q, p, np.arange(n))

    def points(self) -> list[PhasePoint]:
        return [PhasePoint(float(a), float(b)) for a, b in zip(self.q, self.p)]

    def subset(self, mask) -> "ClassicalEnsemble":
        return ClassicalEnsemble(self.q[mask], self.p[mask], self.stream_ids[mask])


@dataclass(frozen=True, eq=False)
class EnsembleSnapshot:
    cycle: int
    time: float
    q: np.ndarray
    p: np.ndarray
    flags: np.ndarray
    kicks: np.ndarray

    @property
    def ok(self) -> np.ndarray:
        return self.flags == kernels.OK

    @property
    def n_flagged(self) -> int:
        return int(np.count_nonzero(self.flags != kernels.OK))


def snapshot_schedule(params: Params, t_start: float, n_cycles: int) -> list[tuple[int, float]]:
    """``(cycle, time)`` of every snapshot in ``[t_start, snapshot_time(n_cycles)]``."""
    out = []
    for c in range(n_cycles + 1):
        t = params.snapshot_time(c)
        if t >= t_start - 1e-12:
            out.append((c, t))
    if not out:
        raise ValueError("no snapshot falls inside the requested window")
    return out


def _ensemble_chunk(job, params, schedule, t_start, substeps, spont, master_seed, ctx, pcap):
    q, p, ids, sign = job
    q = q.copy()
    p = p.copy()
    n = q.size
    h = TWO_PI / substeps
    t_end = schedule[-1][1]
    if spont.active and t_end > t_start:
        ptr, jt, jdp = _schedules_for(ids, t_start, t_end, spont, params.kbar, master_seed)
    else:
        ptr, jt, jdp = np.zeros(n + 1, dtype=np.int64), np.zeros(0), np.zeros(0)
    eff = _effective_args(ctx, sign, n) if ctx is not None else {"sign": sign}
    flags = np.zeros(n, dtype=np.int8)
    done = 0
    out = []
    for _, t in schedule:
        steps = _step_count(t - t_start, h) - done
        if steps:
            kernels.leapfrog_ensemble(
                q, p, t_start + done * h, h, steps, params.kappa, params.eps, params.phase,
                jump_ptr=ptr, jump_t=jt, jump_dp=jdp, pcap=pcap, flags=flags, **eff,
            )
            done += steps
        counts = np.array([np.count_nonzero(jt[ptr[i] : ptr[i + 1]] < t) for i in range(n)], dtype=np.int64)
        out.append((q.copy(), p.copy(), flags.copy(), counts))
    return out


def _schedules_for(ids, t0, t1, spont, kbar, master_seed):
    ptr = np.zeros(ids.size + 1, dtype=np.int64)
    times, kicks = [], []
    for i, sid in enumerate(ids):
        p_, t_, k_ = draw_schedules(1, t0, t1, spont, kbar, master_seed, CLASSICAL, first=int(sid))
        ptr[i + 1] = ptr[i] + p_[1]
        times.append(t_)
        kicks.append(k_)
    return ptr, np.concatenate(times), np.concatenate(kicks)


def evolve_ensemble(
    ens: ClassicalEnsemble,
    n_cycles: int,
    params: Params,
    spont: SpontaneousSettings | None = None,
    *,
    master_seed: int = 0,
    t_start: float = 0.0,
    substeps: int = DEFAULT_SUBSTEPS,
    sign=None,
    ctx=None,
    pcap: float = math.inf,
    workers: int | None = 1,
) -> list[EnsembleSnapshot]:
    """Propagate every particle independently and record stroboscopic snapshots.

    ``sign`` (per particle, 0 or +-1) routes particles to the original or the
    effective force when ``ctx`` is given.  Particles whose momentum exceeds
    ``pcap`` are frozen and flagged.  Results are bit-identical for any
    worker count.
    """
    spont = spont or SpontaneousSettings.off()
    schedule = snapshot_schedule(params, t_start, n_cycles)
    n = len(ens)
    sign = np.zeros(n, dtype=np.int8) if sign is None else np.broadcast_to(np.asarray(sign, dtype=np.int8), (n,))
    if ctx is None and np.any(sign != 0):
        raise ValueError("effective routing requested without a context")
    jobs = [
        (ens.q[a:b], ens.p[a:b], ens.stream_ids[a:b], np.array(sign[a:b]))
        for a, b in chunk_bounds(n, resolve_workers(workers))
    ]
    fn = partial(
        _ensemble_chunk, params=params, schedule=schedule, t_start=t_start, substeps=substeps,
        spont=spont, master_seed=master_seed, ctx=ctx, pcap=pcap,
    )
    parts = pmap(fn, jobs, workers)
    snaps = []
    for k, (cycle, t) in enumerate(schedule):
        cols = [np.concatenate([part[k][j] for part in parts]) for j in range(4)]
        snaps.append(EnsembleSnapshot(cycle, t, *cols))
    return snaps


def evolve_classical_ensemble(ens, n_cycles, params, spont=None, **kw) -> list[EnsembleSnapshot]:
    """Original-force ensemble evolution."""
    kw.pop("ctx", None)
    kw.pop("sign", None)
    return evolve_ensemble(ens, n_cycles, params, spont, **kw)
