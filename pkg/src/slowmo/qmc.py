"""Quantum trajectories with recoil jumps, and ensemble momentum distributions.

Between Poisson-timed jumps the state evolves unitarily; the step containing
a jump is split exactly at the jump time.  A jump displaces the state in
momentum by the drawn kick, rounded to the grid's momentum comb so the state
stays periodic on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .core.grid import WaveFunction, build_grid, check_band_edge, init_packet
from .core.histogram import MomentumHistogram, quantum_histogram
from .core.params import GaussianPacket, Params, SpontaneousSettings
from .core.series import StroboscopicSeries
from .errors import BandEdgeError, EnsembleError, SlowmoError
from .parallel import pmap
from .quantum import DEFAULT_STEPS, TWO_PI, _run_cycles, _Stepper
from .recoil import QUANTUM, JumpSchedule, draw_jump_schedule, sample_directions, stream

__all__ = [
    "EnsembleResult",
    "JumpSchedule",
    "TrajectoryResult",
    "apply_recoil",
    "draw_jump_schedule",
    "ensemble_distribution",
    "run_quantum_trajectory",
    "sample_directions",
    "stream",
]

MAX_FAILED_FRACTION = 0.01


def snap_to_comb(dp: float, grid, kbar: float) -> float:
    cell = grid.dp(kbar)
    return round(dp / cell) * cell


def apply_recoil(psi: WaveFunction, dp: float, *, snap: bool = False) -> WaveFunction:
    """Multiply by the plane wave of momentum ``dp``.

    With ``snap`` the kick is first rounded to the momentum comb, which keeps
    the phase periodic on the grid.
    """
    if snap:
        dp = snap_to_comb(dp, psi.grid, psi.kbar)
    if dp == 0.0:
        return psi
    out = psi.replace_amps(psi.amps * np.exp(1j * dp * psi.grid.q / psi.kbar))
    check_band_edge(out)
    return out


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    final: WaveFunction
    series: StroboscopicSeries
    jump_times: np.ndarray
    jump_kicks: np.ndarray
    stream_index: int


def _jump_hook(schedule: JumpSchedule, grid, t_start: float, dt: float):
    """Segment runner that splits steps at jump times and applies snapped kicks.

    Returns ``(runner, applied)``; ``applied`` collects the kicks actually used.
    """
    times, kicks = schedule.times, schedule.kicks
    applied = []
    cursor = [0]

    def partial_step(stepper, amps, t0, t1):
        if t1 > t0:
            _Stepper(grid, stepper.params, t1 - t0).run(amps, t0, 1)

    def run(stepper, amps, t_a, t_b, done, target):
        kbar = stepper.params.kbar
        k = done
        while cursor[0] < times.size and times[cursor[0]] < t_b:
            kj = min(int(math.floor((times[cursor[0]] - t_start) / dt)), target - 1)
            stepper.run(amps, t_start + k * dt, kj - k)
            tc = t_start + kj * dt
            step_end = min(t_start + (kj + 1) * dt, t_b)
            while cursor[0] < times.size and times[cursor[0]] < step_end:
                tj = times[cursor[0]]
                partial_step(stepper, amps, tc, tj)
                tc = max(tc, tj)
                dp = snap_to_comb(kicks[cursor[0]], grid, kbar)
                if dp != 0.0:
                    amps *= np.exp(1j * dp * grid.q / kbar)
                applied.append(dp)
                cursor[0] += 1
            partial_step(stepper, amps, tc, t_start + (kj + 1) * dt)
            k = kj + 1
        stepper.run(amps, t_start + k * dt, target - k)
        return amps

    return run, applied


def run_quantum_trajectory(
    psi0: WaveFunction,
    n_cycles: int,
    params: Params,
    settings: SpontaneousSettings | None = None,
    rng=None,
    *,
    steps_per_cycle: int = DEFAULT_STEPS,
    t_start: float | None = None,
    stream_index: int = 0,
) -> TrajectoryResult:
    """Unitary evolution interleaved with recoil jumps drawn from ``rng``."""
    settings = settings or SpontaneousSettings.off()
    t_start = params.snapshot_time(0) if t_start is None else t_start
    t_end = params.snapshot_time(n_cycles)
    if not settings.active or t_end <= t_start:
        series, states = _run_cycles(psi0, n_cycles, params, steps_per_cycle, t_start, False)
        return TrajectoryResult(states[-1], series, np.zeros(0), np.zeros(0), stream_index)
    if rng is None:
        raise ValueError("an active recoil model needs a random stream")
    sched = draw_jump_schedule(t_start, t_end, settings, params.kbar, rng)
    dt = TWO_PI / steps_per_cycle
    hook, applied = _jump_hook(sched, psi0.grid, t_start, dt)
    series, states = _run_cycles(psi0, n_cycles, params, steps_per_cycle, t_start, False, hooks=hook)
    return TrajectoryResult(states[-1], series, sched.times, np.array(applied), stream_index)


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    histogram: MomentumHistogram
    series: StroboscopicSeries
    n_trajectories: int
    failed: tuple[int, ...]


def _one_trajectory(job, params, n_cycles, settings, master_seed, edges, grid, steps_per_cycle, t_start, max_outside):
    index, packet = job
    try:
        psi0 = init_packet(packet, grid, params.kbar)
        rng = stream(master_seed, QUANTUM, index) if settings.active else None
        res = run_quantum_trajectory(
            psi0, n_cycles, params, settings, rng,
            steps_per_cycle=steps_per_cycle, t_start=t_start, stream_index=index,
        )
        hist = quantum_histogram(res.final, edges, max_outside=max_outside)
    except (BandEdgeError, SlowmoError, FloatingPointError) as exc:
        return index, None, None, f"{type(exc).__name__}: {exc}"
    return index, hist.masses * (1.0 - hist.outside), res.series, None


def ensemble_distribution(
    initials,
    n_cycles: int,
    params: Params,
    settings: SpontaneousSettings | None,
    master_seed: int,
    edges,
    *,
    n: int = 1024,
    wells: int = 16,
    steps_per_cycle: int = DEFAULT_STEPS,
    t_start: float | None = None,
    workers: int | None = 1,
    label: str = "quantum",
    max_outside: float = 1e-3,
) -> EnsembleResult:
    """Average final momentum histogram over independent packets.

    Trajectory ``i`` uses random stream ``i``; the sum runs in index order so
    the result does not depend on ``workers``.  Up to 1% of trajectories may
    fail (and are reported); more invalidates the run.
    """
    initials = list(initials)
    if not initials:
        raise EnsembleError("need at least one packet")
    settings = settings or SpontaneousSettings.off()
    edges = np.asarray(edges, dtype=float)
    grid = build_grid(n, wells)
    fn = partial(
        _one_trajectory, params=params, n_cycles=n_cycles, settings=settings, master_seed=master_seed,
        edges=edges, grid=grid, steps_per_cycle=steps_per_cycle, t_start=t_start,
        max_outside=max_outside,
    )
    results = sorted(pmap(fn, list(enumerate(initials)), workers), key=lambda r: r[0])
    failed = tuple(i for i, m, _, _ in results if m is None)
    if len(failed) > MAX_FAILED_FRACTION * len(initials):
        first = next(r[3] for r in results if r[1] is None)
        raise EnsembleError(f"{len(failed)} of {len(initials)} trajectories failed; first: {first}")
    good = [r for r in results if r[1] is not None]
    masses = np.zeros(edges.size - 1)
    mean_p = np.zeros(len(good[0][2]))
    second = np.zeros_like(mean_p)
    for _, m, s, _ in good:
        masses += m
        mean_p += s.mean_p
        second += s.var_p + s.mean_p**2
    k = len(good)
    mean_p /= k
    ref = good[0][2]
    series = StroboscopicSeries(ref.cycles, ref.times, mean_p, second / k - mean_p**2, label)
    inside = masses.sum()
    hist = MomentumHistogram(edges, masses / inside, label, 1.0 - inside / k)
    return EnsembleResult(hist, series, len(initials), failed)


def packet_lattice(count: int, sigma_p: float, kbar: float, p0: float = 0.0) -> list[GaussianPacket]:
    """Packets evenly spread over one well, each with momentum width ``sigma_p``."""
    qs = -math.pi + TWO_PI * (np.arange(count) + 0.5) / count
    return [GaussianPacket.with_momentum_width(sigma_p, kbar, float(q), p0) for q in qs]
