"""Random streams and Poisson recoil schedules.

Every trajectory owns a counter-based (Philox) stream derived from
``(master_seed, domain, index)`` so results do not depend on how
trajectories are scheduled across workers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.params import RecoilModel, SpontaneousSettings

# stream domains; keep distinct so different consumers never share a stream
CLOUD = 0
CLASSICAL = 1
QUANTUM = 2


def stream(master_seed: int, domain: int, index: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(domain), int(index)))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class JumpSchedule:
    times: np.ndarray
    kicks: np.ndarray

    def __len__(self) -> int:
        return self.times.size


def sample_directions(rng: np.random.Generator, size: int, model: RecoilModel) -> np.ndarray:
    """Projected emission directions u in [-1, 1]."""
    model = RecoilModel(model)
    if model is RecoilModel.OFF or size == 0:
        return np.zeros(size)
    if model is RecoilModel.UNIFORM:
        return rng.uniform(-1.0, 1.0, size)
    # dipole pattern 3/8 (1 + u^2): rejection against the uniform envelope
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        u = rng.uniform(-1.0, 1.0, 2 * need + 8)
        keep = u[rng.uniform(0.0, 1.0, u.size) < 0.5 * (1.0 + u * u)][:need]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    return out


def draw_jump_schedule(t0: float, t1: float, settings: SpontaneousSettings, kbar: float, rng) -> JumpSchedule:
    """Homogeneous Poisson process on [t0, t1) with recoil kicks."""
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    if not settings.active:
        return JumpSchedule(np.zeros(0), np.zeros(0))
    count = rng.poisson(settings.rate * (t1 - t0))
    times = np.sort(rng.uniform(t0, t1, count))
    u = sample_directions(rng, count, settings.recoil_model)
    if settings.include_stimulated:
        u = u + rng.choice(np.array([-1.0, 1.0]), count)
    return JumpSchedule(times, kbar * u)


def draw_schedules(n: int, t0: float, t1: float, settings, kbar: float, master_seed: int, domain: int, first: int = 0):
    """Schedules for trajectories ``first .. first+n-1`` in CSR form.

    Returns ``(ptr, times, kicks)``.
    """
    ptr = np.zeros(n + 1, dtype=np.int64)
    if not settings.active:
        return ptr, np.zeros(0), np.zeros(0)
    times, kicks = [], []
    for i in range(n):
        sched = draw_jump_schedule(t0, t1, settings, kbar, stream(master_seed, domain, first + i))
        ptr[i + 1] = ptr[i] + len(sched)
        times.append(sched.times)
        kicks.append(sched.kicks)
    return ptr, np.concatenate(times), np.concatenate(kicks)
