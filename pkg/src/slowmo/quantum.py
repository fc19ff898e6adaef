"""Unitary propagation on the periodic grid by Strang splitting.

Each step of length ``dt`` from ``t`` is

    exp(i a(t + dt/4) cos q dt / (2 kbar))
    exp(-i p^2 dt / (2 kbar))                       (momentum space)
    exp(i a(t + 3dt/4) cos q dt / (2 kbar))

with ``a(t)`` the modulated well depth.  Adjacent half-kicks of consecutive
steps are fused into one phase multiplication.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .classical import TWO_PI, find_period1_fixed_point, snapshot_schedule
from .core.grid import WaveFunction, build_grid, check_band_edge, init_packet, moments
from .core.params import GaussianPacket, Params, PhasePoint
from .core.series import StroboscopicSeries
from .errors import ConvergenceError

DEFAULT_N = 1024
DEFAULT_WELLS = 4
DEFAULT_STEPS = 2048
MIN_STEPS = 256
VALIDATION_TOL = 1e-6
MAX_STEPS = 16384


class _Stepper:
    """Propagates raw amplitude arrays with a fixed step length."""

    def __init__(self, grid, params: Params, dt: float):
        self.params = params
        self.dt = dt
        self.cosq = np.cos(grid.q)
        p = grid.fft_momenta(params.kbar)
        self.kinetic = np.exp(-0.5j * p * p * dt / params.kbar)
        self.c = 0.5 * dt / params.kbar

    def _amp(self, t):
        p = self.params
        return p.kappa * (1.0 - 2.0 * p.eps * math.cos(t - p.phase))

    def run(self, amps: np.ndarray, t0: float, nsteps: int) -> np.ndarray:
        """Advance ``amps`` in place by ``nsteps`` steps starting at ``t0``."""
        if nsteps == 0:
            return amps
        dt = self.dt
        kernels.potential_kick(amps, self.cosq, self.c * self._amp(t0 + 0.25 * dt))
        for k in range(nsteps):
            t = t0 + k * dt
            amps[:] = np.fft.ifft(np.fft.fft(amps) * self.kinetic)
            a = self._amp(t + 0.75 * dt)
            if k + 1 < nsteps:
                a += self._amp(t + 1.25 * dt)
            kernels.potential_kick(amps, self.cosq, self.c * a)
        return amps


def split_step(psi: WaveFunction, t: float, dt: float, params: Params) -> WaveFunction:
    """One Strang step; refuses states that already touch the band edge."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    check_band_edge(psi)
    amps = np.array(psi.amps, dtype=complex)
    _Stepper(psi.grid, params, dt).run(amps, t, 1)
    return psi.replace_amps(amps)


def propagate(psi: WaveFunction, t0: float, t1: float, params: Params, steps_per_cycle: int = DEFAULT_STEPS) -> WaveFunction:
    """Evolve from ``t0`` to ``t1`` on the regular step grid anchored at ``t0``."""
    dt = TWO_PI / steps_per_cycle
    nsteps = int(round((t1 - t0) / dt))
    if nsteps < 0 or abs(nsteps * dt - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise ValueError("time span is not a whole number of steps")
    amps = np.array(psi.amps, dtype=complex)
    _Stepper(psi.grid, params, dt).run(amps, t0, nsteps)
    return psi.replace_amps(amps)


@dataclass(frozen=True, eq=False)
class CycleRun:
    series: StroboscopicSeries
    states: list
    steps_per_cycle: int
    validation: tuple[float, float] | None = None

    @property
    def final(self) -> WaveFunction:
        return self.states[-1]


def _run_cycles(psi0, n_cycles, params, steps_per_cycle, t_start, keep_states, hooks=None):
    schedule = snapshot_schedule(params, t_start, n_cycles)
    dt = TWO_PI / steps_per_cycle
    stepper = _Stepper(psi0.grid, params, dt)
    amps = np.array(psi0.amps, dtype=complex)
    done = 0
    rows, states = [], []
    for cycle, t in schedule:
        target = int(round((t - t_start) / dt))
        if abs(target * dt - (t - t_start)) > 1e-9:
            raise ValueError(f"snapshot at t={t} is off the step grid; choose steps_per_cycle divisible by 4")
        if hooks is None:
            stepper.run(amps, t_start + done * dt, target - done)
        else:
            amps = hooks(stepper, amps, t_start + done * dt, t_start + target * dt, done, target)
        done = target
        psi = psi0.replace_amps(amps.copy())
        check_band_edge(psi)
        mean_p, var_p, _, _ = moments(psi)
        rows.append((cycle, t, mean_p, var_p))
        if keep_states or cycle == schedule[-1][0]:
            states.append(psi)
    cols = list(zip(*rows))
    return StroboscopicSeries(*cols), states


def evolve_cycles(
    psi0: WaveFunction,
    n_cycles: int,
    params: Params,
    steps_per_cycle: int = DEFAULT_STEPS,
    *,
    t_start: float | None = None,
    validate: bool = True,
    max_steps: int = MAX_STEPS,
    keep_states: bool = False,
    label: str = "",
) -> CycleRun:
    """Stroboscopic evolution with adaptive step-count validation.

    Snapshots are taken at the modulation's snapshot phases from ``t_start``
    (default: the first snapshot) through cycle ``n_cycles``.  With
    ``validate`` the step count is doubled until the final mean momentum moves
    by less than 1e-6 between a count and its double; the accepted count is
    the coarser of that pair.  Doubling stops at ``max_steps``.
    """
    if steps_per_cycle < MIN_STEPS:
        raise ValueError(f"steps_per_cycle must be >= {MIN_STEPS}")
    if n_cycles < 0:
        raise ValueError("n_cycles must be >= 0")
    t_start = params.snapshot_time(0) if t_start is None else t_start
    steps = steps_per_cycle
    series, states = _run_cycles(psi0, n_cycles, params, steps, t_start, keep_states)
    check = None
    if validate:
        while True:
            fine, fine_states = _run_cycles(psi0, n_cycles, params, 2 * steps, t_start, keep_states)
            check = (float(series.mean_p[-1]), float(fine.mean_p[-1]))
            if abs(check[0] - check[1]) < VALIDATION_TOL:
                break
            if 2 * steps >= max_steps:
                raise ConvergenceError(
                    "final mean momentum is not converged in the step count",
                    steps=steps, coarse=check[0], fine=check[1],
                )
            steps, series, states = 2 * steps, fine, fine_states
    series = StroboscopicSeries(series.cycles, series.times, series.mean_p, series.var_p, label)
    return CycleRun(series, states, steps, check)


# -- energies -----------------------------------------------------------------


def _inner(grid, a, b) -> complex:
    return complex(np.vdot(a, b) * grid.dq)


def _kinetic(psi: WaveFunction) -> np.ndarray:
    p = psi.grid.fft_momenta(psi.kbar)
    return np.fft.ifft(0.5 * p * p * np.fft.fft(psi.amps))


def energy(psi: WaveFunction, params: Params, t: float = 0.0) -> float:
    """Expectation of p^2/2 - a(t) cos q."""
    g = psi.grid
    v = -params.amplitude(t) * np.cos(g.q)
    return _inner(g, psi.amps, _kinetic(psi)).real + float(np.sum(v * psi.density()) * g.dq)


def shadow_energy(psi: WaveFunction, params: Params, dt: float) -> float:
    """Expectation of the modified Hamiltonian of the Strang step (static well).

    From the symmetric BCH expansion, H~ = H - dt^2/(12 kbar^2) [T,[T,V]]
    - dt^2/24 V'^2, conserved by the splitting up to O(dt^4).
    """
    if params.eps != 0.0:
        raise ValueError("the shadow energy is defined for a static well only")
    g = psi.grid
    v = -params.kappa * np.cos(g.q)
    tpsi = _kinetic(psi)
    ttpsi = np.fft.ifft(0.5 * g.fft_momenta(psi.kbar) ** 2 * np.fft.fft(tpsi))
    # <[T,[T,V]]> = 2 Re<T^2 psi|V psi> - 2 <T psi|V|T psi>
    ttv = 2.0 * _inner(g, ttpsi, v * psi.amps).real - 2.0 * _inner(g, tpsi, v * tpsi).real
    dv2 = float(np.sum((params.kappa * np.sin(g.q)) ** 2 * psi.density()) * g.dq)
    return energy(psi, params) - dt * dt / (12.0 * psi.kbar**2) * ttv - dt * dt / 24.0 * dv2


# -- packets at resonances ----------------------------------------------------


def auto_xi(monodromy: np.ndarray) -> float:
    """Squeezing that aligns the packet with the invariant ellipse of a stable map.

    For M = I cos mu + J sin mu the invariant ellipse has variances in the
    ratio var_p / var_q = -M21 / M12, which fixes xi = sqrt(-M21 / M12).
    """
    m = np.asarray(monodromy, dtype=float)
    ratio = -m[1, 0] / m[0, 1]
    if not (abs(np.trace(m)) < 2.0 and ratio > 0):
        raise ValueError("monodromy is not elliptic; no invariant ellipse")
    return math.sqrt(ratio)


def resonance_start(start: str, params: Params, xi="auto", *, resonance_xi: float = 1.0, guess=PhasePoint(0.0, 1.0), substeps=2048):
    """Packet placement and squeezing for a classical or modified-resonance start.

    The modified resonance is solved with ``resonance_xi``; ``xi`` squeezes
    the packet itself, ``"auto"`` matching it to the classical island.
    Returns ``(point, xi)``.
    """
    from .moyal import find_modified_resonance

    classical = find_period1_fixed_point(guess, params, substeps=substeps)
    xi_val = auto_xi(classical.monodromy) if xi == "auto" else float(xi)
    if start == "classical":
        return classical.point, xi_val
    if start == "modified":
        res = find_modified_resonance(guess, params, xi=resonance_xi, substeps=substeps)
        return res.fixed_point.point, xi_val
    raise ValueError(f"start must be 'classical' or 'modified', got {start!r}")


def tunneling_series(
    start: str,
    n_cycles: int,
    params: Params,
    kbar: float | None = None,
    xi="auto",
    *,
    resonance_xi: float = 1.0,
    n: int = DEFAULT_N,
    wells: int = DEFAULT_WELLS,
    steps_per_cycle: int = DEFAULT_STEPS,
    validate: bool = True,
) -> StroboscopicSeries:
    """Mean momentum and variance of a packet started on a period-one resonance."""
    if kbar is not None:
        params = params.with_(kbar=kbar)
    point, xi_val = resonance_start(start, params, xi, resonance_xi=resonance_xi)
    grid = build_grid(n, wells)
    psi0 = init_packet(GaussianPacket(point.q, point.p, xi_val), grid, params.kbar)
    run = evolve_cycles(psi0, n_cycles, params, steps_per_cycle, validate=validate, label=start)
    return run.series
