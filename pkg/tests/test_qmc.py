import math

import numpy as np
import pytest

from slowmo.core import (
    GaussianPacket,
    Params,
    RecoilModel,
    SpontaneousSettings,
    build_grid,
    init_packet,
    moments,
    quantum_histogram,
    uniform_edges,
)
from slowmo.errors import BandEdgeError, EnsembleError
from slowmo.qmc import apply_recoil, ensemble_distribution, packet_lattice, run_quantum_trajectory, snap_to_comb
from slowmo.quantum import evolve_cycles
from slowmo.recoil import QUANTUM, draw_jump_schedule, draw_schedules, sample_directions, stream

KB = 0.25
DIPOLE = SpontaneousSettings(0.5, RecoilModel.DIPOLE)


@pytest.fixture(scope="module")
def grid():
    return build_grid(512, 4)


def test_empty_schedule_without_rate():
    s = draw_jump_schedule(0.0, 10.0, SpontaneousSettings.off(), KB, stream(1, QUANTUM))
    assert len(s) == 0
    with pytest.raises(ValueError):
        draw_jump_schedule(1.0, 1.0, DIPOLE, KB, stream(1, QUANTUM))


def test_poisson_counts():
    s = SpontaneousSettings(1.0, RecoilModel.UNIFORM)
    ptr, times, _ = draw_schedules(10_000, 0.0, 100.0, s, KB, 3, QUANTUM)
    counts = np.diff(ptr)
    assert abs(counts.mean() - 100.0) < 4 * math.sqrt(100.0) / math.sqrt(10_000)
    assert np.all((times >= 0) & (times < 100))
    first = times[: ptr[1]]
    assert np.all(np.diff(first) >= 0)


def test_dipole_moments():
    u = sample_directions(stream(9, 0), 1_000_000, RecoilModel.DIPOLE)
    assert np.all(np.abs(u) <= 1)
    sd1 = math.sqrt(2 / 5 / 1e6)
    sd2 = math.sqrt((9 / 35 - (2 / 5) ** 2) / 1e6)  # E[u^4] = 9/35
    assert abs(u.mean()) < 4 * sd1
    assert abs((u * u).mean() - 0.4) < 4 * sd2


def test_stimulated_kicks_and_streams():
    s = SpontaneousSettings(2.0, RecoilModel.UNIFORM, include_stimulated=True)
    a = draw_jump_schedule(0, 50, s, KB, stream(4, QUANTUM, 7))
    b = draw_jump_schedule(0, 50, s, KB, stream(4, QUANTUM, 7))
    c = draw_jump_schedule(0, 50, s, KB, stream(4, QUANTUM, 8))
    assert np.array_equal(a.kicks, b.kicks) and not np.array_equal(a.kicks, c.kicks[: len(a)])
    u = a.kicks / KB
    assert np.all(np.abs(np.abs(u) - 1) <= 1) and np.any(np.abs(u) > 1)


def test_recoil_properties(grid):
    psi = init_packet(GaussianPacket(0.0, 0.3), grid, KB)
    assert apply_recoil(psi, 0.0) is psi
    out = apply_recoil(psi, 0.25)
    assert moments(out)[0] == pytest.approx(0.55, abs=1e-8)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)
    two = apply_recoil(apply_recoil(psi, 0.1), 0.15)
    assert np.max(np.abs(two.amps - out.amps)) < 1e-12
    snapped = apply_recoil(psi, 0.2, snap=True)
    assert moments(snapped)[0] - 0.3 == pytest.approx(snap_to_comb(0.2, grid, KB), abs=1e-12)
    with pytest.raises(BandEdgeError):
        apply_recoil(psi, 0.95 * grid.momenta(KB)[-1])


def test_zero_rate_is_bit_identical(grid, params):
    psi = init_packet(GaussianPacket(0.0, 1.0), grid, KB)
    a = run_quantum_trajectory(psi, 3, params, steps_per_cycle=512)
    b = evolve_cycles(psi, 3, params, 512, validate=False)
    assert a.final.amps.tobytes() == b.final.amps.tobytes()
    assert a.series.mean_p.tobytes() == b.series.mean_p.tobytes()


def test_trajectory_determinism_and_norm(grid, params):
    psi = init_packet(GaussianPacket(0.0, 0.8), grid, KB)
    runs = [run_quantum_trajectory(psi, 2, params, DIPOLE, stream(5, QUANTUM, 3), steps_per_cycle=512) for _ in range(2)]
    assert runs[0].final.amps.tobytes() == runs[1].final.amps.tobytes()
    assert np.array_equal(runs[0].jump_kicks, runs[1].jump_kicks)
    assert runs[0].jump_times.size > 0
    assert runs[0].final.norm() == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        run_quantum_trajectory(psi, 1, params, DIPOLE, None)


def test_jump_splits_step_exactly():
    # free motion: a kick at time tj shifts the mean position by dp * (T - tj);
    # eight wells keep the spreading tail from wrapping around
    free = Params(kappa=1e-300, epsilon=0.0, kbar=KB)
    psi = init_packet(GaussianPacket(0.0, 0.0), build_grid(2048, 8), KB)
    s = SpontaneousSettings(0.3, RecoilModel.UNIFORM, include_stimulated=True)
    res = run_quantum_trajectory(psi, 1, free, s, stream(2, QUANTUM), steps_per_cycle=256)
    expected_p = res.jump_kicks.sum()
    expected_q = np.sum(res.jump_kicks * (2 * math.pi - res.jump_times))
    mean_p, _, mean_q, _ = moments(res.final)
    assert mean_p == pytest.approx(expected_p, abs=1e-10)
    assert mean_q == pytest.approx(expected_q, abs=1e-10)


def test_recoil_heating(params):
    packets = packet_lattice(200, 0.3, KB)
    edges = uniform_edges(-4, 4, 128)
    kw = dict(n=512, wells=8, steps_per_cycle=256)
    cold = ensemble_distribution(packets, 1, params, None, 1, edges, **kw)
    hot = ensemble_distribution(packets, 1, params, SpontaneousSettings(0.3, RecoilModel.DIPOLE, True), 1, edges, **kw)
    assert hot.series.var_p[-1] > cold.series.var_p[-1]


def test_single_packet_ensemble_reduction(grid, params):
    edges = uniform_edges(-3, 3, 64)
    packet = GaussianPacket(0.2, 0.5)
    res = ensemble_distribution([packet], 1, params, None, 0, edges, n=512, wells=4, steps_per_cycle=512)
    psi = evolve_cycles(init_packet(packet, grid, KB), 1, params, 512, validate=False).final
    assert np.max(np.abs(res.histogram.masses - quantum_histogram(psi, edges).masses)) < 1e-12
    assert res.failed == ()


def test_symmetric_ensemble_and_workers(params):
    packets = packet_lattice(8, 0.3, KB)
    packets += [GaussianPacket(-p.q0, -p.p0, p.xi) for p in packets]
    edges = uniform_edges(-3, 3, 64)
    kw = dict(n=512, wells=8, steps_per_cycle=256)
    a = ensemble_distribution(packets, 1, params, DIPOLE, 4, edges, workers=1, **kw)
    b = ensemble_distribution(packets, 1, params, DIPOLE, 4, edges, workers=3, **kw)
    assert a.histogram.masses.tobytes() == b.histogram.masses.tobytes()
    quiet = ensemble_distribution(packets, 1, params, None, 4, edges, **kw)
    assert np.max(np.abs(quiet.histogram.masses - quiet.histogram.masses[::-1])) < 1e-9


def test_ensemble_failures(params):
    edges = uniform_edges(-3, 3, 16)
    with pytest.raises(EnsembleError):
        ensemble_distribution([], 1, params, None, 0, edges)
    too_fast = [GaussianPacket(0.0, 9.0)]
    with pytest.raises(EnsembleError):
        ensemble_distribution(too_fast, 1, params, None, 0, edges, n=256, wells=4, steps_per_cycle=256)
