import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from slowmo.core import (
    GaussianPacket,
    Modulation,
    Params,
    PhasePoint,
    SpontaneousSettings,
    build_grid,
    check_band_edge,
    classical_histogram,
    fold,
    from_momentum,
    gaussian_wigner,
    init_packet,
    momentum_representation,
    moments,
    quantum_histogram,
    uniform_edges,
    wigner_of_wavefunction,
)
from slowmo.core.histogram import density_histogram, particle_counts
from slowmo.errors import BandEdgeError, GridError, HistogramRangeError

KB = 0.25


def test_grid_spacings():
    g = build_grid(1024, 4)
    assert g.dq == pytest.approx(8 * math.pi / 1024, rel=1e-15)
    assert g.dp(0.25) == pytest.approx(0.0625, rel=1e-15)
    assert np.allclose(np.sort(g.fft_momenta(KB)), g.momenta(KB), atol=1e-12)


@pytest.mark.parametrize("n, wells", [(100, 4), (32, 1), (1024, 0)])
def test_grid_rejects_bad_shapes(n, wells):
    with pytest.raises(GridError):
        build_grid(n, wells)


def test_params_validation():
    with pytest.raises(ValueError):
        Params(kappa=0.0)
    with pytest.raises(ValueError):
        Params(epsilon=0.5)
    with pytest.raises(ValueError):
        Params(kbar=-1.0)
    with pytest.raises(ValueError):
        SpontaneousSettings(rate=1.0)  # recoil model left off
    assert Params(modulation="none").eps == 0.0
    assert Params(modulation="sin").snapshot_time(2) == pytest.approx(math.pi / 2 + 4 * math.pi)


def test_amplitude_sin_is_shifted_cos():
    t = np.linspace(0, 7, 50)
    cos = Params(modulation=Modulation.COS)
    sin = Params(modulation=Modulation.SIN)
    assert np.allclose(sin.amplitude(t + math.pi / 2), cos.amplitude(t), atol=1e-14)
    assert np.allclose(sin.amplitude(t), 1.2 * (1 - 0.4 * np.sin(t)), atol=1e-14)


@given(st.floats(-1e4, 1e4, allow_nan=False))
def test_fold_range(q):
    f = fold(q)
    assert -math.pi <= f < math.pi
    assert math.isclose(math.cos(f), math.cos(q), abs_tol=1e-9)


def test_phase_point_rejects_nan():
    with pytest.raises(ValueError):
        PhasePoint(float("nan"), 0.0)


def test_packet_examples():
    psi = init_packet(GaussianPacket(0.0, 1.03, 1.0), build_grid(1024, 4), KB)
    mean_p, var_p, _, var_q = moments(psi)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert var_p == pytest.approx(0.125, abs=1e-6)
    assert mean_p == pytest.approx(1.03, abs=1e-8)
    assert var_q * var_p == pytest.approx(KB**2 / 4, abs=1e-6)


def test_packet_width_limits():
    g = build_grid(64, 1)
    with pytest.raises(GridError):
        init_packet(GaussianPacket(xi=50.0), g, KB)
    with pytest.raises(GridError):
        init_packet(GaussianPacket(xi=1e-3), g, KB)


@settings(max_examples=25, deadline=None)
@given(
    q0=st.floats(-3.0, 3.0),
    p0=st.floats(-2.0, 2.0),
    xi=st.floats(0.3, 3.0),
)
def test_minimum_uncertainty_and_round_trip(q0, p0, xi):
    g = build_grid(1024, 4)
    psi = init_packet(GaussianPacket(q0, p0, xi), g, KB)
    mean_p, var_p, _, var_q = moments(psi)
    assert var_q * var_p == pytest.approx(KB**2 / 4, rel=1e-6)
    assert mean_p == pytest.approx(p0, abs=1e-8)
    back = from_momentum(momentum_representation(psi), g, KB)
    assert np.max(np.abs(back.amps - psi.amps)) < 1e-12


def test_plane_wave_occupies_one_bin():
    g = build_grid(256, 2)
    j = 17
    psi = from_momentum(np.zeros(256), g, KB).replace_amps(np.exp(1j * g.momenta(KB)[128 + j] * g.q / KB)).normalized()
    dens = psi.momentum_density() * g.dp(KB)
    assert np.argmax(dens) == 128 + j
    assert dens[128 + j] == pytest.approx(1.0, abs=1e-12)


def test_momentum_density_is_gaussian():
    g = build_grid(1024, 4)
    psi = init_packet(GaussianPacket(0.4, 0.7, 1.3), g, KB)
    p = g.momenta(KB)
    var_p = KB * 1.3 / 2
    expected = np.exp(-((p - 0.7) ** 2) / (2 * var_p)) / math.sqrt(2 * math.pi * var_p)
    assert np.max(np.abs(psi.momentum_density() - expected)) < 1e-10


def test_displacement_and_symmetric_superposition():
    g = build_grid(1024, 4)
    a = init_packet(GaussianPacket(0.0, 0.6), g, KB)
    shifted = a.replace_amps(a.amps * np.exp(1j * 0.25 * g.q / KB))
    assert moments(shifted)[0] - moments(a)[0] == pytest.approx(0.25, abs=1e-12)
    b = init_packet(GaussianPacket(0.0, -0.6), g, KB)
    assert moments(a.replace_amps(a.amps + b.amps).normalized())[0] == pytest.approx(0.0, abs=1e-8)


def test_band_edge_detection():
    g = build_grid(256, 1)
    edge = g.momenta(KB)[-3]
    psi = g.q * 0 + np.exp(1j * edge * g.q / KB)
    with pytest.raises(BandEdgeError):
        check_band_edge(from_momentum(np.zeros(256), g, KB).replace_amps(psi).normalized())


# -- histograms ----------------------------------------------------------------


def test_quantum_histogram_symmetric():
    g = build_grid(1024, 4)
    psi = init_packet(GaussianPacket(0.0, 0.0), g, KB)
    h = quantum_histogram(psi, uniform_edges(-3, 3, 256))
    assert np.max(np.abs(h.masses - h.masses[::-1])) < 1e-9
    assert h.masses.sum() == pytest.approx(1.0, abs=1e-12)


def test_two_packet_bimodal():
    g = build_grid(1024, 4)
    a = init_packet(GaussianPacket(0.0, 1.0), g, KB)
    b = init_packet(GaussianPacket(0.0, -1.0), g, KB)
    h = quantum_histogram(a.replace_amps(a.amps + b.amps).normalized(), uniform_edges(-3, 3, 256))
    left, right = h.masses[:128].sum(), h.masses[128:].sum()
    assert left == pytest.approx(right, abs=1e-9)
    assert h.masses[np.argmin(np.abs(h.centers))] < 0.1 * h.masses.max()  # coherent overlap 4 e^-4


def test_histogram_comb_mass_is_conserved():
    p = np.linspace(-2, 2, 81)
    w = np.exp(-p * p)
    w /= w.sum()
    h = density_histogram(p, w, uniform_edges(-3, 3, 37))
    assert h.masses.sum() == pytest.approx(1.0, abs=1e-14)
    assert h.mean() == pytest.approx(0.0, abs=1e-12)


def test_histogram_range_error():
    with pytest.raises(HistogramRangeError):
        classical_histogram(np.array([0.0, 5.0]), uniform_edges(-3, 3, 10))
    h = classical_histogram(np.array([0.0, 5.0]), uniform_edges(-3, 3, 10), max_outside=0.6)
    assert h.outside == 0.5


def test_particle_counts_edges():
    edges = uniform_edges(0, 1, 4)
    counts = particle_counts(np.array([0.0, 0.25, 0.999, 1.0, 1.1, -0.1]), edges)
    assert counts.tolist() == [1, 1, 0, 2]


def test_classical_histogram_matches_gaussian_cdf(rng):
    n = 100_000
    edges = uniform_edges(-3, 3, 256)
    h = classical_histogram(rng.normal(0.0, 0.5, n), edges)
    expected = np.diff(norm.cdf(edges, scale=0.5))
    expected /= expected.sum()
    sigma = np.sqrt(expected * (1 - expected) / n)
    assert np.all(np.abs(h.masses - expected) <= 4 * sigma + 1e-12)


# -- Wigner functions ----------------------------------------------------------


def _ring_oracle(w, g, q0, p0, xi):
    """Gaussian plus the interference term with its periodic image."""
    k = np.arange(-(g.n // 2), g.n // 2)
    half = g.length / 2
    return gaussian_wigner(w.q, w.p, q0, p0, xi, KB, g.length) + (
        (-1.0) ** k
    )[None, :] * gaussian_wigner(w.q, w.p, q0 + half, p0, xi, KB, g.length)


def test_wigner_of_gaussian_matches_closed_form():
    g = build_grid(512, 2)
    psi = init_packet(GaussianPacket(0.3, 0.5, 1.0), g, KB)
    w = wigner_of_wavefunction(psi)
    assert np.max(np.abs(w.W - _ring_oracle(w, g, 0.3, 0.5, 1.0))) < 1e-8


def _comb_marginal_error(w, psi):
    g = psi.grid
    k = np.arange(-(g.n // 2), g.n // 2)
    even = k % 2 == 0
    mm = w.momentum_marginal()
    comb = psi.momentum_density()[k[even] // 2 + g.n // 2] * g.dp(psi.kbar)
    return max(np.max(np.abs(mm[even] * w.dp - comb)), np.max(np.abs(mm[~even])))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_wigner_marginals_and_purity_random_state(seed):
    g = build_grid(256, 2)
    r = np.random.default_rng(seed)
    k = np.arange(-128, 128)
    phi = np.where(np.abs(k) < 32, r.normal(size=256) + 1j * r.normal(size=256), 0.0)
    psi = from_momentum(phi, g, KB).normalized()
    w = wigner_of_wavefunction(psi)
    assert np.max(np.abs(w.position_marginal() - psi.density())) < 1e-8
    assert _comb_marginal_error(w, psi) < 1e-8
    assert w.purity(KB) == pytest.approx(1.0, abs=1e-6)
    assert w.total() == pytest.approx(1.0, abs=1e-10)


def test_closed_form_purity():
    q = np.linspace(-math.pi, math.pi, 256, endpoint=False)
    p = np.linspace(-4, 4, 513)
    from slowmo.core import gaussian_state

    s = gaussian_state(q, p, 0.0, 0.5, 1.0, KB, 2 * math.pi)
    assert s.purity(KB) == pytest.approx(1.0, abs=1e-6)
    assert s.total() == pytest.approx(1.0, abs=1e-8)
