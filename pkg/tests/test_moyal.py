import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slowmo.classical import ClassicalEnsemble, evolve_classical_ensemble, stroboscopic_map
from slowmo.core import Params, PhasePoint, WignerGridState, gaussian_state
from slowmo.errors import FixedPointError
from slowmo.moyal import (
    EffectiveContext,
    MembershipRegion,
    ReferenceOrbit,
    _dp_power,
    classify_members,
    effective_force,
    evolve_modified_ensemble,
    find_modified_resonance,
    liouville_rhs,
    modified_stroboscopic_map,
    moyal_series_rhs,
    moyal_shift_rhs,
    quantum_term,
    record_reference,
    shift_momentum,
    veff_factor,
)

Q = np.linspace(-math.pi, math.pi, 256, endpoint=False)
P = np.linspace(-4.0, 4.0, 257)[:-1]


def _state(q0=0.3, p0=0.8, xi=1.0, kbar=0.25):
    return gaussian_state(Q, P, q0, p0, xi, kbar, 2 * math.pi)


def test_compression_examples():
    ctx = EffectiveContext(0.7, 1.0, 0.25)
    assert veff_factor(0.7, ctx) == pytest.approx(math.exp(-0.0625), abs=1e-12)
    assert veff_factor(0.7, ctx) == pytest.approx(0.9394131, abs=1e-7)
    assert veff_factor(0.7, EffectiveContext(0.7, 1.0, 1e-9)) == pytest.approx(1.0, abs=1e-9)
    assert veff_factor(0.7, EffectiveContext(0.7, 1.0, 0.35)) < veff_factor(0.7, ctx)


def test_factor_continuity_near_center():
    ctx = EffectiveContext(0.0, 1.0, 0.25)
    x = 1e-8
    assert veff_factor(x, ctx) == pytest.approx(ctx.compression * (1 + x * x / 6), abs=1e-15)
    below = np.nextafter(1e-4, 0)
    assert abs(veff_factor(below, ctx) - veff_factor(1e-4, ctx)) < 1e-15


def test_effective_force_examples(params):
    ctx = EffectiveContext(1.0, 1.0, 0.25)
    assert np.all(effective_force(0.0, np.linspace(-2, 2, 9), 0.3, params, ctx) == 0.0)
    classical = -params.amplitude(0.3) * math.sin(0.8)
    assert effective_force(0.8, 1.0, 0.3, params, ctx) == pytest.approx(classical * math.exp(-0.0625), rel=1e-14)


def test_context_validation_and_reflection():
    with pytest.raises(ValueError):
        EffectiveContext(0.0, 0.0, 0.25)
    with pytest.raises(ValueError):
        EffectiveContext(float("inf"), 1.0, 0.25)
    orbit = ReferenceOrbit(0.0, np.array([1.0, 1.2]), np.array([0.0, 0.1]))
    ctx = EffectiveContext(1.1, 1.0, 0.25, orbit)
    assert ctx.reflected().reference_momentum(0.0) == -1.0
    assert ctx.reference_momentum(math.pi) == pytest.approx(1.2)
    assert ctx.frozen().reference_momentum(math.pi) == 1.1


# -- Wigner right-hand sides -----------------------------------------------


def test_order_one_is_liouville(params):
    s = _state()
    lv = liouville_rhs(s, 0.4, params)
    assert np.max(np.abs(moyal_series_rhs(s, 0.4, params, 1) - lv)) < 1e-10
    # explicit classical bracket with spectral derivatives
    kq = 2 * math.pi * np.fft.fftfreq(Q.size, d=s.dq)
    dq = np.fft.ifft(1j * kq[:, None] * np.fft.fft(s.W, axis=0), axis=0).real
    expected = -P[None, :] * dq + params.amplitude(0.4) * np.sin(Q)[:, None] * _dp_power(s, 1)
    assert np.max(np.abs(lv - expected)) < 1e-10


def test_series_converged_and_matches_shift(params):
    s = _state()
    s15 = moyal_series_rhs(s, 0.3, params, 15)
    s13 = moyal_series_rhs(s, 0.3, params, 13)
    scale = np.max(np.abs(s15))
    assert np.max(np.abs(s15 - s13)) / scale < 1e-8
    assert np.max(np.abs(moyal_shift_rhs(s, 0.3, params) - s15)) / scale < 1e-6


@settings(max_examples=8, deadline=None)
@given(q0=st.floats(-2, 2), p0=st.floats(-1.0, 1.0), xi=st.floats(0.5, 1.5), t=st.floats(0, 6.3))
def test_shift_matches_series_on_gaussians(params, q0, p0, xi, t):
    # W must vanish at the ends of the momentum range: |p0| + 6 sigma_p < 4
    s = _state(q0, p0, xi)
    s15 = moyal_series_rhs(s, t, params, 15)
    assert np.max(np.abs(moyal_shift_rhs(s, t, params) - s15)) / np.max(np.abs(s15)) < 1e-6


def test_order_must_be_odd(params):
    with pytest.raises(ValueError):
        moyal_series_rhs(_state(), 0.0, params, 2)


def test_parity_class_preserved(params):
    a = _state(0.4, 0.6)
    odd = WignerGridState(Q, P, a.W - _mirror(a.W), a.q_period)
    rhs = moyal_shift_rhs(odd, 0.0, params)
    assert np.max(np.abs(rhs + _mirror(rhs))) < 1e-12


def _mirror(w):
    # (q, p) -> (-q, -p); q = -pi is its own image on the periodic grid
    iq = (-np.arange(Q.size)) % Q.size
    out = np.zeros_like(w)
    out[:, 1:] = w[iq][:, 1:][:, ::-1]
    return out


def test_spectral_shift_matches_roll():
    s = _state()
    exact = shift_momentum(s, 4 * s.dp)
    spectral = shift_momentum(s, 4 * s.dp * (1 + 1e-7))
    assert np.max(np.abs(exact - spectral)) < 1e-5


def test_small_kbar_limit_is_liouville(params):
    errs = []
    for kb in (0.1, 0.05, 0.025):
        p = params.with_(kbar=kb)
        s = _state(kbar=0.25)
        errs.append(np.max(np.abs(moyal_shift_rhs(s, 0.2, p) - liouville_rhs(s, 0.2, p))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_quotient_reproduces_effective_potential(params):
    s = _state(0.3, 0.8, 1.0)
    ratio_num = quantum_term(s, 0.3, params)
    dwdp = _dp_power(s, 1)
    support = np.abs(dwdp) > 1e-3 * np.abs(dwdp).max()
    grad_veff = params.amplitude(0.3) * np.sin(Q)[:, None] * veff_factor(P, EffectiveContext(0.8, 1.0, 0.25))[None, :]
    err = np.abs(ratio_num[support] / dwdp[support] - grad_veff[support])
    assert np.max(err) / np.max(np.abs(grad_veff[support])) < 1e-6


# -- modified resonance --------------------------------------------------------


def test_small_kbar_map_matches_original(params):
    # the factor tends to 1 at the packet centre, so follow the orbit's own reference
    x = PhasePoint(0.2, 1.0)
    orig = stroboscopic_map(x, 0, params)
    orbit = record_reference(x, params)
    errs = []
    for kb in (1e-2, 1e-3, 1e-4):
        ctx = EffectiveContext(orbit.mean(), 1.0, kb, orbit)
        y = modified_stroboscopic_map(x, 0, params, ctx)
        errs.append(math.hypot(y.q - orig.q, y.p - orig.p))
    assert errs[-1] < 1e-3
    assert errs[0] / errs[1] > 5 and errs[1] / errs[2] > 5


def test_modified_resonance_properties(params, modified_025, side_fixed_point):
    res = modified_025
    assert res.p < side_fixed_point.point.p
    assert abs(res.q) < 1e-6 and res.fixed_point.stable
    assert abs(res.history[-1] - res.history[-2]) < 1e-8
    assert res.ctx.reference is not None and res.ctx.kbar == 0.25
    # the converged context reproduces the fixed point it was built from
    y = modified_stroboscopic_map(res.fixed_point.point, 0, params, res.ctx)
    assert abs(y.p - res.p) < 1e-9


def test_modified_resonance_monotone_in_kbar(params):
    ps = [find_modified_resonance(PhasePoint(0, 1), params, kbar=k).p for k in (0.001, 0.15, 0.25, 0.35)]
    assert all(a > b for a, b in zip(ps, ps[1:]))
    assert ps[0] == pytest.approx(1.0886, abs=2e-3)


def test_frozen_reference_fails_loudly(params):
    with pytest.raises(FixedPointError):
        find_modified_resonance(PhasePoint(0, 1), params, kbar=0.25, reference="frozen")


def test_resonance_argument_checks(params):
    with pytest.raises(ValueError):
        find_modified_resonance(PhasePoint(0, 1), params, reference="other")
    with pytest.raises(ValueError):
        find_modified_resonance(PhasePoint(0, 1), params, damping=0.0)


def test_reference_orbit_is_periodic(params, side_fixed_point):
    orbit = record_reference(side_fixed_point.point, params, substeps=512)
    assert orbit.p.size == 1024
    assert orbit.momentum_at(2 * math.pi) == pytest.approx(orbit.p[0], abs=1e-12)
    with pytest.raises(ValueError):
        orbit.blend(ReferenceOrbit(1.0, orbit.p, orbit.q), 0.5)


# -- modified ensembles ----------------------------------------------------------


def test_membership_regions():
    r = MembershipRegion(PhasePoint(3.0, 1.0), 1.0, 0.35)
    assert r.contains(np.array([-3.0, 3.0, 0.0]), np.array([1.0, 1.4, 1.0])).tolist() == [True, False, False]
    ens = ClassicalEnsemble.from_points([PhasePoint(0, 1), PhasePoint(0, -1), PhasePoint(0, 0)])
    sign = classify_members(ens, [(1, MembershipRegion(PhasePoint(0, 1))), (-1, MembershipRegion(PhasePoint(0, -1)))])
    assert sign.tolist() == [1, -1, 0]


def test_modified_ensemble_reductions(params, static_params, modified_025):
    cloud = ClassicalEnsemble.cloud(300, 0.3, 2)
    plain = evolve_classical_ensemble(cloud, 1, params)[-1]
    empty, sign = evolve_modified_ensemble(cloud, 1, params, modified_025, half_q=1e-9, half_p=1e-9)
    assert not sign.any() and empty[-1].p.tobytes() == plain.p.tobytes()
    flat, sign = evolve_modified_ensemble(cloud, 1, static_params, modified_025)
    assert not sign.any()
    assert flat[-1].p.tobytes() == evolve_classical_ensemble(cloud, 1, static_params)[-1].p.tobytes()


def test_modified_members_slow_down(params, modified_025):
    pts = [PhasePoint(0.0, modified_025.p + d) for d in (-0.05, 0.0, 0.05)]
    ens = ClassicalEnsemble.from_points(pts + [x.reflected() for x in pts])
    snaps, sign = evolve_modified_ensemble(ens, 6, params, modified_025)
    assert sign.tolist() == [1, 1, 1, -1, -1, -1]
    mean_upper = np.mean([s.p[:3].mean() for s in snaps])
    assert mean_upper == pytest.approx(modified_025.p, abs=0.05)
    assert np.allclose(snaps[-1].p[:3], -snaps[-1].p[3:], atol=1e-10)
