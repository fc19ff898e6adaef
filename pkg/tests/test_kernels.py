import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slowmo import kernels

KAPPA, EPS = 1.2, 0.2
H = 2 * math.pi / 256


def _cloud(n=64, seed=3):
    r = np.random.default_rng(seed)
    return r.uniform(-math.pi, math.pi, n), r.normal(0.0, 1.0, n)


def _run(backend, **kw):
    q, p = _cloud()
    with kernels.use_backend(backend):
        flags = kernels.leapfrog_ensemble(q, p, 0.3, H, 300, KAPPA, EPS, 0.0, **kw)
    return q, p, flags


def test_backends_agree_plain():
    a, b = _run("numba"), _run("numpy")
    assert np.max(np.abs(a[0] - b[0])) < 1e-11
    assert np.max(np.abs(a[1] - b[1])) < 1e-11


def test_backends_agree_effective_with_jumps():
    n = 64
    ref = 0.9 + 0.1 * np.sin(np.linspace(0, 2 * math.pi, 512, endpoint=False))
    sign = np.resize(np.array([0, 1, -1], dtype=np.int8), n)
    ptr = np.arange(0, 2 * n + 1, 2, dtype=np.int64)
    jt = np.tile([0.31 + 2.5 * H, 0.3 + 100.5 * H], n)
    jdp = np.tile([0.25, -0.1], n)
    kw = dict(sign=sign, ref=ref, ref_t0=0.3, comp=math.exp(-0.0625), xi=1.0, jump_ptr=ptr, jump_t=jt, jump_dp=jdp)
    a, b = _run("numba", **kw), _run("numpy", **kw)
    assert np.array_equal(a[2], b[2])
    ok = a[2] == kernels.OK
    assert ok.sum() > n // 2
    assert np.max(np.abs(a[1][ok] - b[1][ok])) < 1e-10


def test_use_backend_restores_and_rejects():
    before = kernels.backend()
    with kernels.use_backend("numpy"):
        assert kernels.backend() == "numpy"
    assert kernels.backend() == before
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_equilibrium_is_exact(each_backend):
    q, p = np.zeros(3), np.zeros(3)
    kernels.leapfrog_ensemble(q, p, 0.0, H, 1000, KAPPA, EPS, 0.0)
    assert not q.any() and not p.any()


def test_pcap_flags_and_freezes(each_backend):
    q, p = np.array([0.0, 0.0]), np.array([0.1, 5.0])
    flags = kernels.leapfrog_ensemble(q, p, 0.0, H, 50, KAPPA, EPS, 0.0, pcap=3.0)
    assert flags.tolist() == [kernels.OK, kernels.OVERFLOW]
    # frozen right after the step that crossed the cap
    q1, p1 = np.zeros(1), np.array([5.0])
    kernels.leapfrog_ensemble(q1, p1, 0.0, H, 1, KAPPA, EPS, 0.0)
    assert (q[1], p[1]) == (q1[0], p1[0])


def test_nonfinite_is_flagged(each_backend):
    # a steep effective factor far from the reference blows up quickly
    q, p = np.array([1.0]), np.array([40.0])
    flags = kernels.leapfrog_ensemble(
        q, p, 0.0, H, 400, KAPPA, EPS, 0.0, sign=np.ones(1, np.int8), ref=np.zeros(1), comp=1.0, xi=0.01
    )
    assert flags[0] != kernels.OK


def test_jump_applied_once_at_its_time(each_backend):
    q, p = np.zeros(1), np.zeros(1)
    ptr = np.array([0, 1])
    kernels.leapfrog_ensemble(q, p, 0.0, H, 10, 1e-300, 0.0, 0.0, jump_ptr=ptr, jump_t=np.array([3.5 * H]), jump_dp=np.array([0.5]))
    # free flight: 0.5 for the remaining 6.5 steps
    assert p[0] == pytest.approx(0.5, abs=1e-15)
    assert q[0] == pytest.approx(0.5 * 6.5 * H, rel=1e-12)


def test_record_orbit_matches_ensemble(each_backend):
    qe, pe, qs, ps = kernels.record_orbit(0.2, 0.9, 0.0, H, 256, KAPPA, EPS, 0.0)
    q, p = np.array([0.2]), np.array([0.9])
    kernels.leapfrog_ensemble(q, p, 0.0, H, 256, KAPPA, EPS, 0.0)
    assert (qe, pe) == pytest.approx((q[0], p[0]), abs=1e-13)
    assert qs.shape == ps.shape == (512,)
    assert (qs[0], ps[0]) == (0.2, 0.9)


@given(st.floats(-50, 50, allow_nan=False))
def test_sinhc_array_matches_scalar(x):
    assert kernels.sinhc_array(np.array([x]))[0] == pytest.approx(kernels.sinhc(x), rel=1e-14)


def test_sinhc_continuous_at_branch():
    lo = np.nextafter(kernels.SMALL_ARG, 0)
    hi = kernels.SMALL_ARG
    assert abs(kernels.sinhc(lo) - kernels.sinhc(hi)) < 1e-15
    assert kernels.sinhc(1e-8) == pytest.approx(1 + 1e-16 / 6, abs=1e-15)
    assert kernels.sinhc(0.0) == 1.0


def test_potential_kick_backends(rng):
    psi = rng.normal(size=512) + 1j * rng.normal(size=512)
    cosq = np.cos(np.linspace(-math.pi, math.pi, 512, endpoint=False))
    a, b = psi.copy(), psi.copy()
    with kernels.use_backend("numba"):
        kernels.potential_kick(a, cosq, 0.37)
    with kernels.use_backend("numpy"):
        kernels.potential_kick(b, cosq, 0.37)
    assert np.max(np.abs(a - b)) < 1e-14
    assert np.allclose(np.abs(a), np.abs(psi), atol=1e-14)
