"""Hot inner loops.

Every kernel exists twice: a numba ``@njit`` version (per-particle scalar
loops) and a vectorised pure-numpy version.  The numba path is used when numba
imports and ``SLOWMO_NUMBA`` is not set to ``0``; :func:`use_backend` switches
at runtime (benchmarks and cross-checks).

Leapfrog convention (kick-drift-kick over a step of length ``s`` starting at
``tc``): each half-kick uses the modulation amplitude at the temporal midpoint
of the half step (``tc + s/4`` and ``tc + 3s/4``).  For particles following
the effective potential the momentum-dependent factor is evaluated with the
pre-kick momentum against the reference momentum at ``tc`` and ``tc + s/2``.
"""
from __future__ import annotations

import contextlib
import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")

#: particle status flags
OK, OVERFLOW, NONFINITE = 0, 1, 2

SMALL_ARG = 1e-4
TWO_PI = 2.0 * math.pi


def _default_backend() -> str:
    flag = os.environ.get("SLOWMO_NUMBA", "1").strip().lower()
    if not HAVE_NUMBA or flag in ("0", "false", "no", "off"):
        return "numpy"
    return "numba"


_backend = _default_backend()


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


# ---------------------------------------------------------------------------
# scalar helpers shared by the numba kernels


def sinhc(x: float) -> float:
    """sinh(x)/x with a Taylor branch for |x| < 1e-4."""
    if abs(x) < SMALL_ARG:
        x2 = x * x
        return 1.0 + x2 / 6.0 + x2 * x2 / 120.0
    return math.sinh(x) / x


def _ref_at(ref, ref_t0, t):
    m = ref.size
    u = ((t - ref_t0) % TWO_PI) * (m / TWO_PI)
    j = int(math.floor(u))
    frac = u - j
    j0 = j % m
    j1 = (j0 + 1) % m
    return ref[j0] + frac * (ref[j1] - ref[j0])


def _kdk_amp(q, p, tc, s, a1, a2, sgn, ref, ref_t0, comp, xi):
    f = 1.0
    if sgn != 0:
        f = comp * _sinhc((p - sgn * _ref_at_j(ref, ref_t0, tc)) / xi)
    p = p - 0.5 * s * a1 * math.sin(q) * f
    q = q + s * p
    if sgn != 0:
        f = comp * _sinhc((p - sgn * _ref_at_j(ref, ref_t0, tc + 0.5 * s)) / xi)
    p = p - 0.5 * s * a2 * math.sin(q) * f
    return q, p


def _kdk(q, p, tc, s, kappa, eps, phase, sgn, ref, ref_t0, comp, xi):
    a1 = kappa * (1.0 - 2.0 * eps * math.cos(tc + 0.25 * s - phase))
    a2 = kappa * (1.0 - 2.0 * eps * math.cos(tc + 0.75 * s - phase))
    return _kdk_amp_j(q, p, tc, s, a1, a2, sgn, ref, ref_t0, comp, xi)


def _leapfrog_scalar_loop(
    q, p, t0, h, nsteps, kappa, eps, phase, sign, ref, ref_t0, comp, xi,
    jump_ptr, jump_t, jump_dp, pcap, flags,
):
    # amplitudes are shared by all particles on the regular step grid
    amp = np.empty((nsteps, 2))
    for k in range(nsteps):
        t = t0 + k * h
        amp[k, 0] = kappa * (1.0 - 2.0 * eps * math.cos(t + 0.25 * h - phase))
        amp[k, 1] = kappa * (1.0 - 2.0 * eps * math.cos(t + 0.75 * h - phase))
    for i in range(q.size):
        if flags[i] != OK:
            continue
        qi = q[i]
        pi = p[i]
        sgn = sign[i]
        jn = jump_ptr[i]
        jend = jump_ptr[i + 1]
        for k in range(nsteps):
            t = t0 + k * h
            t_next = t0 + (k + 1) * h
            tc = t
            while jn < jend and jump_t[jn] < t_next:
                tj = jump_t[jn]
                if tj > tc:
                    qi, pi = _kdk_j(qi, pi, tc, tj - tc, kappa, eps, phase, sgn, ref, ref_t0, comp, xi)
                    tc = tj
                pi += jump_dp[jn]
                jn += 1
            if tc == t:
                qi, pi = _kdk_amp_j(qi, pi, t, h, amp[k, 0], amp[k, 1], sgn, ref, ref_t0, comp, xi)
            else:
                qi, pi = _kdk_j(qi, pi, tc, t_next - tc, kappa, eps, phase, sgn, ref, ref_t0, comp, xi)
            if not (math.isfinite(qi) and math.isfinite(pi)):
                flags[i] = NONFINITE
                break
            if abs(pi) > pcap:
                flags[i] = OVERFLOW
                break
        q[i] = qi
        p[i] = pi


def _record_scalar(q, p, t0, h, nsteps, kappa, eps, phase, sgn, ref, ref_t0, comp, xi, out_q, out_p):
    for k in range(nsteps):
        t = t0 + k * h
        out_q[2 * k] = q
        out_p[2 * k] = p
        a = kappa * (1.0 - 2.0 * eps * math.cos(t + 0.25 * h - phase))
        f = 1.0
        if sgn != 0:
            f = comp * _sinhc((p - sgn * _ref_at_j(ref, ref_t0, t)) / xi)
        p = p - 0.5 * h * a * math.sin(q) * f
        q = q + h * p
        out_q[2 * k + 1] = q - 0.5 * h * p
        out_p[2 * k + 1] = p
        a = kappa * (1.0 - 2.0 * eps * math.cos(t + 0.75 * h - phase))
        if sgn != 0:
            f = comp * _sinhc((p - sgn * _ref_at_j(ref, ref_t0, t + 0.5 * h)) / xi)
        p = p - 0.5 * h * a * math.sin(q) * f
    return q, p


def _potential_kick_loop(psi, cosq, c):
    for j in range(psi.size):
        ph = c * cosq[j]
        psi[j] = psi[j] * complex(math.cos(ph), math.sin(ph))


if HAVE_NUMBA:
    _sinhc = njit(cache=True, inline="always")(sinhc)
    _ref_at_j = njit(cache=True, inline="always")(_ref_at)
    _kdk_amp_j = njit(cache=True, inline="always")(_kdk_amp)
    _kdk_j = njit(cache=True)(_kdk)
    _leapfrog_nb = njit(cache=True)(_leapfrog_scalar_loop)
    _record_nb = njit(cache=True)(_record_scalar)
    _potential_kick_nb = njit(cache=True)(_potential_kick_loop)
else:  # pragma: no cover
    _sinhc = sinhc
    _ref_at_j = _ref_at
    _kdk_amp_j = _kdk_amp
    _kdk_j = _kdk
    _record_nb = None


# ---------------------------------------------------------------------------
# numpy versions


def sinhc_array(x):
    x = np.asarray(x, dtype=float)
    x2 = x * x
    small = np.abs(x) < SMALL_ARG
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x2 / 6.0 + x2 * x2 / 120.0, np.sinh(safe) / safe)


def _ref_at_array(ref, ref_t0, t):
    m = ref.size
    u = np.mod(np.asarray(t) - ref_t0, TWO_PI) * (m / TWO_PI)
    j = np.floor(u)
    frac = u - j
    j0 = j.astype(np.int64) % m
    j1 = (j0 + 1) % m
    return ref[j0] + frac * (ref[j1] - ref[j0])


def _kdk_array(q, p, tc, s, kappa, eps, phase, sign, ref, ref_t0, comp, xi, eff):
    a = kappa * (1.0 - 2.0 * eps * np.cos(tc + 0.25 * s - phase))
    f = 1.0
    if eff:
        f = np.where(sign != 0, comp * sinhc_array((p - sign * _ref_at_array(ref, ref_t0, tc)) / xi), 1.0)
    p = p - 0.5 * s * a * np.sin(q) * f
    q = q + s * p
    a = kappa * (1.0 - 2.0 * eps * np.cos(tc + 0.75 * s - phase))
    if eff:
        f = np.where(
            sign != 0, comp * sinhc_array((p - sign * _ref_at_array(ref, ref_t0, tc + 0.5 * s)) / xi), 1.0
        )
    p = p - 0.5 * s * a * np.sin(q) * f
    return q, p


def _leapfrog_np(
    q, p, t0, h, nsteps, kappa, eps, phase, sign, ref, ref_t0, comp, xi,
    jump_ptr, jump_t, jump_dp, pcap, flags,
):
    live = np.nonzero(flags == OK)[0]
    qa, pa, sa = q[live], p[live], sign[live].astype(float)
    eff = bool(np.any(sa != 0))
    nxt = jump_ptr[:-1][live].copy()
    end = jump_ptr[1:][live]
    has_jumps = jump_t.size > 0 and bool(np.any(end > nxt))
    fl = np.zeros(live.size, dtype=flags.dtype)
    for k in range(nsteps):
        t = t0 + k * h
        t_next = t0 + (k + 1) * h
        run = fl == OK
        if has_jumps:
            tc = np.full(live.size, t)
            while True:
                waiting = run & (nxt < end)
                tj = np.where(waiting, jump_t[np.minimum(nxt, jump_t.size - 1)], np.inf)
                due = waiting & (tj < t_next)
                if not due.any():
                    break
                idx = np.nonzero(due)[0]
                move = idx[tj[idx] > tc[idx]]
                if move.size:
                    qa[move], pa[move] = _kdk_array(
                        qa[move], pa[move], tc[move], tj[move] - tc[move],
                        kappa, eps, phase, sa[move], ref, ref_t0, comp, xi, eff,
                    )
                    tc[move] = tj[move]
                pa[idx] += jump_dp[nxt[idx]]
                nxt[idx] += 1
            split = run & (tc != t)
            plain = run & ~split
            if split.any():
                i = np.nonzero(split)[0]
                qa[i], pa[i] = _kdk_array(
                    qa[i], pa[i], tc[i], t_next - tc[i], kappa, eps, phase, sa[i], ref, ref_t0, comp, xi, eff
                )
        else:
            plain = run
        if plain.all():
            qa, pa = _kdk_array(qa, pa, t, h, kappa, eps, phase, sa, ref, ref_t0, comp, xi, eff)
        elif plain.any():
            i = np.nonzero(plain)[0]
            qa[i], pa[i] = _kdk_array(qa[i], pa[i], t, h, kappa, eps, phase, sa[i], ref, ref_t0, comp, xi, eff)
        bad = run & ~(np.isfinite(qa) & np.isfinite(pa))
        over = run & ~bad & (np.abs(pa) > pcap)
        fl[bad] = NONFINITE
        fl[over] = OVERFLOW
    q[live], p[live] = qa, pa
    flags[live] = fl


def _record_np(q, p, t0, h, nsteps, kappa, eps, phase, sgn, ref, ref_t0, comp, xi, out_q, out_p):
    for k in range(nsteps):
        t = t0 + k * h
        out_q[2 * k] = q
        out_p[2 * k] = p
        a = kappa * (1.0 - 2.0 * eps * math.cos(t + 0.25 * h - phase))
        f = comp * sinhc((p - sgn * _ref_at(ref, ref_t0, t)) / xi) if sgn != 0 else 1.0
        p = p - 0.5 * h * a * math.sin(q) * f
        q = q + h * p
        out_q[2 * k + 1] = q - 0.5 * h * p
        out_p[2 * k + 1] = p
        a = kappa * (1.0 - 2.0 * eps * math.cos(t + 0.75 * h - phase))
        f = comp * sinhc((p - sgn * _ref_at(ref, ref_t0, t + 0.5 * h)) / xi) if sgn != 0 else 1.0
        p = p - 0.5 * h * a * math.sin(q) * f
    return q, p


# ---------------------------------------------------------------------------
# public dispatchers

_NO_REF = np.zeros(1)


def leapfrog_ensemble(
    q, p, t0, h, nsteps, kappa, eps, phase, *,
    sign=None, ref=None, ref_t0=0.0, comp=1.0, xi=1.0,
    jump_ptr=None, jump_t=None, jump_dp=None, pcap=math.inf, flags=None,
):
    """Advance particles in place by ``nsteps`` leapfrog steps of length ``h``.

    ``sign[i]`` selects the force: 0 for the original potential, +1/-1 for the
    effective potential about the reference momentum ``+ref(t)``/``-ref(t)``;
    ``ref`` tabulates one period of reference momenta on a uniform time grid
    starting at ``ref_t0``.  Recoil kicks ``jump_dp`` are applied at times
    ``jump_t`` (CSR layout via ``jump_ptr``).  Particles whose momentum leaves
    ``|p| <= pcap`` or becomes non-finite are frozen and flagged.
    Returns the flags array.
    """
    n = q.size
    sign = np.zeros(n, dtype=np.int8) if sign is None else np.ascontiguousarray(sign, dtype=np.int8)
    ref = _NO_REF if ref is None else np.ascontiguousarray(ref, dtype=float)
    if jump_ptr is None:
        jump_ptr = np.zeros(n + 1, dtype=np.int64)
        jump_t = np.zeros(0)
        jump_dp = np.zeros(0)
    flags = np.zeros(n, dtype=np.int8) if flags is None else flags
    args = (
        q, p, float(t0), float(h), int(nsteps), float(kappa), float(eps), float(phase),
        sign, ref, float(ref_t0), float(comp), float(xi),
        np.ascontiguousarray(jump_ptr, dtype=np.int64), np.ascontiguousarray(jump_t, dtype=float),
        np.ascontiguousarray(jump_dp, dtype=float), float(pcap), flags,
    )
    if _backend == "numba":
        _leapfrog_nb(*args)
    else:
        # escaping particles are caught by the finiteness check and flagged
        with np.errstate(over="ignore", invalid="ignore"):
            _leapfrog_np(*args)
    return flags


def record_orbit(q, p, t0, h, nsteps, kappa, eps, phase, *, sgn=0, ref=None, ref_t0=0.0, comp=1.0, xi=1.0):
    """Single trajectory; returns (q_end, p_end, q_samples, p_samples).

    Samples are taken at every half-kick evaluation, i.e. at times
    ``t0 + j h / 2`` for ``j = 0 .. 2 nsteps - 1``; the momentum sample is the
    one the effective-force factor sees, so a recorded orbit can serve as its
    own reference table.
    """
    ref = _NO_REF if ref is None else np.ascontiguousarray(ref, dtype=float)
    out_q = np.empty(2 * nsteps)
    out_p = np.empty(2 * nsteps)
    args = (
        float(q), float(p), float(t0), float(h), int(nsteps), float(kappa), float(eps), float(phase),
        int(sgn), ref, float(ref_t0), float(comp), float(xi), out_q, out_p,
    )
    if _backend == "numba":
        qe, pe = _record_nb(*args)
    else:
        qe, pe = _record_np(*args)
    return qe, pe, out_q, out_p


def potential_kick(psi: np.ndarray, cosq: np.ndarray, c: float) -> None:
    """In place: psi *= exp(i c cos q)."""
    if _backend == "numba":
        _potential_kick_nb(psi, cosq, float(c))
    else:
        psi *= np.exp(1j * c * cosq)
