"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--particles N] [--steps S] [--repeat R]

Prints best-of-R wall time per backend and the largest difference between
their results.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from slowmo import kernels


def _best(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_leapfrog(n, steps, repeat, effective=False):
    rng = np.random.default_rng(0)
    q0 = rng.uniform(-math.pi, math.pi, n)
    p0 = rng.normal(0.0, 0.5, n)
    kw = {}
    if effective:
        # particles inside the upper side island, as in a modified ensemble
        q0 = rng.normal(0.0, 0.3, n)
        p0 = rng.normal(0.9, 0.1, n)
        kw = dict(sign=np.ones(n, dtype=np.int8), ref=np.full(64, 0.9), comp=math.exp(-0.0625), xi=1.0)

    def run():
        q, p = q0.copy(), p0.copy()
        kernels.leapfrog_ensemble(q, p, 0.0, 2 * math.pi / 2048, steps, 1.2, 0.2, 0.0, **kw)
        return q, p

    rows = {}
    for name in kernels.BACKENDS:
        with kernels.use_backend(name):
            run()  # compile / warm up
            rows[name] = _best(run, repeat)
    return rows


def bench_kick(n, calls, repeat):
    q = np.linspace(-math.pi, math.pi, n, endpoint=False)
    cosq = np.cos(q)
    base = np.exp(-q * q).astype(complex)

    def run():
        psi = base.copy()
        for _ in range(calls):
            kernels.potential_kick(psi, cosq, 0.01)
        return psi

    rows = {}
    for name in kernels.BACKENDS:
        with kernels.use_backend(name):
            run()
            rows[name] = _best(run, repeat)
    return rows


def report(title, rows):
    (tn, on), (tp, op) = rows["numba"], rows["numpy"]
    outs_n = on if isinstance(on, tuple) else (on,)
    outs_p = op if isinstance(op, tuple) else (op,)
    diff = max(float(np.max(np.abs(a - b))) for a, b in zip(outs_n, outs_p))
    print(f"{title:<34} numba {tn * 1e3:9.2f} ms   numpy {tp * 1e3:9.2f} ms   speedup {tp / tn:6.2f}x   max|diff| {diff:.2e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--particles", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    report(f"leapfrog {args.particles} x {args.steps}", bench_leapfrog(args.particles, args.steps, args.repeat))
    report("leapfrog (effective force)", bench_leapfrog(args.particles, args.steps, args.repeat, effective=True))
    report("potential kick 1024 x 2048", bench_kick(1024, 2048, args.repeat))
    for n in (10, 100, 1000, 10000):
        report(f"leapfrog {n} x {args.steps}", bench_leapfrog(n, args.steps, args.repeat))


if __name__ == "__main__":
    main()
