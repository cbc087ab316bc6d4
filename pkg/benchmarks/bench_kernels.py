"""Benchmark the jitted integration kernels against the numpy fallback.

Run:  python benchmarks/bench_kernels.py
The same comparison with the fallback forced:
      ENGEL_LAB_NO_NUMBA=1 python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from engel_lab import _kernels


def timeit(fn, *args, repeat=5, **kwargs):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_dcurves(n_curves=1000, n_steps=1000):
    rng = np.random.default_rng(0)
    tg = np.linspace(0, 1, 2 * n_steps + 1)
    U = rng.normal(size=(n_curves, 1))[:, 0:1] * np.sin(np.pi * tg)[None, :] * tg
    U = np.repeat(U, 1, axis=0) + rng.normal(scale=0.1, size=(n_curves, tg.size)) * tg
    V = np.ones_like(U)
    starts = np.zeros((n_curves, 4))
    dt = 1.0 / n_steps

    t_np, ref = timeit(_kernels._dcurve_rk4_numpy, U, V, starts, dt, 0)
    rows = [("dcurve_rk4 numpy", t_np, 0.0)]
    if _kernels.HAS_NUMBA:
        _kernels._dcurve_rk4_jit(U[:2], V[:2], starts[:2], dt, 0)  # warm up
        t_nb, out = timeit(_kernels._dcurve_rk4_jit, U, V, starts, dt, 0)
        rows.append(("dcurve_rk4 numba", t_nb, float(np.abs(out - ref).max())))
    return rows


def bench_transport(n_steps=200_000):
    rng = np.random.default_rng(1)
    A = rng.normal(scale=0.3, size=(2 * n_steps + 1, 2, 2))
    A -= 0.5 * np.trace(A, axis1=1, axis2=2)[:, None, None] * np.eye(2)
    dt = 1e-4

    t_np, ref = timeit(_kernels._transport_rk4_impl, A, dt, repeat=3)
    rows = [("transport_rk4 numpy", t_np, 0.0)]
    if _kernels.HAS_NUMBA:
        _kernels._transport_rk4_jit(A[:5], dt)
        t_nb, out = timeit(_kernels._transport_rk4_jit, A, dt, repeat=3)
        rows.append(("transport_rk4 numba", t_nb, float(np.abs(out - ref).max())))
    return rows


def main():
    print(f"numba available and enabled: {_kernels.HAS_NUMBA}")
    print(f"{'kernel':<24s} {'best time':>10s} {'max |diff|':>12s}")
    for rows in (bench_dcurves(), bench_transport()):
        base = rows[0][1]
        for name, t, diff in rows:
            speedup = f"  ({base / t:.1f}x)" if t != base else ""
            print(f"{name:<24s} {t * 1e3:9.2f}ms {diff:12.2e}{speedup}")


if __name__ == "__main__":
    main()
