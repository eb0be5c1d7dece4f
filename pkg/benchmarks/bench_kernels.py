"""Time each hot kernel in its numba and numpy flavours.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each row reports the best of ``--repeat`` runs after one warm-up call (so
JIT compilation is excluded) and checks that both flavours agree.
"""
import argparse
import json
import time

import numpy as np

from tailspectra import _accel, kernels
from tailspectra.extremal import series_coefficients


def best_of(fn, repeat):
    fn()  # warm-up / compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    c, d, n = series_coefficients(10.0, 3)
    t = np.arange(-20.0, 20.0, 0.001)
    yield ("majorant K=3 omega=10, 40k points",
           lambda: kernels.majorant_series_numba(t, c, d, 10.0, n),
           lambda: kernels.majorant_series_numpy(t, c, d, 10.0, n))
    c7, d7, n7 = series_coefficients(2.0, 7)
    yield (f"majorant K=7 omega=2 ({n7} terms), 40k points",
           lambda: kernels.majorant_series_numba(t, c7, d7, 2.0, n7),
           lambda: kernels.majorant_series_numpy(t, c7, d7, 2.0, n7))
    yield ("lattice sum t=0.5 power 4, N=1e6",
           lambda: kernels.lattice_partial_sum_numba(0.5, 4, 10**6),
           lambda: kernels.lattice_partial_sum_numpy(0.5, 4, 10**6))
    x = 1.0 - np.random.default_rng(0).exponential(2.0, 2_000_000)
    yield ("Lindley recursion, 2e6 customers",
           lambda: kernels.lindley_waiting_numba(x),
           lambda: kernels.lindley_waiting_numpy(x))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the table as JSON")
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rows = []
    print(f"{'kernel':<44} {'numba':>10} {'numpy':>10} {'speed-up':>9}  max diff/scale")
    for name, jit_fn, np_fn in cases():
        tj, a = best_of(jit_fn, args.repeat)
        tn, b = best_of(np_fn, args.repeat)
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        diff = float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
        rows.append({"kernel": name, "numba_s": tj, "numpy_s": tn, "speedup": tn / tj,
                     "max_scaled_diff": diff})
        print(f"{name:<44} {tj * 1e3:8.2f}ms {tn * 1e3:8.2f}ms {tn / tj:8.1f}x  {diff:.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
