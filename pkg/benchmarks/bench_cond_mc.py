"""Benchmark: compiled conditional-MC kernel vs the numpy fallback.

Both backends consume identical pre-generated normal draws, so the comparison
isolates the per-replication arithmetic (correlation mix, exp/log, erfc).

Run:  python benchmarks/bench_cond_mc.py [n]
"""

import sys
import time

import numpy as np
from scipy.special import ndtri

from tailagg import kernels


def bench(n: int = 5_000_000, repeats: int = 3):
    rng = np.random.Generator(np.random.Philox(seed=12345))
    u = rng.random((n, 2))
    z1 = np.ascontiguousarray(ndtri(u[:, 0]))
    z2 = np.ascontiguousarray(ndtri(u[:, 1]))
    args = (0.0, 0.0, 1.0, 1.0, 0.4, 100.0)

    results = {}
    backends = ["python"] + (["compiled"] if kernels.compiled_available() else [])
    for backend in backends:
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            tot, totsq = kernels.pair_chunk(z1, z2, *args, force=None if backend == "compiled" else "python")
            best = min(best, time.perf_counter() - t0)
        results[backend] = (best, tot)
        print(f"{backend:9s}: {best * 1e9 / n:7.2f} ns/replication   ({n / best / 1e6:7.1f} M repl/s)   sum={tot:.6e}")

    if len(results) == 2:
        t_py, s_py = results["python"]
        t_c, s_c = results["compiled"]
        print(f"speedup  : {t_py / t_c:.2f}x   (relative sum difference {abs(s_py - s_c) / abs(s_py):.2e})")
    else:
        print("compiled kernel not built; only the numpy fallback was timed")


if __name__ == "__main__":
    bench(int(float(sys.argv[1])) if len(sys.argv) > 1 else 5_000_000)
