"""Time the numba kernels against the pure numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Grid kernels are timed in-process (both flavours are always importable).
End-to-end IQAE and MLAE runs are timed in subprocesses, one with
IQAE_DISABLE_NUMBA=1, since the flag is read at import.
"""

import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from iqae import _kernels
from iqae._accel import HAVE_NUMBA

END_TO_END = """
import time
from iqae import AmplitudeProblem, IqaeConfig, make_rng, run_iqae, run_mlae
run_iqae(IqaeConfig(1e-3, 0.05, seed=0), AmplitudeProblem(0.3))
run_mlae(AmplitudeProblem(0.3), 4, 100, 0.05, make_rng(0))
t0 = time.perf_counter()
for i in range(200):
    run_iqae(IqaeConfig(1e-4, 0.05), AmplitudeProblem(0.3), make_rng(1, i))
t1 = time.perf_counter()
for i in range(5):
    run_mlae(AmplitudeProblem(0.3), 10, 100, 0.05, make_rng(2, i))
t2 = time.perf_counter()
print(t1 - t0, t2 - t1)
"""


def _best(func, repeat):
    return min(timeit.repeat(func, number=1, repeat=repeat))


def grid_kernels(repeat):
    rng = np.random.default_rng(0)
    thetas = np.linspace(0, math.pi / 2, 200_000)
    ks = np.array([1 << j for j in range(10)], dtype=np.int64)
    shots = np.full(ks.size, 100.0)
    hits = rng.integers(0, 101, ks.size).astype(float)
    M = 1 << 10
    counts = rng.integers(0, 3, M // 2 + 1).astype(float)
    t = np.linspace(0, 0.5, 40_000)

    # compile before timing
    _kernels._mlae_loglik_grid_numba(thetas[:10], ks, hits, shots)
    _kernels._qae_loglik_grid_numba(t[:10], counts, M)
    return [
        ("mlae grid 2e5 x 10", _best(lambda: _kernels._mlae_loglik_grid_numba(thetas, ks, hits, shots), repeat),
         _best(lambda: _kernels._mlae_loglik_grid_numpy(thetas, ks, hits, shots), repeat)),
        ("qae grid 4e4 x 513", _best(lambda: _kernels._qae_loglik_grid_numba(t, counts, M), repeat),
         _best(lambda: _kernels._qae_loglik_grid_numpy(t, counts, M), repeat)),
    ]


def end_to_end():
    out = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, IQAE_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        out[label] = [float(x) for x in res.stdout.split()]
    return [
        ("200 x iqae eps=1e-4", out["numba"][0], out["numpy"][0]),
        ("5 x mlae m=10", out["numba"][1], out["numpy"][1]),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba unavailable or disabled; nothing to compare", file=sys.stderr)
        return 1
    print(f"{'case':<24}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fast, slow in grid_kernels(args.repeat) + end_to_end():
        print(f"{name:<24}{fast:>12.4f}{slow:>12.4f}{slow / fast:>10.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
