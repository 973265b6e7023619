import math
import os
import subprocess
import sys

import numpy as np
import pytest

from iqae import _kernels
from iqae._accel import HAVE_NUMBA


def _py(func):
    return getattr(func, "py_func", func)


def test_mlae_grid_paths_agree():
    rng = np.random.default_rng(0)
    thetas = rng.uniform(0, math.pi / 2, 5000)
    ks = np.array([0, 1, 2, 4, 8, 16], dtype=np.int64)
    shots = np.full(6, 100.0)
    hits = rng.integers(0, 101, 6).astype(float)
    a = _kernels._mlae_loglik_grid_numba(thetas, ks, hits, shots)
    b = _kernels._mlae_loglik_grid_numpy(thetas, ks, hits, shots)
    np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-9)


def test_qae_grid_paths_agree():
    rng = np.random.default_rng(1)
    M = 32
    counts = rng.integers(0, 5, M // 2 + 1).astype(float)
    counts[3] = 0.0
    t = rng.uniform(0, 0.5, 4000)
    a = _kernels._qae_loglik_grid_numba(t, counts, M)
    b = _kernels._qae_loglik_grid_numpy(t, counts, M)
    np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-9)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba path disabled")
def test_scalar_kernels_match_python():
    rng = np.random.default_rng(2)
    for _ in range(200):
        x = rng.random()
        a, b = rng.uniform(0.5, 300, 2)
        assert _kernels.betainc(x, a, b) == pytest.approx(_py(_kernels.betainc)(x, a, b), abs=1e-14)
        d = rng.uniform(-1, 1)
        assert _kernels.fejer(d, 16) == pytest.approx(_py(_kernels.fejer)(d, 16), abs=1e-14)
    for _ in range(500):
        k_i = int(rng.integers(0, 50))
        lo = rng.uniform(0, 0.45)
        hi = lo + rng.uniform(1e-4, 0.05)
        up = bool(rng.random() < 0.5)
        assert _kernels.find_next_k_halfturns(k_i, lo, hi, up, 2.0) == _py(_kernels.find_next_k_halfturns)(
            k_i, lo, hi, up, 2.0
        )


def test_fejer_array_matches_scalar():
    d = np.linspace(-1.5, 1.5, 1001)
    for M in (1, 2, 8, 64):
        ref = [_kernels.fejer(float(x), M) for x in d]
        np.testing.assert_allclose(_kernels.fejer_array(d, M), ref, atol=1e-14)


def test_env_flag_selects_numpy_path():
    code = (
        "import iqae, iqae._kernels as k;"
        "print(iqae.backend(), k.mlae_loglik_grid is k._mlae_loglik_grid_numpy);"
        "from iqae import *;"
        "r = run_iqae(IqaeConfig(1e-3, 0.05, seed=1), AmplitudeProblem(0.4));"
        "print(r.a_interval.lo, r.n_oracle)"
    )
    env = dict(os.environ, IQAE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    first, second = out.stdout.strip().splitlines()
    assert first == "numpy True"
    from iqae import AmplitudeProblem, IqaeConfig, run_iqae

    r = run_iqae(IqaeConfig(1e-3, 0.05, seed=1), AmplitudeProblem(0.4))
    lo, calls = second.split()
    assert int(calls) == r.n_oracle
    assert float(lo) == pytest.approx(r.a_interval.lo, abs=1e-12)
