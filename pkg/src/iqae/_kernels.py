"""Hot numeric kernels.

Scalar kernels are plain Python over ``math`` and are compiled with numba when
available. Grid kernels come in two flavours, an explicit-loop version for
numba and a vectorised numpy version; the public name is bound to whichever
path ``_accel`` selected.

Angles handed to ``find_next_k_halfturns`` are in units of pi (half turns), so
``K * theta`` for the dyadic boundary angles 0 and pi/2 is exact in floating
point and the half-plane tests never see a rounded pi.
"""

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit

LOG_FLOOR = 1e-300
_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXIT = 100_000
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@njit
def _betacf(x, a, b):
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            break
    return h


@njit
def _stirling_remainder(z):
    # lgamma(z) - [(z - 1/2) ln z - z + ln(2 pi) / 2]
    if z < 10.0:
        return math.lgamma(z) - (z - 0.5) * math.log(z) + z - _HALF_LOG_2PI
    z2 = 1.0 / (z * z)
    return (
        1.0 / 12.0 - z2 * (1.0 / 360.0 - z2 * (1.0 / 1260.0 - z2 * (1.0 / 1680.0 - z2 / 1188.0)))
    ) / z


@njit
def _log_power_terms(x, a, b):
    # ln[x^a (1-x)^b / B(a, b)] arranged so no large lgamma values cancel
    n = a + b
    u = (x * n - a) / a
    v = ((1.0 - x) * n - b) / b
    return (
        a * math.log1p(u)
        + b * math.log1p(v)
        + 0.5 * math.log(a * b / n)
        - _HALF_LOG_2PI
        - _stirling_remainder(a)
        - _stirling_remainder(b)
        + _stirling_remainder(n)
    )


@njit
def betainc(x, a, b):
    """Regularized incomplete beta I_x(a, b) for a, b > 0."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(_log_power_terms(x, a, b))
    if x < (a + 1.0) / (a + b + 2.0):
        return min(1.0, front * _betacf(x, a, b) / a)
    return max(0.0, 1.0 - front * _betacf(1.0 - x, b, a) / b)


@njit
def beta_ppf(p, a, b, tol, maxiter):
    """Quantile of Beta(a, b) by bisection on ``betainc``."""
    lo = 0.0
    hi = 1.0
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if betainc(mid, a, b) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


@njit
def find_next_k_halfturns(k_i, lo, hi, up_i, r):
    """Largest admissible ``k`` for the angle interval ``[lo, hi]`` given in units of pi.

    Returns ``(k, up)``; falls back to ``(k_i, up_i)`` when nothing qualifies.
    """
    K_i = 4 * k_i + 2
    width = hi - lo
    if width <= 0.0:
        return k_i, up_i
    K_max = int(math.floor(1.0 / width))
    K = K_max - ((K_max - 2) % 4)
    while K >= r * K_i:
        s_lo = K * lo
        s_hi = K * hi
        s_lo = s_lo - 2.0 * math.floor(s_lo / 2.0)
        s_hi = s_hi - 2.0 * math.floor(s_hi / 2.0)
        if s_hi <= 1.0 and s_lo <= 1.0:
            return (K - 2) // 4, True
        if s_hi >= 1.0 and s_lo >= 1.0:
            return (K - 2) // 4, False
        K -= 4
    return k_i, up_i


@njit
def fejer(d, M):
    """sin^2(M pi d) / (M^2 sin^2(pi d)), with the d -> 0 (mod 1) limit equal to 1."""
    d = abs((d + 0.5) % 1.0 - 0.5)
    s = math.sin(math.pi * d)
    if abs(s) < 1e-15:
        return 1.0
    n = math.sin(M * math.pi * d)
    return (n * n) / (M * M * s * s)


def fejer_array(d: np.ndarray, M: int) -> np.ndarray:
    d = np.abs((np.asarray(d, dtype=float) + 0.5) % 1.0 - 0.5)
    s = np.sin(np.pi * d)
    small = np.abs(s) < 1e-15
    safe = np.where(small, 1.0, s)
    out = np.sin(M * np.pi * d) ** 2 / (M * M * safe * safe)
    return np.where(small, 1.0, out)


# --- MLAE log-likelihood over a grid of angles --------------------------------


@njit
def _mlae_loglik_grid_numba(thetas, ks, hits, shots):
    out = np.empty(thetas.shape[0])
    for g in range(thetas.shape[0]):
        total = 0.0
        for j in range(ks.shape[0]):
            s = math.sin((2 * ks[j] + 1) * thetas[g])
            p1 = s * s
            p0 = 1.0 - p1
            if p1 < LOG_FLOOR:
                p1 = LOG_FLOOR
            if p0 < LOG_FLOOR:
                p0 = LOG_FLOOR
            total += hits[j] * math.log(p1) + (shots[j] - hits[j]) * math.log(p0)
        out[g] = total
    return out


def _mlae_loglik_grid_numpy(thetas, ks, hits, shots, chunk=1 << 16):
    thetas = np.asarray(thetas, dtype=float)
    out = np.empty(thetas.shape[0])
    factors = 2.0 * np.asarray(ks, dtype=float) + 1.0
    hits = np.asarray(hits, dtype=float)
    misses = np.asarray(shots, dtype=float) - hits
    for start in range(0, thetas.shape[0], chunk):
        block = thetas[start : start + chunk, None] * factors[None, :]
        p1 = np.sin(block) ** 2
        p0 = 1.0 - p1
        ll = hits * np.log(np.maximum(p1, LOG_FLOOR)) + misses * np.log(np.maximum(p0, LOG_FLOOR))
        out[start : start + chunk] = ll.sum(axis=1)
    return out


# --- folded canonical-QAE log-likelihood over a grid of angles ----------------


@njit
def _qae_loglik_grid_numba(t_grid, counts, M):
    half = M // 2
    out = np.empty(t_grid.shape[0])
    for g in range(t_grid.shape[0]):
        t = t_grid[g]
        total = 0.0
        for i in range(half + 1):
            c = counts[i]
            if c == 0.0:
                continue
            f = fejer(i / M - t, M) + fejer(i / M + t, M)
            if i == 0 or i == half:
                f *= 0.5
            if f < LOG_FLOOR:
                f = LOG_FLOOR
            total += c * math.log(f)
        out[g] = total
    return out


def _qae_loglik_grid_numpy(t_grid, counts, M, chunk=1 << 14):
    t_grid = np.asarray(t_grid, dtype=float)
    counts = np.asarray(counts, dtype=float)
    idx = np.nonzero(counts)[0]
    half = M // 2
    weights = np.where((idx == 0) | (idx == half), 0.5, 1.0)
    grid_pts = idx / M
    out = np.empty(t_grid.shape[0])
    for start in range(0, t_grid.shape[0], chunk):
        t = t_grid[start : start + chunk, None]
        f = (fejer_array(grid_pts - t, M) + fejer_array(grid_pts + t, M)) * weights
        out[start : start + chunk] = (counts[idx] * np.log(np.maximum(f, LOG_FLOOR))).sum(axis=1)
    return out


if HAVE_NUMBA:
    mlae_loglik_grid = _mlae_loglik_grid_numba
    qae_loglik_grid = _qae_loglik_grid_numba
else:
    mlae_loglik_grid = _mlae_loglik_grid_numpy
    qae_loglik_grid = _qae_loglik_grid_numpy
