"""Reference estimators: classical Monte Carlo, MLAE and canonical QAE with MLE."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .confint import (
    BinomialTally,
    Interval01,
    LikelihoodInterval,
    clopper_pearson_interval,
    likelihood_ratio_interval,
)
from .oracle import AmplitudeProblem, fold_outcomes, sample_grover, sample_qpe

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
HALF_PI = math.pi / 2


@dataclass(frozen=True)
class ScheduleRecord:
    k: int
    tally: BinomialTally


@dataclass(frozen=True)
class QaeSampleSet:
    m: int
    counts: np.ndarray

    @property
    def M(self) -> int:
        return 1 << self.m

    @property
    def n_shots(self) -> float:
        return float(np.sum(self.counts))

    def folded(self) -> np.ndarray:
        """Counts per grid index ``i = min(y, M - y)``, ``i = 0..M/2``."""
        M = self.M
        out = np.zeros(M // 2 + 1, dtype=float)
        np.add.at(out, fold_outcomes(np.arange(M), M), self.counts)
        return out


@dataclass
class BaselineResult:
    algorithm: str
    estimate: float
    a_interval: Interval01
    n_oracle: int
    grid_estimate: float | None = None
    theta_hat: float | None = None
    lr_interval: LikelihoodInterval | None = None
    warnings: list[str] = field(default_factory=list)


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``, endpoints included."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    best_x, best_f = (c, fc) if fc >= fd else (d, fd)
    # ties go to the endpoint: a flat top at the domain edge is resolved exactly
    for x in (lo, hi):
        fx = f(x)
        if fx >= best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def _interval_from_angles(lo: float, hi: float) -> Interval01:
    a_lo = math.sin(min(max(lo, 0.0), HALF_PI)) ** 2
    a_hi = math.sin(min(max(hi, 0.0), HALF_PI)) ** 2
    return Interval01(min(a_lo, a_hi), max(a_lo, a_hi))


# --- classical Monte Carlo ------------------------------------------------------


def run_mc(
    problem: AmplitudeProblem, n_samples: int, alpha: float, rng: np.random.Generator | None
) -> BaselineResult:
    """Sample mean of ``n_samples`` Bernoulli(a) draws with a Clopper-Pearson interval."""
    tally = sample_grover(problem, 0, n_samples, rng)
    return BaselineResult(
        algorithm="mc",
        estimate=tally.fraction,
        a_interval=clopper_pearson_interval(tally, alpha),
        n_oracle=int(n_samples),
    )


# --- maximum-likelihood amplitude estimation -------------------------------------


def _record_arrays(records: Sequence[ScheduleRecord]):
    ks = np.array([rec.k for rec in records], dtype=np.int64)
    hits = np.array([rec.tally.ones for rec in records], dtype=float)
    shots = np.array([rec.tally.shots for rec in records], dtype=float)
    return ks, hits, shots


def mlae_loglik(theta, records: Sequence[ScheduleRecord]):
    """Log-likelihood of Grover tallies at angle(s) ``theta``; log arguments floored at 1e-300."""
    ks, hits, shots = _record_arrays(records)
    scalar = np.ndim(theta) == 0
    thetas = np.atleast_1d(np.asarray(theta, dtype=float))
    out = _kernels.mlae_loglik_grid(thetas, ks, hits, shots)
    return float(out[0]) if scalar else out


def mlae_grid_size(k_max: int, requested: int) -> int:
    """Grid points on [0, pi/2] giving at least 10 per period of sin^2((2 k_max + 1) theta)."""
    return max(int(requested), 10 * (2 * int(k_max) + 1) // 2 + 1)


def maximize_mlae(records: Sequence[ScheduleRecord], grid_n: int = 100_000) -> tuple[float, list[str]]:
    ks, hits, shots = _record_arrays(records)
    warnings = []
    n = mlae_grid_size(int(ks.max()), grid_n)
    if n > grid_n:
        warnings.append(f"grid refined from {grid_n} to {n} points to resolve k={int(ks.max())}")
    grid = np.linspace(0.0, HALF_PI, n)
    values = _kernels.mlae_loglik_grid(grid, ks, hits, shots)
    j = int(np.argmax(values))
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, n - 1)]

    def f(x: float) -> float:
        return float(_kernels.mlae_loglik_grid(np.array([x]), ks, hits, shots)[0])

    theta_hat, _ = golden_section_max(f, lo, hi)
    return _polish_by_score(theta_hat, lo, hi, ks, hits, shots), warnings


def mlae_score(theta: float, ks: np.ndarray, hits: np.ndarray, shots: np.ndarray) -> float:
    """Derivative of the MLAE log-likelihood in ``theta``."""
    K = 2.0 * ks + 1.0
    s = np.sin(K * theta)
    c = np.cos(K * theta)
    sc = s * c
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = 2.0 * K * (hits * c * c - (shots - hits) * s * s) / sc
    return float(np.sum(terms))


def _polish_by_score(theta: float, lo: float, hi: float, ks, hits, shots) -> float:
    # the log-likelihood is flat at its peak, so comparing values pins theta only
    # to ~sqrt(machine eps); a sign change of the score brackets it exactly
    a, b = max(lo, theta - 1e-6), min(hi, theta + 1e-6)
    ga, gb = mlae_score(a, ks, hits, shots), mlae_score(b, ks, hits, shots)
    if not (math.isfinite(ga) and math.isfinite(gb) and ga > 0.0 > gb):
        return theta
    while True:
        mid = 0.5 * (a + b)
        if not a < mid < b:
            return mid
        g = mlae_score(mid, ks, hits, shots)
        if not math.isfinite(g):
            return theta
        if g > 0.0:
            a = mid
        else:
            b = mid


def run_mlae(
    problem: AmplitudeProblem,
    m: int,
    n_shots: int,
    alpha: float,
    rng: np.random.Generator | None,
    grid_n: int = 100_000,
) -> BaselineResult:
    """Tallies at ``k = 1, 2, 4, ..., 2**(m-1)`` combined by maximum likelihood."""
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    records = [ScheduleRecord(1 << j, sample_grover(problem, 1 << j, n_shots, rng)) for j in range(m)]
    theta_hat, warnings = maximize_mlae(records, grid_n)
    ks, hits, shots = _record_arrays(records)

    def loglik(thetas: np.ndarray) -> np.ndarray:
        return _kernels.mlae_loglik_grid(np.asarray(thetas, dtype=float), ks, hits, shots)

    lr = likelihood_ratio_interval(
        loglik, theta_hat, alpha, (0.0, HALF_PI), mlae_grid_size(int(ks.max()), grid_n)
    )
    return BaselineResult(
        algorithm="mlae",
        estimate=math.sin(theta_hat) ** 2,
        a_interval=_interval_from_angles(lr.lo, lr.hi),
        n_oracle=int(n_shots) * ((1 << m) - 1),
        theta_hat=theta_hat,
        lr_interval=lr,
        warnings=warnings,
    )


# --- canonical QAE with MLE post-processing -------------------------------------


def qae_likelihood(x_grid_index: int, a_prime: float, m: int) -> float:
    """Probability that one readout lands on grid point ``sin^2(pi * i / M)`` given amplitude ``a_prime``.

    Sums the two readouts ``y = i`` and ``y = M - i`` that fold onto grid
    index ``i``; the end points ``i = 0`` and ``i = M/2`` have a single readout.
    """
    M = 1 << m
    if not (0 <= x_grid_index <= M // 2):
        raise ValueError(f"grid index must lie in [0, {M // 2}], got {x_grid_index}")
    if not (0.0 <= a_prime <= 1.0):
        raise ValueError(f"a_prime must lie in [0, 1], got {a_prime}")
    t = math.asin(math.sqrt(a_prime)) / math.pi
    f = _kernels.fejer(x_grid_index / M - t, M) + _kernels.fejer(x_grid_index / M + t, M)
    if x_grid_index == 0 or x_grid_index == M // 2:
        f *= 0.5
    return f


def qae_loglik(theta, samples: QaeSampleSet):
    """Log-likelihood of folded QAE readouts at angle(s) ``theta`` in [0, pi/2]."""
    scalar = np.ndim(theta) == 0
    t = np.atleast_1d(np.asarray(theta, dtype=float)) / math.pi
    out = _kernels.qae_loglik_grid(t, samples.folded(), samples.M)
    return float(out[0]) if scalar else out


def median_grid_index(folded: np.ndarray) -> int:
    """Lower median of folded readouts (even-count ties go to the smaller index)."""
    total = float(np.sum(folded))
    cum = np.cumsum(folded)
    return int(np.searchsorted(cum, total / 2.0 - 1e-9 * max(total, 1.0), side="left"))


def maximize_qae(samples: QaeSampleSet) -> tuple[float, int]:
    """MLE angle, searched in the two grid cells adjacent to the median readout.

    Returns ``(theta_hat, median_index)``.
    """
    M = samples.M
    folded = samples.folded()
    i_med = median_grid_index(folded)

    def f(theta: float) -> float:
        return float(_kernels.qae_loglik_grid(np.array([theta / math.pi]), folded, M)[0])

    cells = []
    if i_med > 0:
        cells.append(((i_med - 1) * math.pi / M, i_med * math.pi / M))
    if i_med < M // 2:
        cells.append((i_med * math.pi / M, (i_med + 1) * math.pi / M))
    best_theta, best_val = None, -math.inf
    for lo, hi in cells:
        theta, val = golden_section_max(f, lo, hi)
        if val > best_val:
            best_theta, best_val = theta, val
    return best_theta, i_med


def run_qae_mle(
    problem: AmplitudeProblem,
    m: int,
    n_shots: int,
    alpha: float,
    rng: np.random.Generator | None,
) -> BaselineResult:
    """Canonical QAE readouts post-processed by maximum likelihood.

    The likelihood-ratio interval is computed over ``theta`` and mapped through
    ``sin^2``; the level set is the same as in ``a``-space since the map is
    monotone on [0, pi/2].
    """
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    samples = QaeSampleSet(m, sample_qpe(problem.theta_a, m, n_shots, rng))
    theta_hat, i_med = maximize_qae(samples)
    M = samples.M
    folded = samples.folded()

    def loglik(thetas: np.ndarray) -> np.ndarray:
        return _kernels.qae_loglik_grid(np.asarray(thetas, dtype=float) / math.pi, folded, M)

    lr = likelihood_ratio_interval(loglik, theta_hat, alpha, (0.0, HALF_PI), max(10_000, 40 * M))
    return BaselineResult(
        algorithm="qae",
        estimate=math.sin(theta_hat) ** 2,
        a_interval=_interval_from_angles(lr.lo, lr.hi),
        n_oracle=int(n_shots) * (M - 1),
        grid_estimate=math.sin(math.pi * i_med / M) ** 2,
        theta_hat=theta_hat,
        lr_interval=lr,
    )
