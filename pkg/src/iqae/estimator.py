"""Iterative amplitude estimation.

The angle interval is carried internally in units of pi, which keeps the
half-plane bookkeeping exact at the dyadic endpoints 0 and pi/2. Public
functions take and return radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _kernels
from .confint import (
    BinomialTally,
    Interval01,
    chernoff_interval,
    clopper_pearson_interval,
)
from .oracle import AmplitudeProblem, make_rng, sample_grover

CI_METHODS = {
    "chernoff": chernoff_interval,
    "clopper_pearson": clopper_pearson_interval,
}
_CI_ALIASES = {"cp": "clopper_pearson", "clopper-pearson": "clopper_pearson"}

# 12 / sin^4(pi/30)
SHOT_CONSTANT = 12.0 / math.sin(math.pi / 30) ** 4
ORACLE_CONSTANT = 1.15e6


class ConvergenceError(RuntimeError):
    """The loop ran past the iteration ceiling implied by the round and shot bounds."""


@dataclass(frozen=True)
class AngleInterval:
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class IqaeConfig:
    epsilon: float
    alpha: float
    n_shots: int = 100
    ci_method: Literal["chernoff", "clopper_pearson"] = "clopper_pearson"
    min_ratio: float = 2.0
    seed: int | None = None
    strict: bool = False

    def __post_init__(self):
        method = _CI_ALIASES.get(self.ci_method, self.ci_method)
        if method not in CI_METHODS:
            raise ValueError(f"unknown ci_method {self.ci_method!r}")
        object.__setattr__(self, "ci_method", method)
        if not (0.0 < self.epsilon < math.pi / 8):
            raise ValueError(f"epsilon must lie in (0, pi/8), got {self.epsilon!r}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if int(self.n_shots) != self.n_shots or self.n_shots < 1:
            raise ValueError(f"n_shots must be a positive integer, got {self.n_shots!r}")
        if not self.min_ratio > 1.0:
            raise ValueError(f"min_ratio must exceed 1, got {self.min_ratio!r}")


@dataclass(frozen=True)
class IterationRecord:
    k: int
    K: int
    up: bool
    tally: BinomialTally
    a_interval: Interval01
    theta_interval_after: AngleInterval
    round_index: int


@dataclass
class EstimationResult:
    a_interval: Interval01
    estimate: float
    theta_interval: AngleInterval
    n_oracle: int
    n_a_calls: int
    n_rounds: int
    n_iterations: int
    trace: list[IterationRecord] = field(default_factory=list)
    seed: int | None = None
    warnings: list[str] = field(default_factory=list)
    non_nesting: int = 0

    @property
    def ks(self) -> list[int]:
        return [rec.k for rec in self.trace]

    def k_schedule(self) -> list[int]:
        """Grover power of each round, in order."""
        out: list[int] = []
        for rec in self.trace:
            if not out or rec.k != out[-1]:
                out.append(rec.k)
        return out


def find_next_k(
    k_i: int, interval: AngleInterval, up_i: bool, r: float = 2.0
) -> tuple[int, bool]:
    """Largest ``k`` whose scaled interval ``(4k+2) * interval`` fits in one half-plane.

    Only ``K = 4k + 2 >= r * (4 k_i + 2)`` is considered; otherwise ``(k_i, up_i)``
    is returned unchanged.
    """
    if not r > 1.0:
        raise ValueError(f"r must exceed 1, got {r!r}")
    k, up = _kernels.find_next_k_halfturns(
        int(k_i), interval.lo / math.pi, interval.hi / math.pi, bool(up_i), float(r)
    )
    return int(k), bool(up)


def _scaled_halfturns(a_interval: Interval01, up: bool) -> tuple[float, float]:
    # arccos(1 - 2x) == 2 asin(sqrt(x)), which keeps precision near x = 0
    lo = 2.0 * math.asin(math.sqrt(min(1.0, max(0.0, a_interval.lo)))) / math.pi
    hi = 2.0 * math.asin(math.sqrt(min(1.0, max(0.0, a_interval.hi)))) / math.pi
    if up:
        return lo, hi
    return 2.0 - hi, 2.0 - lo


def invert_to_scaled_angle(a_interval: Interval01, up: bool) -> AngleInterval:
    """Interval for ``K*theta mod 2pi`` given an interval on ``(1 - cos(K*theta)) / 2``."""
    lo, hi = _scaled_halfturns(a_interval, up)
    return AngleInterval(lo * math.pi, hi * math.pi)


def _update_halfturns(lo: float, hi: float, K: int, s_lo: float, s_hi: float) -> tuple[float, float]:
    return (
        (2.0 * math.floor(K * lo / 2.0) + s_lo) / K,
        (2.0 * math.floor(K * hi / 2.0) + s_hi) / K,
    )


def update_theta_interval(current: AngleInterval, K: int, scaled: AngleInterval) -> AngleInterval:
    """Lift the scaled interval back by the full turns ``K * current`` has completed."""
    lo, hi = _update_halfturns(
        current.lo / math.pi, current.hi / math.pi, K, scaled.lo / math.pi, scaled.hi / math.pi
    )
    return AngleInterval(lo * math.pi, hi * math.pi)


def _ceil_log(x: float, base: float) -> int:
    v = math.log(x) / math.log(base)
    nearest = round(v)
    if abs(v - nearest) < 1e-12:
        return int(nearest)
    return math.ceil(v)


def max_rounds(epsilon: float, r: float = 2.0) -> int:
    """Upper bound on the number of rounds, ``ceil(log_r(r*pi / (8*epsilon)))``."""
    if epsilon <= 0 or not r > 1.0:
        raise ValueError("epsilon must be positive and r > 1")
    return max(1, _ceil_log(r * math.pi / (8.0 * epsilon), r))


def _log_factor(epsilon: float, alpha: float) -> float:
    """``ln((2/alpha) * log_3(3 pi / (20 epsilon)))``."""
    if epsilon <= 0 or not (0.0 < alpha < 1.0):
        raise ValueError("epsilon must be positive and alpha in (0, 1)")
    inner = (2.0 / alpha) * math.log(3.0 * math.pi / (20.0 * epsilon), 3)
    if inner <= 1.0:
        raise ValueError(f"epsilon={epsilon} too large for the log factor")
    return math.log(inner)


def n_max(epsilon: float, alpha: float) -> int:
    """Per-round shot ceiling under which the correctness guarantee holds."""
    return math.ceil(SHOT_CONSTANT * _log_factor(epsilon, alpha))


def oracle_call_bound(epsilon: float, alpha: float) -> float:
    return ORACLE_CONSTANT / epsilon * _log_factor(epsilon, alpha)


def overhead_statistic(result: EstimationResult, epsilon: float, alpha: float) -> float:
    """Oracle calls relative to the reference scaling ``ln((2/alpha) log_3(3pi/20eps)) / eps``."""
    return result.n_oracle / (_log_factor(epsilon, alpha) / epsilon)


def iteration_ceiling(config: IqaeConfig) -> int:
    T = max_rounds(config.epsilon, config.min_ratio)
    per_round = math.ceil(n_max(config.epsilon, config.alpha) / config.n_shots)
    return T * per_round + T + 8


def run_iqae(
    config: IqaeConfig,
    problem: AmplitudeProblem,
    rng: np.random.Generator | None = None,
    *,
    noiseless: bool = False,
) -> EstimationResult:
    """Estimate ``problem.a`` to half-width ``config.epsilon`` at confidence ``1 - alpha``.

    ``rng`` defaults to ``make_rng(config.seed)``. With ``noiseless=True`` every
    tally holds its expected count instead of a binomial draw.
    """
    if noiseless:
        rng = None
    elif rng is None:
        if config.seed is None:
            raise ValueError("either rng or config.seed is required")
        rng = make_rng(config.seed)

    eps, r, n_shots = config.epsilon, config.min_ratio, int(config.n_shots)
    T = max_rounds(eps, r)
    alpha_round = config.alpha / T
    make_ci = CI_METHODS[config.ci_method]
    ceiling = iteration_ceiling(config)

    warnings = []
    if n_shots > n_max(eps, config.alpha):
        warnings.append(
            f"n_shots={n_shots} exceeds the per-round shot ceiling {n_max(eps, config.alpha)}"
        )

    lo, hi = 0.0, 0.5
    k, up = 0, True
    round_tally: BinomialTally | None = None
    n_rounds = 0
    n_oracle = 0
    n_a_calls = 0
    non_nesting = 0
    trace: list[IterationRecord] = []

    while (hi - lo) * math.pi > 2.0 * eps:
        if len(trace) >= ceiling:
            raise ConvergenceError(
                f"no convergence after {len(trace)} iterations "
                f"(ceiling {ceiling}, a={problem.a}, config={config})"
            )
        k_next, up = _kernels.find_next_k_halfturns(k, lo, hi, up, r)
        k_next, up = int(k_next), bool(up)
        tally = sample_grover(problem, k_next, n_shots, rng)
        if round_tally is not None and k_next == k:
            round_tally = round_tally.merge(tally)
        else:
            round_tally = tally
            n_rounds += 1
        k = k_next
        K = 4 * k + 2
        n_oracle += k * n_shots
        n_a_calls += n_shots

        a_int = make_ci(round_tally, alpha_round)
        s_lo, s_hi = _scaled_halfturns(a_int, up)
        new_lo, new_hi = _update_halfturns(lo, hi, K, s_lo, s_hi)
        if config.strict:
            if new_lo < lo or new_hi > hi:
                non_nesting += 1
            new_lo, new_hi = max(new_lo, lo), min(new_hi, hi)
        lo, hi = new_lo, new_hi
        trace.append(
            IterationRecord(
                k=k,
                K=K,
                up=up,
                tally=round_tally,
                a_interval=a_int,
                theta_interval_after=AngleInterval(lo * math.pi, hi * math.pi),
                round_index=n_rounds - 1,
            )
        )

    a_lo = math.sin(math.pi * lo) ** 2
    a_hi = math.sin(math.pi * hi) ** 2
    a_interval = Interval01(min(a_lo, a_hi), max(a_lo, a_hi))
    return EstimationResult(
        a_interval=a_interval,
        estimate=a_interval.mid,
        theta_interval=AngleInterval(lo * math.pi, hi * math.pi),
        n_oracle=n_oracle,
        n_a_calls=n_a_calls,
        n_rounds=n_rounds,
        n_iterations=len(trace),
        trace=trace,
        seed=config.seed,
        warnings=warnings,
        non_nesting=non_nesting,
    )
