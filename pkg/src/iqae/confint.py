"""Binomial confidence intervals and likelihood-ratio interval construction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels

CP_TOL = 1e-12
CP_MAXITER = 200
LR_TOL = 1e-10


@dataclass(frozen=True)
class BinomialTally:
    """Number of shots and of measured ones.

    ``ones`` may be fractional for expected-value (noise-free) tallies.
    """

    shots: int
    ones: float

    def __post_init__(self):
        if self.shots < 0 or not (0 <= self.ones <= self.shots):
            raise ValueError(f"invalid tally: shots={self.shots}, ones={self.ones}")

    @property
    def fraction(self) -> float:
        return self.ones / self.shots if self.shots else 0.0

    def merge(self, other: "BinomialTally") -> "BinomialTally":
        return BinomialTally(self.shots + other.shots, self.ones + other.ones)


@dataclass(frozen=True)
class Interval01:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class LikelihoodInterval:
    """Hull of a likelihood level set; ``clamped_*`` mark endpoints stopped by the domain."""

    lo: float
    hi: float
    clamped_lo: bool = False
    clamped_hi: bool = False

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")


def _check_tally(tally: BinomialTally) -> None:
    if tally.shots < 1:
        raise ValueError("tally needs at least one shot")


def chernoff_interval(tally: BinomialTally, alpha_round: float) -> Interval01:
    """Interval from the bound ``P[|p_hat - p| >= eps] <= 2 exp(-N eps^2 / 3)``."""
    _check_alpha(alpha_round)
    _check_tally(tally)
    center = tally.ones / tally.shots
    half = math.sqrt(3.0 * math.log(2.0 / alpha_round) / tally.shots)
    return Interval01(max(0.0, center - half), min(1.0, center + half))


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) via its continued fraction."""
    if a <= 0 or b <= 0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return _kernels.betainc(float(x), float(a), float(b))


def clopper_pearson_interval(tally: BinomialTally, alpha_round: float) -> Interval01:
    """Exact two-sided binomial interval at confidence ``1 - alpha_round``."""
    _check_alpha(alpha_round)
    _check_tally(tally)
    n, k = float(tally.shots), float(tally.ones)
    lo = 0.0 if k <= 0 else _kernels.beta_ppf(alpha_round / 2, k, n - k + 1.0, CP_TOL, CP_MAXITER)
    hi = 1.0 if k >= n else _kernels.beta_ppf(1.0 - alpha_round / 2, k + 1.0, n - k, CP_TOL, CP_MAXITER)
    return Interval01(lo, hi)


def normal_ppf_two_sided(p: float) -> float:
    """``z >= 0`` with ``P[|Z| <= z] = p`` for standard normal ``Z``."""
    if not (0.0 <= p < 1.0):
        raise ValueError(f"p must lie in [0, 1), got {p!r}")
    tail = 1.0 - p
    lo, hi = 0.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.erfc(mid / math.sqrt(2.0)) > tail:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def chi2_quantile_1dof(p: float) -> float:
    """Quantile of the chi-squared distribution with one degree of freedom."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    z = normal_ppf_two_sided(p)
    return z * z


def likelihood_ratio_interval(
    loglik: Callable[[np.ndarray], np.ndarray],
    a_hat: float,
    alpha: float,
    domain: tuple[float, float] = (0.0, 1.0),
    grid_n: int = 10_000,
) -> LikelihoodInterval:
    """Hull of ``{x in domain : loglik(x) >= loglik(a_hat) - q/2}``, q the chi2_1 quantile.

    ``loglik`` is called with 1-d float arrays and must return an array of the
    same length. Crossings are bracketed on a ``grid_n`` point scan and refined
    by bisection; a multimodal likelihood gives the (conservative) hull of all
    accepted pieces.
    """
    _check_alpha(alpha)
    d_lo, d_hi = float(domain[0]), float(domain[1])
    if not (d_lo <= a_hat <= d_hi):
        raise ValueError(f"a_hat={a_hat} outside domain {domain}")
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")

    def f(x: float) -> float:
        return float(loglik(np.array([x]))[0])

    peak = f(a_hat)
    if not math.isfinite(peak):
        raise ValueError("log-likelihood is not finite at a_hat")
    level = peak - chi2_quantile_1dof(1.0 - alpha) / 2.0

    grid = np.linspace(d_lo, d_hi, grid_n)
    inside = np.asarray(loglik(grid)) >= level
    hits = np.flatnonzero(inside)

    def refine(outside_x: float, inside_x: float) -> float:
        while abs(inside_x - outside_x) > LR_TOL:
            mid = 0.5 * (outside_x + inside_x)
            if f(mid) >= level:
                inside_x = mid
            else:
                outside_x = mid
        return inside_x

    if hits.size == 0:
        lo = hi = a_hat
        clamped_lo = clamped_hi = False
    else:
        first, last = hits[0], hits[-1]
        clamped_lo = first == 0
        clamped_hi = last == grid_n - 1
        lo = d_lo if clamped_lo else refine(grid[first - 1], grid[first])
        hi = d_hi if clamped_hi else refine(grid[last + 1], grid[last])

    # the maximizer may sit between grid nodes, left of every accepted node
    # (or right of them); its nearest outer node is then known to be outside
    if a_hat < lo or hits.size == 0:
        j = int(np.searchsorted(grid, a_hat, side="right")) - 1
        if j < 0 or grid[j] == a_hat:
            lo, clamped_lo = min(lo, a_hat), a_hat == d_lo
        else:
            lo, clamped_lo = refine(grid[j], a_hat), False
    if a_hat > hi or hits.size == 0:
        j = int(np.searchsorted(grid, a_hat, side="left"))
        if j >= grid_n or grid[j] == a_hat:
            hi, clamped_hi = max(hi, a_hat), a_hat == d_hi
        else:
            hi, clamped_hi = refine(grid[j], a_hat), False
    return LikelihoodInterval(lo, hi, bool(clamped_lo), bool(clamped_hi))
