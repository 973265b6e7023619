"""Analytic stand-ins for the quantum measurements.

Measuring the last qubit of ``Q^k A|0>`` is a Bernoulli trial with success
probability ``sin^2((2k+1) theta_a)``, and the canonical phase-estimation
readout is a categorical draw over ``M = 2**m`` outcomes. Both are simulated
exactly from ``theta_a``; nothing here builds circuits.

Passing ``rng=None`` to a sampler returns the expected counts instead of a
random draw (noise-free tallies, possibly fractional).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import fejer_array
from .confint import BinomialTally

MAX_ANCILLAS = 30


@dataclass(frozen=True)
class AmplitudeProblem:
    """Unknown amplitude ``a = sin^2(theta_a)``."""

    a: float
    theta_a: float = field(init=False)

    def __post_init__(self):
        a = float(self.a)
        if not (0.0 <= a <= 1.0) or math.isnan(a):
            raise ValueError(f"amplitude must lie in [0, 1], got {self.a!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "theta_a", math.asin(math.sqrt(a)))

    @classmethod
    def from_angle(cls, theta_a: float) -> "AmplitudeProblem":
        if not (0.0 <= theta_a <= math.pi / 2):
            raise ValueError(f"theta_a must lie in [0, pi/2], got {theta_a!r}")
        problem = cls(math.sin(theta_a) ** 2)
        object.__setattr__(problem, "theta_a", float(theta_a))
        return problem


def make_rng(seed: int, index: int | None = None) -> np.random.Generator:
    """PCG64 generator for ``seed``; ``index`` derives an independent per-run stream.

    Runs fanned out from one master seed use ``make_rng(master, i)``, which
    depends only on ``(master, i)`` and not on execution order.
    """
    entropy = [int(seed)] if index is None else [int(seed), int(index)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


_SPLITTER = 134217729.0  # 2**27 + 1
_PI_HI = math.pi
_PI_LO = 1.2246467991473532e-16  # pi - float(pi)


def _split(x: float) -> tuple[float, float]:
    c = _SPLITTER * x
    hi = c - (c - x)
    return hi, x - hi


def _two_prod(a: float, b: float) -> tuple[float, float]:
    """``p + e == a * b`` exactly (Dekker)."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def grover_success_prob(problem: AmplitudeProblem, k: int) -> float:
    """Probability of measuring |1> after ``k`` Grover iterations, ``sin^2((2k+1) theta_a)``.

    The product and the reduction modulo pi are carried in double-double so
    the result stays accurate for large ``k``.
    """
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    p, e = _two_prod(float(2 * k + 1), problem.theta_a)
    j = float(round(p / _PI_HI))
    t, te = _two_prod(j, _PI_HI)
    r = (p - t) + (e - te) - j * _PI_LO
    return math.sin(r) ** 2


def sample_grover(
    problem: AmplitudeProblem, k: int, n_shots: int, rng: np.random.Generator | None
) -> BinomialTally:
    if n_shots < 1:
        raise ValueError(f"n_shots must be positive, got {n_shots}")
    p = grover_success_prob(problem, k)
    if rng is None:
        return BinomialTally(n_shots, n_shots * p)
    return BinomialTally(n_shots, int(rng.binomial(n_shots, p)))


def _check_m(m: int) -> int:
    if not isinstance(m, (int, np.integer)) or not (1 <= m <= MAX_ANCILLAS):
        raise ValueError(f"number of ancillas must be an integer in [1, {MAX_ANCILLAS}], got {m!r}")
    return int(m)


def qpe_distribution(theta_a: float, m: int) -> np.ndarray:
    """Outcome distribution of canonical amplitude estimation with ``m`` ancillas.

    The readout superposes the two eigenphases ``+-theta_a/pi``; each
    contributes half a Fejer kernel, so ``P[y] = P[M - y]`` and the vector is
    normalized. An on-grid angle ``theta_a = pi*y/M`` puts all mass on the
    folded outcome ``min(y, M - y)`` (split evenly between ``y`` and ``M - y``).
    """
    m = _check_m(m)
    if not (0.0 <= theta_a <= math.pi / 2 + 1e-15):
        raise ValueError(f"theta_a must lie in [0, pi/2], got {theta_a!r}")
    M = 1 << m
    y = np.arange(M) / M
    t = theta_a / math.pi
    return 0.5 * (fejer_array(y - t, M) + fejer_array(y + t, M))


def fold_outcomes(y: np.ndarray | int, M: int):
    """Map readouts ``y`` to grid indices ``min(y, M - y)`` in ``{0, ..., M/2}``."""
    y = np.asarray(y)
    return np.where(y <= M // 2, y, M - y)


def sample_qpe(
    theta_a: float, m: int, n_shots: int, rng: np.random.Generator | None
) -> np.ndarray:
    """Counts over ``y = 0..M-1`` (expected counts when ``rng`` is None)."""
    if n_shots < 1:
        raise ValueError(f"n_shots must be positive, got {n_shots}")
    probs = qpe_distribution(theta_a, m)
    probs = probs / probs.sum()
    if rng is None:
        return n_shots * probs
    return rng.multinomial(n_shots, probs)
