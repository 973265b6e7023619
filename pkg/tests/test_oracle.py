import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iqae.oracle import (
    AmplitudeProblem,
    fold_outcomes,
    grover_success_prob,
    make_rng,
    qpe_distribution,
    sample_grover,
    sample_qpe,
)


def test_problem_angle():
    p = AmplitudeProblem(0.3)
    assert math.sin(p.theta_a) ** 2 == pytest.approx(0.3, abs=1e-12)
    assert AmplitudeProblem(0.0).theta_a == 0.0
    assert AmplitudeProblem(1.0).theta_a == math.pi / 2


@pytest.mark.parametrize("bad", [-0.1, 1.0000001, float("nan")])
def test_problem_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        AmplitudeProblem(bad)


def test_grover_examples():
    assert grover_success_prob(AmplitudeProblem(0.5), 0) == pytest.approx(0.5, abs=1e-15)
    assert grover_success_prob(AmplitudeProblem(1.0), 7) == pytest.approx(1.0, abs=1e-15)
    # sin^2(3x) = s^2 (3 - 4 s^2)^2 = 0.3 * 1.8^2
    assert grover_success_prob(AmplitudeProblem(0.3), 1) == pytest.approx(0.972, abs=1e-14)
    with pytest.raises(ValueError):
        grover_success_prob(AmplitudeProblem(0.3), -1)


def test_grover_matches_extended_precision():
    mpmath.mp.dps = 40
    rng = np.random.default_rng(2024)
    worst = 0.0
    for a, k in zip(rng.random(10_000), rng.integers(0, 10**6 + 1, 10_000)):
        problem = AmplitudeProblem(float(a))
        ref = mpmath.sin((2 * int(k) + 1) * mpmath.mpf(problem.theta_a)) ** 2
        worst = max(worst, abs(grover_success_prob(problem, int(k)) - float(ref)))
    assert worst < 1e-12


def test_sample_grover_degenerate():
    rng = make_rng(5)
    assert sample_grover(AmplitudeProblem(0.0), 11, 100, rng).ones == 0
    assert sample_grover(AmplitudeProblem(1.0), 11, 100, rng).ones == 100
    with pytest.raises(ValueError):
        sample_grover(AmplitudeProblem(0.5), 0, 0, rng)


def test_sample_grover_frequency_three_sigma():
    tally = sample_grover(AmplitudeProblem(0.5), 0, 10**6, make_rng(11))
    assert tally.shots == 10**6
    assert 0.4985 <= tally.fraction <= 0.5015


def test_sample_grover_noiseless_is_expectation():
    tally = sample_grover(AmplitudeProblem(0.3), 1, 1000, None)
    assert tally.ones == pytest.approx(972.0)


def test_seed_reproducibility():
    p = AmplitudeProblem(0.37)
    a = [sample_grover(p, k, 100, make_rng(3, 9)).ones for k in range(20)]
    b = [sample_grover(p, k, 100, make_rng(3, 9)).ones for k in range(20)]
    assert a == b
    assert make_rng(3, 9).integers(1 << 62) != make_rng(3, 10).integers(1 << 62)


def test_qpe_m1_half_half():
    np.testing.assert_allclose(qpe_distribution(math.pi / 4, 1), [0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_qpe_on_grid_point_mass(m):
    M = 1 << m
    for y_star in range(M // 2 + 1):
        probs = qpe_distribution(math.pi * y_star / M, m)
        folded = np.zeros(M // 2 + 1)
        np.add.at(folded, fold_outcomes(np.arange(M), M), probs)
        assert folded[y_star] == pytest.approx(1.0, abs=1e-12)
        assert probs[y_star] + (probs[M - y_star] if 0 < y_star < M // 2 else 0) == pytest.approx(1.0)


def test_qpe_normalization_and_mirror():
    rng = np.random.default_rng(7)
    for m in range(1, 11):
        M = 1 << m
        for theta in rng.uniform(0, math.pi / 2, 100):
            probs = qpe_distribution(float(theta), m)
            assert abs(probs.sum() - 1.0) < 1e-10
            y = np.arange(1, M)
            y = y[y != M // 2]
            np.testing.assert_allclose(probs[y], probs[M - y], atol=1e-14)


def test_qpe_matches_amplitude_sum():
    # independent route: ancilla amplitudes of the two eigen-components
    m, theta = 4, 0.6123
    M = 1 << m
    y = np.arange(M)
    j = np.arange(M)
    probs = np.zeros(M)
    for sign in (+1, -1):
        phase = np.exp(2j * sign * theta * j)
        comp = np.array([np.sum(phase * np.exp(-2j * np.pi * yy * j / M)) / M for yy in y])
        probs += 0.5 * np.abs(comp) ** 2
    np.testing.assert_allclose(qpe_distribution(theta, m), probs, atol=1e-13)


def test_qpe_rejects_bad_m():
    for m in (0, 31, 2.5):
        with pytest.raises(ValueError):
            qpe_distribution(0.3, m)


def test_sample_qpe_conservation_and_grid():
    counts = sample_qpe(math.asin(math.sqrt(0.3)), 3, 25, make_rng(1))
    assert counts.sum() == 25 and counts.shape == (8,)
    on_grid = sample_qpe(math.pi * 3 / 16, 4, 50, make_rng(2))
    assert on_grid[3] + on_grid[13] == 50


def test_sample_qpe_frequencies():
    theta = math.pi / 4
    counts = sample_qpe(theta, 4, 10**5, make_rng(4))
    np.testing.assert_allclose(counts / 1e5, qpe_distribution(theta, 4), atol=0.01)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.integers(0, 10**4), st.integers(1, 10**4), st.integers(0, 2**32))
def test_sample_grover_bounds(a, k, n, seed):
    tally = sample_grover(AmplitudeProblem(a), k, n, make_rng(seed))
    assert 0 <= tally.ones <= tally.shots == n
