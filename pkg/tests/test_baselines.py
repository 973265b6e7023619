import math

import numpy as np
import pytest

from iqae.baselines import (
    QaeSampleSet,
    ScheduleRecord,
    golden_section_max,
    maximize_mlae,
    maximize_qae,
    median_grid_index,
    mlae_loglik,
    qae_likelihood,
    qae_loglik,
    run_mc,
    run_mlae,
    run_qae_mle,
)
from iqae.confint import BinomialTally
from iqae.oracle import AmplitudeProblem, make_rng, sample_qpe


def test_golden_section():
    x, fx = golden_section_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-9) and fx == pytest.approx(0.0, abs=1e-15)
    x, _ = golden_section_max(lambda t: t, 0.0, 1.0)
    assert x == 1.0


def test_mc_boundaries_and_width():
    alpha = 0.05
    zero = run_mc(AmplitudeProblem(0.0), 100, alpha, make_rng(1))
    assert zero.a_interval.lo == 0.0
    assert zero.a_interval.hi == pytest.approx(1 - (alpha / 2) ** 0.01, abs=1e-11)
    one = run_mc(AmplitudeProblem(1.0), 100, alpha, make_rng(1))
    assert one.a_interval.hi == 1.0
    assert one.a_interval.lo == pytest.approx((alpha / 2) ** 0.01, abs=1e-11)
    big = run_mc(AmplitudeProblem(0.5), 10**6, alpha, make_rng(2))
    assert big.a_interval.width == pytest.approx(0.00196, rel=0.1)
    assert big.n_oracle == 10**6


def test_mlae_loglik_single_record():
    full = [ScheduleRecord(0, BinomialTally(50, 50))]
    theta, _ = maximize_mlae(full)
    assert theta == pytest.approx(math.pi / 2, abs=1e-9)
    rec = [ScheduleRecord(0, BinomialTally(100, 37))]
    theta, _ = maximize_mlae(rec)
    assert theta == pytest.approx(math.asin(math.sqrt(0.37)), abs=1e-9)


def test_mlae_loglik_permutation_invariant_and_vectorized():
    recs = [ScheduleRecord(k, BinomialTally(100, h)) for k, h in [(1, 80), (2, 13), (4, 55)]]
    grid = np.linspace(0, math.pi / 2, 101)
    a = mlae_loglik(grid, recs)
    b = mlae_loglik(grid, recs[::-1])
    np.testing.assert_allclose(a, b, rtol=1e-13)
    assert mlae_loglik(0.4, recs) == pytest.approx(mlae_loglik(np.array([0.4]), recs)[0])
    assert np.isfinite(mlae_loglik(0.0, recs))


def test_mlae_two_records_match_dense_grid():
    recs = [ScheduleRecord(1, BinomialTally(100, 70)), ScheduleRecord(2, BinomialTally(100, 20))]
    theta, _ = maximize_mlae(recs)
    grid = np.linspace(0, math.pi / 2, 10**6)
    ref = grid[np.argmax(mlae_loglik(grid, recs))]
    assert abs(theta - ref) < 1e-6


def test_mlae_oracle_accounting_and_interval():
    res = run_mlae(AmplitudeProblem(0.5), 5, 100, 0.05, make_rng(3))
    assert res.n_oracle == 3100
    assert res.theta_hat in res.lr_interval
    assert res.estimate in res.a_interval


def test_mlae_beats_mc_on_average():
    p = AmplitudeProblem(0.5)
    mlae_err, mc_err = [], []
    for i in range(100):
        r = run_mlae(p, 5, 100, 0.05, make_rng(10, i))
        mlae_err.append(abs(r.estimate - p.a))
        mc = run_mc(p, r.n_oracle, 0.05, make_rng(11, i))
        mc_err.append(abs(mc.estimate - p.a))
    assert np.mean(mlae_err) < np.mean(mc_err)


def test_mlae_noiseless_rounded_tallies():
    p = AmplitudeProblem(0.3)
    recs = []
    for j in range(6):
        k = 1 << j
        q = math.sin((2 * k + 1) * p.theta_a) ** 2
        recs.append(ScheduleRecord(k, BinomialTally(10**5, round(10**5 * q))))
    theta, _ = maximize_mlae(recs, grid_n=100_000)
    assert abs(theta - p.theta_a) <= (math.pi / 2) / (100_000 - 1)


def test_qae_likelihood_normalized_and_on_grid():
    rng = np.random.default_rng(5)
    for m in (1, 2, 3, 5, 8):
        M = 1 << m
        for a in rng.random(20):
            total = sum(qae_likelihood(i, float(a), m) for i in range(M // 2 + 1))
            assert abs(total - 1) < 1e-10
        for i in range(M // 2 + 1):
            assert qae_likelihood(i, math.sin(math.pi * i / M) ** 2, m) == pytest.approx(1.0, abs=1e-12)
    assert qae_likelihood(0, 0.0, 3) == pytest.approx(1.0)
    assert qae_likelihood(4, 1.0, 3) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        qae_likelihood(5, 0.3, 3)


def test_median_grid_index():
    assert median_grid_index(np.array([1.0, 1.0, 0.0])) == 0
    assert median_grid_index(np.array([1.0, 2.0, 1.0])) == 1
    assert median_grid_index(np.array([0.0, 0.0, 3.0])) == 2


def test_qae_oracle_accounting():
    res = run_qae_mle(AmplitudeProblem(0.3), 3, 25, 0.05, make_rng(0))
    assert res.n_oracle == 25 * 7
    assert res.theta_hat in res.lr_interval
    assert res.estimate in res.a_interval


def test_qae_success_probability_on_grid():
    # a on the grid: the readout is exact, so the grid estimate is always right
    m, M = 3, 8
    a = math.sin(math.pi * 3 / M) ** 2
    runs = [run_qae_mle(AmplitudeProblem(a), m, 1, 0.05, make_rng(77, i)) for i in range(200)]
    assert all(abs(r.grid_estimate - a) < 1e-12 for r in runs)


def test_qae_single_shot_hits_nearest_grid_point_often():
    # off-grid: a single readout lands on one of the two nearest grid points
    # with probability at least 8/pi^2
    m, M = 3, 8
    a = 0.3
    t = math.asin(math.sqrt(a)) / math.pi
    near = {math.floor(t * M), math.ceil(t * M)}
    hits = 0
    for i in range(1000):
        counts = sample_qpe(math.asin(math.sqrt(a)), m, 1, make_rng(8, i))
        folded = QaeSampleSet(m, counts).folded()
        hits += int(np.argmax(folded)) in near
    assert hits / 1000 >= 8 / math.pi**2 - 3 * math.sqrt(0.81 * 0.19 / 1000)


def test_qae_mle_beats_grid_estimate():
    a = 0.3
    better = 0
    for i in range(1000):
        r = run_qae_mle(AmplitudeProblem(a), 3, 25, 0.05, make_rng(99, i))
        better += abs(r.estimate - a) < abs(r.grid_estimate - a)
    assert better / 1000 >= 0.6


def test_qae_mle_matches_dense_grid():
    samples = QaeSampleSet(4, sample_qpe(math.asin(math.sqrt(0.41)), 4, 200, make_rng(6)))
    theta, _ = maximize_qae(samples)
    grid = np.linspace(0, math.pi / 2, 10**6)
    ref = grid[np.argmax(qae_loglik(grid, samples))]
    assert abs(theta - ref) < 1e-6


def test_noiseless_limits():
    a = 0.3
    q = run_qae_mle(AmplitudeProblem(a), 3, 10**5, 0.05, None)
    assert abs(q.estimate - a) < 1e-6
    ml = run_mlae(AmplitudeProblem(a), 8, 10**5, 0.05, None)
    assert abs(ml.estimate - a) < 1e-6


def test_mc_slope():
    p = AmplitudeProblem(0.5)
    ns = np.array([10**3, 10**4, 10**5, 10**6])
    errs = []
    for n in ns:
        errs.append(np.mean([abs(run_mc(p, int(n), 0.05, make_rng(n, i)).estimate - 0.5) for i in range(200)]))
    slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.05)


def test_mlae_score_is_derivative():
    from iqae.baselines import mlae_score

    recs = [ScheduleRecord(k, BinomialTally(100, h)) for k, h in [(1, 80), (2, 13), (4, 55)]]
    ks = np.array([1, 2, 4])
    hits = np.array([80.0, 13.0, 55.0])
    shots = np.full(3, 100.0)
    for t in (0.2, 0.5, 1.1):
        h = 1e-6
        fd = (mlae_loglik(t + h, recs) - mlae_loglik(t - h, recs)) / (2 * h)
        assert mlae_score(t, ks, hits, shots) == pytest.approx(fd, rel=1e-6)
