"""Iterative quantum amplitude estimation with analytic oracles.

Includes the comparison baselines (classical Monte Carlo, MLAE, canonical
QAE with maximum-likelihood post-processing) and a benchmark harness.
"""

from ._accel import backend
from .baselines import (
    BaselineResult,
    QaeSampleSet,
    ScheduleRecord,
    mlae_loglik,
    qae_likelihood,
    qae_loglik,
    run_mc,
    run_mlae,
    run_qae_mle,
)
from .confint import (
    BinomialTally,
    Interval01,
    LikelihoodInterval,
    chernoff_interval,
    chi2_quantile_1dof,
    clopper_pearson_interval,
    likelihood_ratio_interval,
    regularized_incomplete_beta,
)
from .estimator import (
    AngleInterval,
    ConvergenceError,
    EstimationResult,
    IqaeConfig,
    IterationRecord,
    find_next_k,
    invert_to_scaled_angle,
    max_rounds,
    n_max,
    oracle_call_bound,
    overhead_statistic,
    run_iqae,
    update_theta_interval,
)
from .oracle import (
    AmplitudeProblem,
    grover_success_prob,
    make_rng,
    qpe_distribution,
    sample_grover,
    sample_qpe,
)

__version__ = "0.1.0"
