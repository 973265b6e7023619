"""Benchmark harness and command line interface.

Subcommands::

    iqae-bench run       one estimation, one CSV row
    iqae-bench sweep     grid over a, epsilon, alpha with repetitions
    iqae-bench kschedule growth ratios K_{i+1}/K_i per iteration
    iqae-bench compare   error against oracle calls for every algorithm

Every random row draws from ``make_rng(seed, row_index)``; rows are written
in row order whatever the worker count.
"""

from __future__ import annotations

import argparse
import csv
import math
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Sequence, TextIO

import numpy as np

from .baselines import run_mc, run_mlae, run_qae_mle
from .confint import chi2_quantile_1dof
from .estimator import IqaeConfig, _log_factor, run_iqae
from .oracle import AmplitudeProblem, make_rng

ALGORITHMS = ("iqae", "mlae", "qae", "mc")
SWEEP_SCHEMA = "iqae-bench/sweep-row/v1"
KSCHEDULE_SCHEMA = "iqae-bench/kschedule/v1"
COMPARE_SCHEMA = "iqae-bench/compare-row/v1"


@dataclass(frozen=True)
class SweepSpec:
    a_values: tuple[float, ...]
    epsilons: tuple[float, ...]
    alphas: tuple[float, ...]
    n_shots: int = 100
    repetitions: int = 1
    ci_method: str = "clopper_pearson"
    seed: int = 0
    algorithm: str = "iqae"
    min_ratio: float = 2.0

    def __post_init__(self):
        if not self.a_values or not self.epsilons or not self.alphas:
            raise ValueError("a_values, epsilons and alphas must be nonempty")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be at least 1, got {self.repetitions}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")

    def cells(self) -> list[tuple[float, float, float, int]]:
        return [
            (a, eps, alpha, rep)
            for eps in self.epsilons
            for alpha in self.alphas
            for a in self.a_values
            for rep in range(self.repetitions)
        ]


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    a: float
    epsilon: float
    alpha: float
    seed_index: int
    n_oracle: int
    interval_lo: float
    interval_hi: float
    covered: bool
    overhead: float
    wall_time: float


@dataclass(frozen=True)
class CompareRow:
    algorithm: str
    budget: int
    knob: float
    seed_index: int
    n_oracle: int
    estimate: float
    interval_lo: float
    interval_hi: float
    half_width: float
    covered: bool
    wall_time: float


# --- parameter mapping -----------------------------------------------------------


def m_for_epsilon(epsilon: float) -> int:
    """Smallest ancilla count whose grid spacing ``pi / 2**m`` is at most ``epsilon``."""
    return max(1, math.ceil(math.log2(math.pi / epsilon)))


def mc_samples_for_epsilon(epsilon: float, alpha: float) -> int:
    """Worst-case (a = 1/2) normal-approximation sample size for half-width ``epsilon``."""
    return max(1, math.ceil(chi2_quantile_1dof(1.0 - alpha) / (4.0 * epsilon * epsilon)))


def m_for_budget(budget: int, n_shots: int) -> int:
    """Largest ``m`` whose ``n_shots * (2**m - 1)`` calls fit in ``budget`` (at least 1)."""
    return max(1, int(math.floor(math.log2(budget / n_shots + 1))))


def iqae_epsilon_for_budget(budget: int, alpha: float, overhead: float = 4.0) -> float:
    """Target ``epsilon`` whose nominal cost ``overhead * log_factor / epsilon`` equals ``budget``."""
    lo, hi = 1e-12, math.pi / 8 * (1 - 1e-9)

    def cost(eps: float) -> float:
        try:
            return overhead * _log_factor(eps, alpha) / eps
        except ValueError:
            return 0.0

    if cost(hi) >= budget:
        return hi
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if cost(mid) > budget:
            lo = mid
        else:
            hi = mid
    return hi


# --- single estimation -----------------------------------------------------------


def estimate_once(
    algorithm: str,
    a: float,
    epsilon: float,
    alpha: float,
    rng: np.random.Generator,
    *,
    n_shots: int = 100,
    ci_method: str = "clopper_pearson",
    min_ratio: float = 2.0,
    m: int | None = None,
    n_samples: int | None = None,
):
    """Run one algorithm; returns ``(estimate, interval, n_oracle)``."""
    problem = AmplitudeProblem(a)
    if algorithm == "iqae":
        cfg = IqaeConfig(epsilon, alpha, n_shots, ci_method, min_ratio)
        res = run_iqae(cfg, problem, rng)
        return res.estimate, res.a_interval, res.n_oracle
    if algorithm == "mlae":
        res = run_mlae(problem, m or m_for_epsilon(epsilon), n_shots, alpha, rng)
    elif algorithm == "qae":
        res = run_qae_mle(problem, m or m_for_epsilon(epsilon), n_shots, alpha, rng)
    elif algorithm == "mc":
        res = run_mc(problem, n_samples or mc_samples_for_epsilon(epsilon, alpha), alpha, rng)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return res.estimate, res.a_interval, res.n_oracle


def _overhead(n_oracle: int, epsilon: float, alpha: float) -> float:
    return n_oracle / (_log_factor(epsilon, alpha) / epsilon)


def run_row(
    algorithm: str,
    a: float,
    epsilon: float,
    alpha: float,
    seed: int,
    seed_index: int,
    **kwargs,
) -> SweepRow:
    start = time.perf_counter()
    _, interval, n_oracle = estimate_once(algorithm, a, epsilon, alpha, make_rng(seed, seed_index), **kwargs)
    wall = time.perf_counter() - start
    return SweepRow(
        algorithm=algorithm,
        a=a,
        epsilon=epsilon,
        alpha=alpha,
        seed_index=seed_index,
        n_oracle=int(n_oracle),
        interval_lo=interval.lo,
        interval_hi=interval.hi,
        covered=interval.lo <= a <= interval.hi,
        overhead=_overhead(n_oracle, epsilon, alpha),
        wall_time=wall,
    )


# --- CSV ------------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(rows: Iterable, row_type: type, schema: str, out: TextIO) -> None:
    out.write(f"# schema={schema}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([f.name for f in fields(row_type)])
    for row in rows:
        writer.writerow([_fmt(v) for v in astuple(row)])


def read_csv(source: TextIO | str, row_type: type) -> list:
    """Parse a CSV written by ``write_csv`` back into ``row_type`` instances."""
    if isinstance(source, str):
        with open(source, newline="") as fh:
            return read_csv(fh, row_type)
    lines = [line for line in source if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    casts = {f.name: f.type for f in fields(row_type)}
    if header != list(casts):
        raise ValueError(f"unexpected header {header}")
    conv = {"int": int, "float": float, "str": str, "bool": lambda s: s == "1"}
    return [row_type(*(conv[casts[name]](v) for name, v in zip(header, rec))) for rec in reader]


# --- sweep -----------------------------------------------------------------------------


def _sweep_task(args):
    spec, index, (a, eps, alpha, _) = args
    return run_row(
        spec.algorithm,
        a,
        eps,
        alpha,
        spec.seed,
        index,
        n_shots=spec.n_shots,
        ci_method=spec.ci_method,
        min_ratio=spec.min_ratio,
    )


def _map_ordered(func, tasks: list, workers: int) -> list:
    if workers <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (8 * workers))))


def sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    tasks = [(spec, i, cell) for i, cell in enumerate(spec.cells())]
    return _map_ordered(_sweep_task, tasks, workers)


@dataclass(frozen=True)
class SweepSummary:
    epsilon: float
    alpha: float
    n_rows: int
    mean_overhead: float
    max_overhead: float
    coverage: float


def summarize(rows: Sequence[SweepRow]) -> list[SweepSummary]:
    """Mean and worst overhead plus empirical coverage per ``(epsilon, alpha)``."""
    groups: dict[tuple[float, float], list[SweepRow]] = {}
    for row in rows:
        groups.setdefault((row.epsilon, row.alpha), []).append(row)
    return [
        SweepSummary(
            epsilon=eps,
            alpha=alpha,
            n_rows=len(group),
            mean_overhead=statistics.fmean(r.overhead for r in group),
            max_overhead=max(r.overhead for r in group),
            coverage=sum(r.covered for r in group) / len(group),
        )
        for (eps, alpha), group in groups.items()
    ]


# --- K schedule ------------------------------------------------------------------------


@dataclass(frozen=True)
class KScheduleRow:
    iteration: int
    count: int
    mean: float
    std: float
    min: float
    max: float
    first_round: int


def k_ratios(result) -> list[tuple[float, bool]]:
    """``(K_{i+1} / K_i, K_i in round one)`` for ``i = 0, 1, ...``.

    ``K_0 = 2`` is the initial power before any measurement, so the first
    entry is the forced repeat of ``K = 2`` at the first iteration.
    """
    Ks = [2] + [rec.K for rec in result.trace]
    rounds = [0] + [rec.round_index for rec in result.trace]
    return [(Ks[i + 1] / Ks[i], rounds[i] == 0) for i in range(len(Ks) - 1)]


def kschedule_ratios(
    a: float,
    epsilon: float,
    alpha: float,
    n_shots: int,
    repetitions: int,
    seed: int,
    ci_method: str = "clopper_pearson",
    min_ratio: float = 2.0,
) -> list[list[tuple[float, bool]]]:
    """Per-repetition ratio sequences from ``k_ratios``."""
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    cfg = IqaeConfig(epsilon, alpha, n_shots, ci_method, min_ratio)
    problem = AmplitudeProblem(a)
    return [k_ratios(run_iqae(cfg, problem, make_rng(seed, rep))) for rep in range(repetitions)]


def kschedule_table(ratios: Sequence[Sequence[tuple[float, bool]]]) -> list[KScheduleRow]:
    """Mean, std, min and max of ``K_{i+1} / K_i`` by iteration index across repetitions.

    ``first_round`` counts the repetitions in which ``K_i`` still belonged to
    round one.
    """
    per_iter: dict[int, list[float]] = {}
    first_round: dict[int, int] = {}
    for seq in ratios:
        for i, (ratio, in_first) in enumerate(seq):
            per_iter.setdefault(i, []).append(ratio)
            first_round[i] = first_round.get(i, 0) + in_first
    out = []
    for i in sorted(per_iter):
        vals = np.asarray(per_iter[i])
        out.append(
            KScheduleRow(
                iteration=i,
                count=len(vals),
                mean=float(vals.mean()),
                std=float(vals.std()),
                min=float(vals.min()),
                max=float(vals.max()),
                first_round=first_round[i],
            )
        )
    return out


def kschedule(a, epsilon, alpha, n_shots, repetitions, seed, ci_method="clopper_pearson", min_ratio=2.0):
    return kschedule_table(
        kschedule_ratios(a, epsilon, alpha, n_shots, repetitions, seed, ci_method, min_ratio)
    )


# --- algorithm comparison ----------------------------------------------------------


def _compare_task(args):
    algorithm, budget, a, alpha, n_shots, seed, index, overhead = args
    start = time.perf_counter()
    rng = make_rng(seed, index)
    if algorithm == "iqae":
        knob = iqae_epsilon_for_budget(budget, alpha, overhead)
        est, interval, calls = estimate_once("iqae", a, knob, alpha, rng, n_shots=n_shots)
    elif algorithm in ("mlae", "qae"):
        knob = m_for_budget(budget, n_shots)
        est, interval, calls = estimate_once(algorithm, a, 0.1, alpha, rng, n_shots=n_shots, m=knob)
    else:
        knob = budget
        est, interval, calls = estimate_once("mc", a, 0.1, alpha, rng, n_samples=budget)
    return CompareRow(
        algorithm=algorithm,
        budget=budget,
        knob=float(knob),
        seed_index=index,
        n_oracle=int(calls),
        estimate=est,
        interval_lo=interval.lo,
        interval_hi=interval.hi,
        half_width=interval.width / 2,
        covered=interval.lo <= a <= interval.hi,
        wall_time=time.perf_counter() - start,
    )


def compare(
    a: float,
    alpha: float,
    budgets: Sequence[int],
    seeds: int,
    seed: int,
    algorithms: Sequence[str] = ALGORITHMS,
    n_shots: int = 100,
    iqae_overhead: float = 4.0,
    workers: int = 1,
) -> list[CompareRow]:
    if any(b < 1 for b in budgets):
        raise ValueError("budgets must be positive")
    if seeds < 1:
        raise ValueError("need at least one seed per budget")
    tasks = []
    for algorithm in algorithms:
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        for budget in budgets:
            for s in range(seeds):
                tasks.append((algorithm, int(budget), a, alpha, n_shots, seed, len(tasks), iqae_overhead))
    return _map_ordered(_compare_task, tasks, workers)


@dataclass(frozen=True)
class BudgetPoint:
    algorithm: str
    budget: int
    mean_calls: float
    mean_half_width: float


def budget_points(rows: Sequence[CompareRow]) -> list[BudgetPoint]:
    groups: dict[tuple[str, int], list[CompareRow]] = {}
    for row in rows:
        groups.setdefault((row.algorithm, row.budget), []).append(row)
    return [
        BudgetPoint(alg, b, statistics.fmean(r.n_oracle for r in g), statistics.fmean(r.half_width for r in g))
        for (alg, b), g in groups.items()
    ]


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def fitted_slopes(rows: Sequence[CompareRow]) -> dict[str, float]:
    pts = budget_points(rows)
    out = {}
    for alg in dict.fromkeys(p.algorithm for p in pts):
        sel = [p for p in pts if p.algorithm == alg and p.mean_calls > 0]
        if len(sel) >= 2:
            out[alg] = loglog_slope([p.mean_calls for p in sel], [p.mean_half_width for p in sel])
    return out


def interpolate_error(points: Sequence[BudgetPoint], calls: float) -> float:
    """Log-log linear interpolation of half-width at ``calls`` (extrapolates at the ends)."""
    pts = sorted((p for p in points if p.mean_calls > 0), key=lambda p: p.mean_calls)
    lx = np.log([p.mean_calls for p in pts])
    ly = np.log([p.mean_half_width for p in pts])
    x = math.log(calls)
    j = int(np.clip(np.searchsorted(lx, x), 1, len(lx) - 1))
    w = (x - lx[j - 1]) / (lx[j] - lx[j - 1])
    return float(math.exp(ly[j - 1] + w * (ly[j] - ly[j - 1])))


# --- CLI ------------------------------------------------------------------------------


def _probability(text: str) -> float:
    value = float(text)
    if not (0.0 <= value <= 1.0):
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def _open_unit(text: str) -> float:
    value = float(text)
    if not (0.0 < value < 1.0):
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def _ratio(text: str) -> float:
    value = float(text)
    if not value > 1:
        raise argparse.ArgumentTypeError(f"ratio must exceed 1, got {text}")
    return value


def _ci(text: str) -> str:
    names = {"cp": "clopper_pearson", "chernoff": "chernoff"}
    if text not in names:
        raise argparse.ArgumentTypeError(f"invalid choice {text!r} (choose from chernoff, cp)")
    return names[text]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iqae-bench", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--shots", type=_positive_int, default=100)
    common.add_argument("--ci", type=_ci, default="cp", metavar="{chernoff,cp}")
    common.add_argument("--ratio", type=_ratio, default=2.0, help="minimum K growth ratio r")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="CSV destination (default stdout)")

    p = sub.add_parser("run", parents=[common], help="single estimation")
    p.add_argument("--algo", choices=ALGORITHMS, default="iqae")
    p.add_argument("--a", type=_probability, required=True)
    p.add_argument("--eps", type=_positive_float, default=1e-3)
    p.add_argument("--alpha", type=_open_unit, default=0.05)
    p.add_argument("--m", type=_positive_int, help="ancillas / schedule length for qae and mlae")
    p.add_argument("--samples", type=_positive_int, help="sample count for mc")
    p.add_argument("--index", type=int, default=0, help="row index for the derived seed")

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep")
    p.add_argument("--algo", choices=ALGORITHMS, default="iqae")
    p.add_argument("--a", type=_probability, nargs="+", help="amplitudes (default: i/20)")
    p.add_argument("--a-steps", type=_positive_int, help="use a = i/N for i = 0..N")
    p.add_argument("--eps", type=_positive_float, nargs="+", default=[1e-3, 1e-4])
    p.add_argument("--alpha", type=_open_unit, nargs="+", default=[0.01, 0.05, 0.1])
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--workers", type=_positive_int, default=1)

    p = sub.add_parser("kschedule", parents=[common], help="K growth per iteration")
    p.add_argument("--a", type=_probability, default=0.5)
    p.add_argument("--eps", type=_positive_float, default=1e-4)
    p.add_argument("--alpha", type=_open_unit, default=0.05)
    p.add_argument("--reps", type=int, default=200)

    p = sub.add_parser("compare", parents=[common], help="error against oracle calls")
    p.add_argument("--a", type=_probability, default=0.5)
    p.add_argument("--alpha", type=_open_unit, default=0.05)
    p.add_argument("--budgets", type=int, nargs="+",
                   default=[10**3, 3 * 10**3, 10**4, 3 * 10**4, 10**5, 3 * 10**5, 10**6])
    p.add_argument("--algos", choices=ALGORITHMS, nargs="+", default=list(ALGORITHMS))
    p.add_argument("--reps", type=int, default=20, help="seeds per budget")
    p.add_argument("--iqae-overhead", type=_positive_float, default=4.0)
    p.add_argument("--workers", type=_positive_int, default=1)
    return parser


def _emit(args, rows, row_type, schema) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, row_type, schema, fh)
    else:
        write_csv(rows, row_type, schema, sys.stdout)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    info = sys.stderr if not args.out else sys.stdout

    try:
        if args.command == "run":
            if args.algo == "iqae" and not args.eps < math.pi / 8:
                parser.error("--eps must be below pi/8 for iqae")
            row = run_row(
                args.algo, args.a, args.eps, args.alpha, args.seed, args.index,
                **_algo_kwargs(args),
            )
            _emit(args, [row], SweepRow, SWEEP_SCHEMA)

        elif args.command == "sweep":
            if args.reps < 1:
                parser.error("--reps must be at least 1")
            if args.a_steps:
                a_values = tuple(i / args.a_steps for i in range(args.a_steps + 1))
            else:
                a_values = tuple(args.a) if args.a else tuple(i / 20 for i in range(21))
            spec = SweepSpec(a_values, tuple(args.eps), tuple(args.alpha), args.shots, args.reps,
                             args.ci, args.seed, args.algo, args.ratio)
            rows = sweep(spec, args.workers)
            _emit(args, rows, SweepRow, SWEEP_SCHEMA)
            for s in summarize(rows):
                print(f"eps={s.epsilon:g} alpha={s.alpha:g} rows={s.n_rows} "
                      f"mean_overhead={s.mean_overhead:.3f} max_overhead={s.max_overhead:.3f} "
                      f"coverage={s.coverage:.4f}", file=info)

        elif args.command == "kschedule":
            if args.reps < 1:
                parser.error("--reps must be at least 1")
            rows = kschedule(args.a, args.eps, args.alpha, args.shots, args.reps, args.seed, args.ci, args.ratio)
            _emit(args, rows, KScheduleRow, KSCHEDULE_SCHEMA)

        elif args.command == "compare":
            if args.reps < 1:
                parser.error("--reps must be at least 1")
            if any(b < 1 for b in args.budgets):
                parser.error("--budgets must be positive")
            rows = compare(args.a, args.alpha, args.budgets, args.reps, args.seed, args.algos,
                           args.shots, args.iqae_overhead, args.workers)
            _emit(args, rows, CompareRow, COMPARE_SCHEMA)
            for alg, slope in fitted_slopes(rows).items():
                print(f"{alg}: log-log slope {slope:.3f}", file=info)
    except ValueError as exc:
        parser.error(str(exc))
    return 0


def _algo_kwargs(args) -> dict:
    kwargs = {"n_shots": args.shots}
    if args.algo == "iqae":
        kwargs.update(ci_method=args.ci, min_ratio=args.ratio)
    elif args.algo in ("mlae", "qae"):
        kwargs["m"] = args.m
    else:
        kwargs = {"n_samples": args.samples}
    return kwargs


if __name__ == "__main__":
    sys.exit(main())
