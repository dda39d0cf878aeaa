"""Benchmark harness: timing protocol, storage models, suites, power fits.

Storage figures are algorithmic estimates (counted structure sizes), not
allocator measurements: the auction model charges 24 bytes per arc, 8 bytes
per cached per-vertex scalar, and 32 per live claim at the run's peak; the
expansion model charges 24 bytes per predicted expanded arc plus 32 per unit
of weight for the copy-level bookkeeping. Timing uses a monotonic clock and
repeats each measurement until the total crosses a configurable floor,
reporting the mean.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .auction import AuctionConfig, PhaseSummary, ScalingSchedule, run_auction, run_scaled
from .classic import (
    assignment_auction,
    auction_so,
    auction_sop,
    class_prices,
    collapse_assignment,
    expand_to_assignment,
)
from .errors import InvalidProblemError
from .generators import (
    gen_assignment,
    gen_asymmetric,
    gen_real_valued,
    gen_weight_scaled,
)
from .oracle import solve_exact
from .problem import TransportProblem, dual_profit, primal_cost, total_weight

ARC_BYTES = 24
SCALAR_BYTES = 8
CLAIM_BYTES = 32

SUITES = ("assignment-scale", "asymmetric", "weight-scale", "fixed-ratio", "real-valued")

GA_ALGORITHMS = ("ga", "ga-scaled")
CLASSIC_ALGORITHMS = ("assignment", "so", "sop")
ALGORITHMS = GA_ALGORITHMS + CLASSIC_ALGORITHMS + ("exact",)


@dataclass(frozen=True)
class PowerFit:
    """Least-squares fit of seconds = a * scale**b in log-log space."""

    a: float
    b: float
    r_squared: float


@dataclass(frozen=True)
class BenchRecord:
    """One measured run."""

    suite: str
    scale: int
    algorithm: str
    elapsed: float
    storage_bytes: int
    iterations: int
    bids: int
    gap: float
    cost: float
    runs: int = 1
    worker: int = 0


def fit_power_law(points: Iterable[tuple[float, float]]) -> PowerFit:
    """Fit y = a * x**b by linear least squares on (log x, log y).

    Needs at least three strictly positive points. Noiseless inputs recover
    (a, b) exactly with r_squared 1; constant y gives b = 0.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValueError(f"power fit needs at least 3 points, got {len(pts)}")
    if any(x <= 0.0 or y <= 0.0 for x, y in pts):
        raise ValueError("power fit needs strictly positive data")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    b, log_a = np.polyfit(lx, ly, 1)
    residuals = ly - (log_a + b * lx)
    ss_res = float(np.dot(residuals, residuals))
    centered = ly - ly.mean()
    ss_tot = float(np.dot(centered, centered))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-18 else 0.0
    else:
        r2 = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return PowerFit(a=float(math.exp(log_a)), b=float(b), r_squared=r2)


def auction_storage_bytes(problem: TransportProblem, peak_claims: int) -> int:
    """Model of the general auction's working set at its claim peak."""
    per_vertex = 2 * problem.num_sinks + 3 * problem.num_sources
    return (
        ARC_BYTES * len(problem.arcs)
        + SCALAR_BYTES * per_vertex
        + CLAIM_BYTES * int(peak_claims)
    )


def expansion_storage_bytes(problem: TransportProblem) -> int:
    """Model of what the expanded assignment instance would occupy."""
    demands = np.asarray(problem.demands)
    supplies = np.asarray(problem.supplies)
    if np.any(np.abs(demands - np.round(demands)) > 1e-9) or np.any(
        np.abs(supplies - np.round(supplies)) > 1e-9
    ):
        raise InvalidProblemError("expansion storage is defined for integer weights only")
    d = np.round(demands).astype(np.int64)
    s = np.round(supplies).astype(np.int64)
    predicted_arcs = sum(int(d[i]) * int(s[j]) for i, j, _ in problem.arcs)
    return ARC_BYTES * predicted_arcs + CLAIM_BYTES * int(d.sum())


def time_call(
    fn: Callable[[], object], min_time: float = 1.0, max_repeats: int = 1000
) -> tuple[object, float, int]:
    """Run fn until the accumulated wall time crosses min_time (at least
    once); return (last result, mean seconds, repeat count)."""
    total = 0.0
    runs = 0
    result = None
    while True:
        start = time.perf_counter()
        result = fn()
        total += time.perf_counter() - start
        runs += 1
        if total >= min_time or runs >= max_repeats:
            break
    return result, total / runs, runs


def _solve_ga(problem: TransportProblem, epsilon: float, scaled: bool) -> dict:
    peak = 0

    def watch(summary: PhaseSummary) -> None:
        nonlocal peak
        peak = max(peak, summary.live_claims)

    config = AuctionConfig(epsilon=epsilon)
    if scaled:
        report = run_scaled(problem, config, trace=watch)
    else:
        report = run_auction(problem, config, trace=watch)
    return {
        "cost": report.primal_cost,
        "gap": report.gap,
        "iterations": report.iterations,
        "bids": report.bids,
        "storage": auction_storage_bytes(problem, peak),
    }


def _solve_classic(problem: TransportProblem, algorithm: str, epsilon: float) -> dict:
    ap, emap = expand_to_assignment(problem)
    solver = {
        "assignment": assignment_auction,
        "so": auction_so,
        "sop": auction_sop,
    }[algorithm]
    result = solver(ap, epsilon)
    plan = collapse_assignment(result.assignment, emap)
    cost = primal_cost(problem, plan)
    lot_prices = class_prices(ap, result.prices)
    gap = max(0.0, dual_profit(problem, lot_prices) - cost)
    return {
        "cost": cost,
        "gap": gap,
        "iterations": result.iterations,
        "bids": result.bids,
        "storage": ap.predicted_arc_bytes() + CLAIM_BYTES * ap.num_persons,
    }


def _solve_exact(problem: TransportProblem) -> dict:
    solution = solve_exact(problem)
    return {
        "cost": solution.cost,
        "gap": 0.0,
        "iterations": 0,
        "bids": 0,
        "storage": CLAIM_BYTES * 2 * len(problem.arcs),
    }


def solve_with(problem: TransportProblem, algorithm: str, epsilon: float) -> dict:
    """Run one algorithm; returns cost/gap/iterations/bids/storage."""
    if algorithm == "ga":
        return _solve_ga(problem, epsilon, scaled=False)
    if algorithm == "ga-scaled":
        return _solve_ga(problem, epsilon, scaled=True)
    if algorithm in CLASSIC_ALGORITHMS:
        return _solve_classic(problem, algorithm, epsilon)
    if algorithm == "exact":
        return _solve_exact(problem)
    raise ValueError(f"unknown algorithm {algorithm!r}; known: {', '.join(ALGORITHMS)}")


def bench_instance(
    problem: TransportProblem,
    suite: str,
    scale: int,
    algorithm: str,
    epsilon: float,
    min_time: float = 0.0,
    worker: int = 0,
) -> BenchRecord:
    outcome, elapsed, runs = time_call(
        lambda: solve_with(problem, algorithm, epsilon), min_time=min_time
    )
    return BenchRecord(
        suite=suite,
        scale=scale,
        algorithm=algorithm,
        elapsed=max(elapsed, 1e-12),
        storage_bytes=int(outcome["storage"]),
        iterations=int(outcome["iterations"]),
        bids=int(outcome["bids"]),
        gap=float(outcome["gap"]),
        cost=float(outcome["cost"]),
        runs=runs,
        worker=worker,
    )


def _fits(records: Sequence[BenchRecord]) -> dict[str, PowerFit]:
    out: dict[str, PowerFit] = {}
    for algorithm in sorted({r.algorithm for r in records}):
        mine = [r for r in records if r.algorithm == algorithm]
        if len({r.scale for r in mine}) >= 3:
            out[algorithm] = fit_power_law([(r.scale, r.elapsed) for r in mine])
    return out


def run_suite(
    suite: str,
    sizes: Sequence[int] | None = None,
    epsilon: float | None = None,
    seed: int = 0,
    min_time: float = 0.0,
    algorithms: Sequence[str] | None = None,
) -> tuple[list[BenchRecord], dict[str, PowerFit]]:
    """Run one named suite at (desk-scale) sizes; returns records and per-
    algorithm power fits over the scaling variable."""
    records: list[BenchRecord] = []
    if suite == "assignment-scale":
        sizes = list(sizes or (50, 100, 200))
        algorithms = list(algorithms or ("ga-scaled",))
        for n in sizes:
            problem = gen_assignment(n, seed=seed)
            eps = epsilon if epsilon is not None else 0.9 / n
            for alg in algorithms:
                records.append(
                    bench_instance(problem, suite, n, alg, eps, min_time=min_time)
                )
    elif suite == "asymmetric":
        sizes = list(sizes or (60, 120, 240))
        algorithms = list(algorithms or ("ga-scaled",))
        for n in sizes:
            m = max(1, n // 2)
            problem = gen_asymmetric(n, M=m, weight_mode="range-1-19", seed=seed)
            L = total_weight(problem)
            eps = epsilon if epsilon is not None else 0.9 / L
            for alg in algorithms:
                records.append(
                    bench_instance(problem, suite, n, alg, eps, min_time=min_time)
                )
    elif suite == "weight-scale":
        sizes = list(sizes or (100, 200, 400, 700, 1000))
        algorithms = list(algorithms or ("ga", "so"))
        for L in sizes:
            problem = gen_weight_scaled(L, M=100, N=100, arcs=9000, seed=seed)
            eps = epsilon if epsilon is not None else 0.5
            for alg in algorithms:
                records.append(
                    bench_instance(problem, suite, L, alg, eps, min_time=min_time)
                )
    elif suite == "fixed-ratio":
        sizes = list(sizes or (30, 60, 120))
        algorithms = list(algorithms or ("ga", "sop"))
        for n in sizes:
            problem = gen_weight_scaled(
                2 * n, M=n, N=n, arcs=round(0.9 * n * n), seed=seed
            )
            eps = epsilon if epsilon is not None else 0.5
            for alg in algorithms:
                records.append(
                    bench_instance(problem, suite, n, alg, eps, min_time=min_time)
                )
    elif suite == "real-valued":
        sizes = list(sizes or (50, 100, 150))
        algorithms = list(algorithms or ("ga-scaled",))
        for n in sizes:
            problem = gen_real_valued(n, seed=seed)
            eps = epsilon if epsilon is not None else 0.75
            for alg in algorithms:
                records.append(
                    bench_instance(problem, suite, n, alg, eps, min_time=min_time)
                )
    else:
        raise ValueError(f"unknown suite {suite!r}; known: {', '.join(SUITES)}")
    return records, _fits(records)


def compare_algorithms(
    problems: Sequence[TransportProblem],
    algorithms: Sequence[str],
    epsilon: float,
    repetitions: int = 1,
    min_time: float = 0.0,
) -> tuple[list[BenchRecord], float, bool]:
    """Run every algorithm on every instance and check the costs agree.

    Two epsilon-bounded solvers may legitimately differ by up to L*epsilon
    each, so the agreement bound is L * (eps_a + eps_b) with exact counting
    as zero. Returns (records, worst relative discrepancy, all_within_bounds).
    """
    records: list[BenchRecord] = []
    ok = True
    worst = 0.0
    for idx, problem in enumerate(problems):
        L = total_weight(problem)
        costs: dict[str, float] = {}
        for alg in algorithms:
            rec = bench_instance(
                problem,
                suite="compare",
                scale=idx,
                algorithm=alg,
                epsilon=epsilon,
                min_time=max(min_time, 0.0),
            )
            if repetitions > 1:
                # repetition protocol: total time over n runs, reported as mean
                _, elapsed, runs = time_call(
                    lambda a=alg: solve_with(problem, a, epsilon),
                    min_time=float("inf"),
                    max_repeats=repetitions - 1,
                )
                rec = BenchRecord(
                    suite=rec.suite,
                    scale=rec.scale,
                    algorithm=rec.algorithm,
                    elapsed=(rec.elapsed * rec.runs + elapsed * runs) / (rec.runs + runs),
                    storage_bytes=rec.storage_bytes,
                    iterations=rec.iterations,
                    bids=rec.bids,
                    gap=rec.gap,
                    cost=rec.cost,
                    runs=rec.runs + runs,
                    worker=rec.worker,
                )
            records.append(rec)
            costs[alg] = rec.cost
        for a in algorithms:
            for b in algorithms:
                if a >= b:
                    continue
                slack_a = 0.0 if a == "exact" else L * epsilon
                slack_b = 0.0 if b == "exact" else L * epsilon
                bound = slack_a + slack_b
                diff = abs(costs[a] - costs[b])
                worst = max(worst, diff)
                if diff > bound * (1.0 + 1e-9) + 1e-9 * max(1.0, abs(costs[a])):
                    ok = False
    return records, worst, ok
