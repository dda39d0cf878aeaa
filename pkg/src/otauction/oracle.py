"""Exact reference solvers and result verification.

Two independent routes: `solve_exact` hands the transport LP to HiGHS and
returns an optimal basic solution; `enumerate_tiny` brute-forces instances
small enough to enumerate. `feasibility_check` is a plain bipartite max-flow
(Dinic) used as the cheap precheck before any auction run.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import InfeasibleProblemError, OracleBudgetError, OTAuctionError, PlanError
from .problem import (
    BALANCE_RTOL,
    SimplifiedPlan,
    SolveReport,
    TransportProblem,
    check_epsilon_cs,
    dual_profit,
    plan_is_complete,
    primal_cost,
    total_weight,
    validate_problem,
)

ORACLE_BUDGET_ENV = "OTAUCTION_ORACLE_BUDGET"
DEFAULT_ORACLE_BUDGET = 1_000_000  # max sink*source cells solve_exact accepts

_FLOW_RTOL = 1e-12


def oracle_budget() -> int:
    """Arc-count budget for exact solves; override via the environment."""
    raw = os.environ.get(ORACLE_BUDGET_ENV)
    if raw is None:
        return DEFAULT_ORACLE_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise OracleBudgetError(f"{ORACLE_BUDGET_ENV} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise OracleBudgetError(f"{ORACLE_BUDGET_ENV} must be positive, got {value}")
    return value


class _Dinic:
    """Max-flow with real capacities on a small static graph."""

    def __init__(self, n: int):
        self.n = n
        self.to: list[int] = []
        self.cap: list[float] = []
        self.head: list[list[int]] = [[] for _ in range(n)]

    def add_edge(self, u: int, v: int, cap: float) -> None:
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(cap)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0.0)

    def max_flow(self, s: int, t: int, tol: float) -> float:
        flow = 0.0
        while True:
            level = [-1] * self.n
            level[s] = 0
            queue = [s]
            for u in queue:
                for e in self.head[u]:
                    v = self.to[e]
                    if self.cap[e] > tol and level[v] < 0:
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[t] < 0:
                return flow
            it = [0] * self.n

            def dfs(u: int, pushed: float) -> float:
                if u == t:
                    return pushed
                while it[u] < len(self.head[u]):
                    e = self.head[u][it[u]]
                    v = self.to[e]
                    if self.cap[e] > tol and level[v] == level[u] + 1:
                        got = dfs(v, min(pushed, self.cap[e]))
                        if got > tol:
                            self.cap[e] -= got
                            self.cap[e ^ 1] += got
                            return got
                    it[u] += 1
                return 0.0

            while True:
                pushed = dfs(s, math.inf)
                if pushed <= tol:
                    break
                flow += pushed


def feasibility_check(problem: TransportProblem) -> bool:
    """True iff a complete plan exists: bipartite max-flow reaches the total
    weight within the balance tolerance."""
    L = total_weight(problem)
    tol = _FLOW_RTOL * max(1.0, L)
    n = problem.num_sinks + problem.num_sources + 2
    src = n - 2
    dst = n - 1
    g = _Dinic(n)
    for j, s in enumerate(problem.supplies):
        g.add_edge(src, j, s)
    for i, d in enumerate(problem.demands):
        g.add_edge(problem.num_sources + i, dst, d)
    for i, j, _ in problem.arcs:
        g.add_edge(j, problem.num_sources + i, math.inf)
    value = g.max_flow(src, dst, tol)
    return value >= L - BALANCE_RTOL * max(1.0, L)


@dataclass(frozen=True)
class OracleSolution:
    plan: SimplifiedPlan
    cost: float
    method: str  # "lp" or "enumeration"


def solve_exact(problem: TransportProblem, budget: int | None = None) -> OracleSolution:
    """Optimal transport plan via the LP relaxation (HiGHS, basic solution).

    The LP always has an integral-support optimal vertex for this problem
    class, and HiGHS is deterministic for a fixed instance. Raises over
    budget (sink*source cells) or on infeasible instances.
    """
    validate_problem(problem).raise_if_invalid()
    if budget is None:
        budget = oracle_budget()
    cells = problem.num_sinks * problem.num_sources
    if cells > budget:
        raise OracleBudgetError(
            f"instance has {cells} sink-source cells, over the exact-solve budget {budget}"
        )
    arcs = problem.arcs
    n = len(arcs)
    rows = np.empty(2 * n, dtype=np.int64)
    cols = np.empty(2 * n, dtype=np.int64)
    rows[:n] = [i for i, _, _ in arcs]
    rows[n:] = [problem.num_sinks + j for _, j, _ in arcs]
    cols[:n] = np.arange(n)
    cols[n:] = np.arange(n)
    a_eq = sp.coo_matrix(
        (np.ones(2 * n), (rows, cols)),
        shape=(problem.num_sinks + problem.num_sources, n),
    )
    b_eq = np.concatenate([problem.demand_array, problem.supply_array])
    # Maximize sum(c*f) == minimize sum(-c*f); -c is strictly positive.
    objective = np.array([-c for _, _, c in arcs])
    upper = [min(problem.demands[i], problem.supplies[j]) for i, j, _ in arcs]
    res = linprog(
        objective,
        A_eq=a_eq.tocsr(),
        b_eq=b_eq,
        bounds=list(zip([0.0] * n, upper)),
        method="highs",
    )
    if res.status == 2:
        raise InfeasibleProblemError("no complete plan exists")
    if res.status != 0:
        raise OTAuctionError(f"exact solve failed: {res.message}")
    flows: dict[tuple[int, int], float] = {}
    qtol = _FLOW_RTOL * max(1.0, total_weight(problem))
    for (i, j, _), q in zip(arcs, res.x):
        if q > qtol:
            flows[i, j] = float(q)
    return OracleSolution(SimplifiedPlan(flows), float(-res.fun), "lp")


_ENUM_UNIT_MAX = 8  # square unit-weight side
_ENUM_WEIGHT_MAX = 12  # integer total weight


def _is_integral(values, tol: float = 1e-9) -> bool:
    return all(abs(v - round(v)) <= tol for v in values)


def enumerate_tiny(problem: TransportProblem) -> OracleSolution:
    """Exhaustive optimum for tiny instances.

    Accepts square unit-weight problems up to 8x8 and integer-weight problems
    with total weight at most 12. The search assigns each sink's demand to its
    admissible sources one integer composition at a time.
    """
    validate_problem(problem).raise_if_invalid()
    unit = (
        problem.num_sinks == problem.num_sources
        and all(d == 1 for d in problem.demands)
        and all(s == 1 for s in problem.supplies)
    )
    L = total_weight(problem)
    integral = _is_integral(problem.demands) and _is_integral(problem.supplies)
    if not (
        (unit and problem.num_sinks <= _ENUM_UNIT_MAX)
        or (integral and round(L) <= _ENUM_WEIGHT_MAX)
    ):
        raise OracleBudgetError(
            "enumerate_tiny accepts unit-weight problems up to "
            f"{_ENUM_UNIT_MAX}x{_ENUM_UNIT_MAX} or integer weights with total "
            f"at most {_ENUM_WEIGHT_MAX}; got {problem.num_sinks}x"
            f"{problem.num_sources} with total weight {L!r}"
        )

    demands = [int(round(d)) for d in problem.demands]
    remaining = [int(round(s)) for s in problem.supplies]
    adjacency = problem.adjacency
    costs = problem.arc_costs
    best_cost = -math.inf
    best: dict[tuple[int, int], float] | None = None
    current: dict[tuple[int, int], int] = {}

    def splits(need: int, sources: tuple[int, ...]):
        # All ways to route `need` units through `sources` given remaining supply.
        if not sources:
            if need == 0:
                yield ()
            return
        j = sources[0]
        top = min(need, remaining[j])
        for take in range(top, -1, -1):
            for rest in splits(need - take, sources[1:]):
                yield ((j, take),) + rest if take else rest

    def walk(i: int, cost_so_far: float) -> None:
        nonlocal best_cost, best
        if i == problem.num_sinks:
            if cost_so_far > best_cost:
                best_cost = cost_so_far
                best = {k: float(v) for k, v in current.items()}
            return
        for split in splits(demands[i], adjacency[i]):
            added = 0.0
            for j, take in split:
                remaining[j] -= take
                current[i, j] = take
                added += costs[i, j] * take
            walk(i + 1, cost_so_far + added)
            for j, take in split:
                remaining[j] += take
                del current[i, j]

    walk(0, 0.0)
    if best is None:
        raise InfeasibleProblemError("no complete plan exists")
    return OracleSolution(SimplifiedPlan(best), best_cost, "enumeration")


@dataclass(frozen=True)
class VerifyVerdict:
    """Outcome of verifying a solve report against its problem.

    ``oracle_cost``/``oracle_ok`` are None when the exact solve was skipped
    (over budget). ``ok`` requires every performed check to pass.
    """

    plan_valid: bool
    complete: bool
    eps_cs_ok: bool
    gap: float | None
    gap_ok: bool
    oracle_cost: float | None
    oracle_ok: bool | None
    notes: tuple[str, ...]

    @property
    def ok(self) -> bool:
        checks = [self.plan_valid, self.complete, self.eps_cs_ok, self.gap_ok]
        if self.oracle_ok is not None:
            checks.append(self.oracle_ok)
        return all(checks)


def verify_report(
    problem: TransportProblem,
    report: SolveReport,
    epsilon: float,
    budget: int | None = None,
) -> VerifyVerdict:
    """Recompute every optimality check from raw data in the report.

    Nothing in the report besides the plan and prices is trusted: the gap and
    the relaxed-slackness flags are recomputed here. The exact oracle runs
    only when the instance fits the budget; otherwise the verdict carries a
    note and oracle fields stay None.
    """
    notes: list[str] = []
    L = total_weight(problem)
    try:
        cost = primal_cost(problem, report.plan)
        plan_valid = True
    except PlanError as exc:
        notes.append(str(exc))
        return VerifyVerdict(False, False, False, None, False, None, None, tuple(notes))

    complete = plan_is_complete(problem, report.plan)
    eps_ok, violations = check_epsilon_cs(problem, report.plan, report.prices, epsilon)
    if violations:
        notes.append(f"{len(violations)} relaxed-slackness violations")

    bound = L * epsilon
    gap: float | None = None
    gap_ok = False
    if complete:
        gap = float(dual_profit(problem, report.prices) - cost)
        gap_ok = gap <= bound + 1e-9 * max(1.0, bound)
        if gap < 0 and abs(gap) <= 1e-9 * max(1.0, abs(cost)):
            gap = 0.0
    else:
        notes.append("plan incomplete; gap not computed")

    oracle_cost: float | None = None
    oracle_ok: bool | None = None
    if budget is None:
        budget = oracle_budget()
    if problem.num_sinks * problem.num_sources <= budget:
        oracle_cost = solve_exact(problem, budget=budget).cost
        oracle_ok = abs(oracle_cost - cost) <= bound + 1e-9 * max(1.0, bound)
    else:
        notes.append("exact solve skipped: over budget")
    return VerifyVerdict(
        plan_valid=plan_valid,
        complete=complete,
        eps_cs_ok=eps_ok,
        gap=gap,
        gap_ok=gap_ok,
        oracle_cost=oracle_cost,
        oracle_ok=oracle_ok,
        notes=tuple(notes),
    )
