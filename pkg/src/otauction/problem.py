"""Transport instances, plans, price vectors, and the shared optimality checks.

A transport instance is a bipartite graph: sinks demand weight, sources supply
it, and every admissible arc carries a strictly negative cost. Solvers maximize
total plan cost (equivalently, minimize the positive cost obtained by flipping
signs). All indices are 0-based in this API; the problem file format is
1-based and converted at the I/O boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import InvalidProblemError, PlanError

# Relative tolerances used by validation and the optimality checks. Each is
# applied against max(1, scale) so tiny instances keep an absolute floor.
BALANCE_RTOL = 1e-9  # |sum(d) - sum(s)| vs total weight
EPS_CS_RTOL = 1e-12  # comparison slack vs max |cost|
GAP_CLAMP_RTOL = 1e-9  # negative-gap clamp vs |primal cost|
COMPLETE_RTOL = 1e-12  # per-sink delivery shortfall vs d_i


@dataclass(frozen=True)
class TransportProblem:
    """Immutable balanced transport instance.

    Attributes:
        num_sinks: number of demand vertices, indexed 0..num_sinks-1.
        num_sources: number of supply vertices, indexed 0..num_sources-1.
        demands: positive weight required by each sink.
        supplies: positive weight held by each source.
        arcs: (sink, source, cost) triples; costs are strictly negative and
            each (sink, source) pair appears at most once.

    Construction does not validate; call :func:`validate_problem` (solvers do
    this on entry). Derived arrays are cached and marked read-only, so a
    constructed instance is safe to share across threads for reading.
    """

    num_sinks: int
    num_sources: int
    demands: tuple[float, ...]
    supplies: tuple[float, ...]
    arcs: tuple[tuple[int, int, float], ...]

    @staticmethod
    def from_lists(
        demands: Sequence[float],
        supplies: Sequence[float],
        arcs: Iterable[tuple[int, int, float]],
    ) -> "TransportProblem":
        return TransportProblem(
            num_sinks=len(demands),
            num_sources=len(supplies),
            demands=tuple(float(d) for d in demands),
            supplies=tuple(float(s) for s in supplies),
            arcs=tuple((int(i), int(j), float(c)) for i, j, c in arcs),
        )

    @cached_property
    def demand_array(self) -> np.ndarray:
        a = np.asarray(self.demands, dtype=float)
        a.flags.writeable = False
        return a

    @cached_property
    def supply_array(self) -> np.ndarray:
        a = np.asarray(self.supplies, dtype=float)
        a.flags.writeable = False
        return a

    @cached_property
    def cost_matrix(self) -> np.ndarray:
        """Dense (num_sinks, num_sources) cost matrix, -inf where no arc."""
        m = np.full((self.num_sinks, self.num_sources), -np.inf)
        for i, j, c in self.arcs:
            m[i, j] = c
        m.flags.writeable = False
        return m

    @cached_property
    def arc_costs(self) -> dict[tuple[int, int], float]:
        return {(i, j): c for i, j, c in self.arcs}

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Sources admissible for each sink, in arc-list order."""
        adj: list[list[int]] = [[] for _ in range(self.num_sinks)]
        for i, j, _ in self.arcs:
            adj[i].append(j)
        return tuple(tuple(a) for a in adj)

    @cached_property
    def max_abs_cost(self) -> float:
        return max((abs(c) for _, _, c in self.arcs), default=0.0)

    @property
    def total_demand(self) -> float:
        return float(self.demand_array.sum())

    @property
    def total_supply(self) -> float:
        return float(self.supply_array.sum())


@dataclass(frozen=True)
class TransportPlan:
    """Raw plan: a multiset of (sink, source, quantity) triples.

    The same arc may appear several times; quantities are nonnegative.
    Auction claim lists produce this shape naturally.
    """

    triples: tuple[tuple[int, int, float], ...]

    @staticmethod
    def from_iter(entries: Iterable[tuple[int, int, float]]) -> "TransportPlan":
        return TransportPlan(tuple((int(i), int(j), float(q)) for i, j, q in entries))

    def __iter__(self) -> Iterator[tuple[int, int, float]]:
        return iter(self.triples)


@dataclass(frozen=True)
class SimplifiedPlan:
    """Aggregated plan: one strictly positive flow per used arc."""

    flows: Mapping[tuple[int, int], float]

    def __iter__(self) -> Iterator[tuple[int, int, float]]:
        for (i, j), q in self.flows.items():
            yield i, j, q

    def delivered(self, num_sinks: int) -> np.ndarray:
        out = np.zeros(num_sinks)
        for (i, _), q in self.flows.items():
            out[i] += q
        return out

    def shipped(self, num_sources: int) -> np.ndarray:
        out = np.zeros(num_sources)
        for (_, j), q in self.flows.items():
            out[j] += q
        return out


Plan = Union[TransportPlan, SimplifiedPlan]


@dataclass(frozen=True)
class Violation:
    """One validation failure: the field it concerns, an index when relevant,
    and a human-readable message."""

    field: str
    index: object
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_invalid(self) -> None:
        if self.violations:
            lines = "; ".join(v.message for v in self.violations[:8])
            more = "" if len(self.violations) <= 8 else f" (+{len(self.violations) - 8} more)"
            raise InvalidProblemError(f"invalid problem: {lines}{more}")


@dataclass(eq=False)
class SolveReport:
    """Result bundle shared by every solver entry point.

    Costs follow the internal maximization convention (negative numbers); the
    CLI re-negates for display. ``gap`` bounds suboptimality: the true optimum
    lies within [primal_cost, primal_cost + gap].
    """

    plan: SimplifiedPlan
    primal_cost: float
    prices: np.ndarray
    dual: float
    gap: float
    iterations: int
    bids: int
    elapsed: float
    epsilon_final: float
    algorithm: str = "general-auction"


def validate_problem(problem: TransportProblem) -> ValidationReport:
    """Structural validation: positive weights, balance, negative costs,
    index ranges, no duplicate arcs, and a nonempty source set per sink."""
    v: list[Violation] = []
    if problem.num_sinks <= 0:
        v.append(Violation("num_sinks", None, "num_sinks must be positive"))
    if problem.num_sources <= 0:
        v.append(Violation("num_sources", None, "num_sources must be positive"))
    if len(problem.demands) != problem.num_sinks:
        v.append(Violation("demands", None, "demands length != num_sinks"))
    if len(problem.supplies) != problem.num_sources:
        v.append(Violation("supplies", None, "supplies length != num_sources"))
    for i, d in enumerate(problem.demands):
        if not (d > 0.0 and math.isfinite(d)):
            v.append(Violation("demands", i, f"nonpositive demand at sink {i}: {d}"))
    for j, s in enumerate(problem.supplies):
        if not (s > 0.0 and math.isfinite(s)):
            v.append(Violation("supplies", j, f"nonpositive supply at source {j}: {s}"))

    seen: set[tuple[int, int]] = set()
    covered = [False] * max(problem.num_sinks, 1)
    for k, (i, j, c) in enumerate(problem.arcs):
        if not (0 <= i < problem.num_sinks and 0 <= j < problem.num_sources):
            v.append(Violation("arcs", k, f"arc {k} index out of range: ({i}, {j})"))
            continue
        if (i, j) in seen:
            v.append(Violation("arcs", k, f"duplicate arc at ({i}, {j})"))
        seen.add((i, j))
        if not (c < 0.0 and math.isfinite(c)):
            v.append(Violation("arcs", k, f"nonnegative cost at ({i}, {j}): {c}"))
        covered[i] = True
    for i in range(problem.num_sinks):
        if i < len(covered) and not covered[i]:
            v.append(Violation("arcs", i, f"sink {i} has no admissible source"))

    ld, ls = problem.total_demand, problem.total_supply
    if abs(ld - ls) > BALANCE_RTOL * max(1.0, max(ld, ls)):
        v.append(
            Violation("balance", None, f"unbalanced: total demand {ld!r} != total supply {ls!r}")
        )
    return ValidationReport(tuple(v))


def total_weight(problem: TransportProblem) -> float:
    """Total weight L moved by any complete plan. Errors if unbalanced."""
    ld, ls = problem.total_demand, problem.total_supply
    if abs(ld - ls) > BALANCE_RTOL * max(1.0, max(ld, ls)):
        raise InvalidProblemError(f"unbalanced problem: demand {ld!r} vs supply {ls!r}")
    return ld


def _iter_plan(plan: Plan) -> Iterator[tuple[int, int, float]]:
    if isinstance(plan, (TransportPlan, SimplifiedPlan)):
        return iter(plan)
    raise TypeError(f"not a plan: {type(plan).__name__}")


def primal_cost(problem: TransportProblem, plan: Plan) -> float:
    """Total cost of a plan under the maximization convention (a negative
    number for any nonempty plan). Errors if the plan uses a missing arc."""
    costs = problem.arc_costs
    total = 0.0
    for i, j, q in _iter_plan(plan):
        c = costs.get((i, j))
        if c is None:
            raise PlanError(f"plan entry ({i}, {j}) is not an arc of the problem")
        total += c * q
    return total


def simplify_plan(problem: TransportProblem, plan: TransportPlan) -> SimplifiedPlan:
    """Merge duplicate-arc triples and drop zero quantities."""
    flows: dict[tuple[int, int], float] = {}
    costs = problem.arc_costs
    for i, j, q in plan:
        if (i, j) not in costs:
            raise PlanError(f"plan entry ({i}, {j}) is not an arc of the problem")
        if q < 0.0:
            raise PlanError(f"negative quantity on ({i}, {j}): {q}")
        if q > 0.0:
            flows[i, j] = flows.get((i, j), 0.0) + q
    return SimplifiedPlan(flows)


def as_price_vector(problem: TransportProblem, prices: Sequence[float] | np.ndarray) -> np.ndarray:
    """Normalize and check a source price vector: right length, finite, >= 0."""
    p = np.asarray(prices, dtype=float)
    if p.shape != (problem.num_sources,):
        raise InvalidProblemError(
            f"price vector has shape {p.shape}, expected ({problem.num_sources},)"
        )
    if not np.all(np.isfinite(p)):
        raise InvalidProblemError("price vector has non-finite entries")
    if np.any(p < 0.0):
        j = int(np.argmin(p))
        raise InvalidProblemError(f"negative price at source {j}: {p[j]}")
    return p


def sink_expense(problem: TransportProblem, prices: np.ndarray) -> np.ndarray:
    """Best net value per sink: max over admissible sources of cost - price."""
    p = as_price_vector(problem, prices)
    x = np.max(problem.cost_matrix - p[None, :], axis=1)
    if not np.all(np.isfinite(x)):
        i = int(np.argmin(x))
        raise InvalidProblemError(f"sink {i} has no admissible source")
    return x


def dual_profit(problem: TransportProblem, prices: np.ndarray) -> float:
    """Dual objective at the given prices.

    For every nonnegative price vector this upper-bounds the optimal primal
    cost (weak duality with the per-sink expense as the implied dual value).
    """
    p = as_price_vector(problem, prices)
    x = sink_expense(problem, p)
    return float(problem.demand_array @ x + problem.supply_array @ p)


def check_epsilon_cs(
    problem: TransportProblem,
    plan: Plan,
    prices: np.ndarray,
    epsilon: float,
) -> tuple[bool, list[tuple[int, int, float]]]:
    """Check relaxed complementary slackness for every positive plan entry.

    An entry (i, j, q) complies when the sink's best expense exceeds its
    realized expense c_ij - p_j by at most epsilon, up to a small additive
    slack scaled by the largest cost magnitude. Returns (ok, violations),
    where each violation is (sink, source, excess beyond epsilon).
    """
    p = as_price_vector(problem, prices)
    x = sink_expense(problem, p)
    slack = EPS_CS_RTOL * max(1.0, problem.max_abs_cost)
    costs = problem.arc_costs
    bad: list[tuple[int, int, float]] = []
    for i, j, q in _iter_plan(plan):
        if q <= 0.0:
            continue
        c = costs.get((i, j))
        if c is None:
            raise PlanError(f"plan entry ({i}, {j}) is not an arc of the problem")
        excess = (x[i] - epsilon) - (c - p[j])
        if excess > slack:
            bad.append((i, j, float(excess)))
    return (not bad), bad


def plan_is_complete(problem: TransportProblem, plan: Plan) -> bool:
    """True when every sink receives its demand, up to the completeness dust
    tolerance per sink."""
    delivered = np.zeros(problem.num_sinks)
    for i, _, q in _iter_plan(plan):
        delivered[i] += q
    tol = COMPLETE_RTOL * np.maximum(1.0, problem.demand_array)
    return bool(np.all(delivered >= problem.demand_array - tol))


def duality_gap(problem: TransportProblem, plan: Plan, prices: np.ndarray) -> float:
    """Dual profit minus primal cost for a complete plan.

    The gap is a certificate: the optimal cost lies in
    [primal_cost, primal_cost + gap]. Tiny negative values (float noise) are
    clamped to zero; anything more negative indicates corrupt inputs and
    raises.
    """
    if not plan_is_complete(problem, plan):
        raise PlanError("duality_gap requires a complete plan")
    primal = primal_cost(problem, plan)
    gap = dual_profit(problem, prices) - primal
    if gap < 0.0:
        if gap >= -GAP_CLAMP_RTOL * max(1.0, abs(primal)):
            return 0.0
        raise InternalGapError(gap, primal)
    return float(gap)


class InternalGapError(PlanError):
    """Dual profit fell materially below the primal cost, which weak duality
    forbids for complete plans; inputs are inconsistent."""

    def __init__(self, gap: float, primal: float):
        super().__init__(
            f"negative duality gap {gap!r} (primal {primal!r}) exceeds the clamp tolerance"
        )
