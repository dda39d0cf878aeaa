"""Unit-weight auction algorithms over expanded transport instances.

An integer transport instance expands into an assignment problem: each sink
becomes d_i identical persons, each source s_j identical object copies, and
every arc fans out to all copy pairs at the original cost. Three solvers run
on the expansion:

- assignment_auction: the classic forward auction. Treats every copy as a
  distinct object, so its price increments shrink as classes grow.
- auction_so: prices a whole similarity class at its cheapest sold copy and
  computes increments against the best class other than the winner, so
  duplicate copies never throttle the price rise.
- auction_sop: additionally bids for a whole person class at once, granting
  up to the class's remaining demand in one step.

All three resolve ties toward the lowest index and serve one bidder per
iteration, so runs are deterministic and comparable trace-for-trace.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import (
    ExpansionError,
    InfeasibleProblemError,
    InvalidProblemError,
    IterationLimitError,
    PlanError,
)
from .oracle import feasibility_check
from .problem import (
    SimplifiedPlan,
    TransportPlan,
    TransportProblem,
    simplify_plan,
    total_weight,
    validate_problem,
)

INTEGER_ATOL = 1e-9
DEFAULT_EXPANSION_CAP_BYTES = 256 * 1024 * 1024
ARC_BYTES = 24  # per expanded arc: endpoint ids plus the cost entry

BidLog = list  # entries (bidder, target, price); target is a copy or a class


@dataclass(frozen=True)
class ExpansionMap:
    """Copy-to-original index maps for one expansion."""

    problem: TransportProblem
    person_sink: np.ndarray  # person copy -> sink
    object_source: np.ndarray  # object copy -> source


@dataclass(frozen=True)
class AssignmentProblem:
    """Expanded unit-weight instance. Copies of one original vertex are a
    contiguous ascending index range; arcs stay implicit through the maps."""

    map: ExpansionMap
    person_offsets: np.ndarray  # sink i's persons: [person_offsets[i], person_offsets[i+1])
    object_offsets: np.ndarray
    predicted_arcs: int

    @property
    def problem(self) -> TransportProblem:
        return self.map.problem

    @property
    def num_persons(self) -> int:
        return int(self.map.person_sink.size)

    @property
    def num_objects(self) -> int:
        return int(self.map.object_source.size)

    @property
    def num_vertices(self) -> int:
        return self.num_persons + self.num_objects

    def predicted_arc_bytes(self) -> int:
        return ARC_BYTES * self.predicted_arcs


@dataclass(frozen=True)
class ClassicResult:
    """Outcome of one unit-weight auction run."""

    assignment: np.ndarray  # person copy -> object copy
    prices: np.ndarray  # per object copy
    iterations: int
    bids: int
    algorithm: str


def _require_integral(values, label: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if np.any(np.abs(arr - np.round(arr)) > INTEGER_ATOL):
        k = int(np.argmax(np.abs(arr - np.round(arr))))
        raise InvalidProblemError(
            f"{label}[{k}] = {arr[k]!r} is not an integer; "
            "the instance is not expandable as given"
        )
    return np.round(arr).astype(np.int64)


def expand_to_assignment(
    problem: TransportProblem,
    max_bytes: int = DEFAULT_EXPANSION_CAP_BYTES,
) -> tuple[AssignmentProblem, ExpansionMap]:
    """Expand an integer instance into its unit-weight equivalent.

    Rejects non-integer demands, supplies, or costs, and instances whose
    predicted per-arc storage exceeds max_bytes.
    """
    validate_problem(problem).raise_if_invalid()
    demands = _require_integral(problem.demands, "demand")
    supplies = _require_integral(problem.supplies, "supply")
    costs = np.asarray([c for _, _, c in problem.arcs])
    if np.any(np.abs(costs - np.round(costs)) > INTEGER_ATOL):
        k = int(np.argmax(np.abs(costs - np.round(costs))))
        i, j, c = problem.arcs[k]
        raise InvalidProblemError(
            f"cost on arc ({i}, {j}) = {c!r} is not an integer; "
            "the instance is not expandable as given"
        )
    predicted_arcs = sum(
        int(demands[i]) * int(supplies[j]) for i, j, _ in problem.arcs
    )
    total = int(demands.sum())
    predicted_bytes = ARC_BYTES * predicted_arcs
    if predicted_bytes > max_bytes:
        raise ExpansionError(
            f"expansion would need {2 * total} vertices and {predicted_arcs} arcs "
            f"(about {predicted_bytes} bytes of arc storage), over the "
            f"{max_bytes}-byte cap"
        )
    person_sink = np.repeat(np.arange(problem.num_sinks), demands)
    object_source = np.repeat(np.arange(problem.num_sources), supplies)
    person_offsets = np.concatenate(([0], np.cumsum(demands)))
    object_offsets = np.concatenate(([0], np.cumsum(supplies)))
    emap = ExpansionMap(problem=problem, person_sink=person_sink, object_source=object_source)
    ap = AssignmentProblem(
        map=emap,
        person_offsets=person_offsets,
        object_offsets=object_offsets,
        predicted_arcs=predicted_arcs,
    )
    return ap, emap


def collapse_assignment(assignment: np.ndarray, emap: ExpansionMap) -> SimplifiedPlan:
    """Aggregate a complete copy-level assignment back to original flows."""
    assignment = np.asarray(assignment)
    if assignment.ndim != 1 or assignment.size != emap.person_sink.size:
        raise PlanError("assignment length does not match the expansion")
    if np.any(assignment < 0):
        raise PlanError("incomplete assignment: some person has no object")
    triples = (
        (int(emap.person_sink[p]), int(emap.object_source[assignment[p]]), 1.0)
        for p in range(assignment.size)
    )
    return simplify_plan(emap.problem, TransportPlan.from_iter(triples))


def class_prices(ap: AssignmentProblem, prices: np.ndarray) -> np.ndarray:
    """Per-source lot price of a finished run: cheapest copy in each class."""
    return np.minimum.reduceat(prices, ap.object_offsets[:-1])


def _precheck(ap: AssignmentProblem, epsilon: float) -> float:
    if not (epsilon > 0.0 and np.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon!r}")
    if ap.num_persons != ap.num_objects:
        raise InvalidProblemError(
            f"expansion is lopsided: {ap.num_persons} persons vs {ap.num_objects} objects"
        )
    if not feasibility_check(ap.problem):
        raise InfeasibleProblemError("no complete assignment exists for this expansion")
    L = total_weight(ap.problem)
    return 2.0 * (ap.problem.max_abs_cost + L * epsilon + 1.0)


def assignment_auction(
    ap: AssignmentProblem,
    epsilon: float,
    max_iterations: int = 1_000_000_000,
    bid_log: BidLog | None = None,
) -> ClassicResult:
    """Classic forward auction on the expanded instance.

    The lowest-indexed unassigned person bids its best object up to within
    epsilon of the runner-up value, evicting the previous owner. With integer
    costs and epsilon < 1/n the final assignment is optimal.
    """
    sentinel = _precheck(ap, epsilon)
    n = ap.num_persons
    cost = ap.problem.cost_matrix
    obj_src = ap.map.object_source
    prices = np.zeros(n)
    assigned = np.full(n, -1, dtype=np.int64)
    owner = np.full(n, -1, dtype=np.int64)
    unassigned = list(range(n))
    bids = 0
    while unassigned:
        while unassigned and assigned[unassigned[0]] >= 0:
            heapq.heappop(unassigned)
        if not unassigned:
            break
        person = heapq.heappop(unassigned)
        if bids >= max_iterations:
            raise IterationLimitError(
                f"assignment auction hit the iteration cap ({max_iterations})"
            )
        values = cost[ap.map.person_sink[person]][obj_src] - prices
        best = int(np.argmax(values))
        best_val = float(values[best])
        values[best] = -np.inf
        runner_up = float(np.max(values))
        w = best_val - sentinel if np.isneginf(runner_up) else runner_up
        price = (float(cost[ap.map.person_sink[person], obj_src[best]]) - w) + epsilon
        previous = int(owner[best])
        if previous >= 0:
            assigned[previous] = -1
            heapq.heappush(unassigned, previous)
        owner[best] = person
        assigned[person] = best
        prices[best] = price
        bids += 1
        if bid_log is not None:
            bid_log.append((person, best, price))
    return ClassicResult(
        assignment=assigned,
        prices=prices,
        iterations=bids,
        bids=bids,
        algorithm="assignment-auction",
    )


def auction_so(
    ap: AssignmentProblem,
    epsilon: float,
    max_iterations: int = 1_000_000_000,
    bid_log: BidLog | None = None,
) -> ClassicResult:
    """Forward auction that treats each source's copies as one class.

    A class is quoted at its cheapest sold copy (the source's base price while
    none are sold), and the bid increment is measured against the best class
    other than the winner. Free copies sell lowest index first; otherwise the
    cheapest sold copy changes hands, oldest first on price ties.
    """
    sentinel = _precheck(ap, epsilon)
    problem = ap.problem
    n = ap.num_persons
    num_classes = problem.num_sources
    cost = problem.cost_matrix
    prices = np.zeros(n)
    quotes = np.zeros(num_classes)
    assigned = np.full(n, -1, dtype=np.int64)
    owner = np.full(n, -1, dtype=np.int64)
    free: list[list[int]] = [
        list(range(int(ap.object_offsets[j + 1]) - 1, int(ap.object_offsets[j]) - 1, -1))
        for j in range(num_classes)
    ]  # stored reversed so pop() yields the lowest copy id
    sold: list[list[tuple[float, int, int]]] = [[] for _ in range(num_classes)]
    unassigned = list(range(n))
    bids = 0
    seq = 0
    while unassigned:
        while unassigned and assigned[unassigned[0]] >= 0:
            heapq.heappop(unassigned)
        if not unassigned:
            break
        person = heapq.heappop(unassigned)
        if bids >= max_iterations:
            raise IterationLimitError(
                f"similar-objects auction hit the iteration cap ({max_iterations})"
            )
        values = cost[ap.map.person_sink[person]] - quotes
        best = int(np.argmax(values))
        best_val = float(values[best])
        values[best] = -np.inf
        runner_up = float(np.max(values))
        w = best_val - sentinel if np.isneginf(runner_up) else runner_up
        price = (float(cost[ap.map.person_sink[person], best]) - w) + epsilon
        if free[best]:
            copy = free[best].pop()
        else:
            _, _, copy = heapq.heappop(sold[best])
            previous = int(owner[copy])
            assigned[previous] = -1
            heapq.heappush(unassigned, previous)
        owner[copy] = person
        assigned[person] = copy
        prices[copy] = price
        seq += 1
        heapq.heappush(sold[best], (price, seq, copy))
        quotes[best] = sold[best][0][0]
        bids += 1
        if bid_log is not None:
            bid_log.append((person, best, price))
    return ClassicResult(
        assignment=assigned,
        prices=prices,
        iterations=bids,
        bids=bids,
        algorithm="auction-so",
    )


def auction_sop(
    ap: AssignmentProblem,
    epsilon: float,
    max_iterations: int = 1_000_000_000,
    bid_log: BidLog | None = None,
) -> ClassicResult:
    """Class-versus-class auction: one sink's unassigned persons bid together.

    The person class targets the best object class for as many copies as it
    still needs (capped by the class size) at one shared price. Eviction walks
    the sold copies cheapest first; reaching the bidder's own copy folds that
    copy back into the request instead of fighting over it.
    """
    sentinel = _precheck(ap, epsilon)
    problem = ap.problem
    n = ap.num_persons
    num_person_classes = problem.num_sinks
    num_classes = problem.num_sources
    cost = problem.cost_matrix
    class_size = np.diff(ap.object_offsets)
    prices = np.zeros(n)
    quotes = np.zeros(num_classes)
    assigned = np.full(n, -1, dtype=np.int64)
    owner = np.full(n, -1, dtype=np.int64)
    person_class = ap.map.person_sink
    waiting: list[list[int]] = [
        list(
            range(int(ap.person_offsets[i]), int(ap.person_offsets[i + 1]))
        )
        for i in range(num_person_classes)
    ]
    for w_heap in waiting:
        heapq.heapify(w_heap)
    free: list[list[int]] = [
        list(range(int(ap.object_offsets[j]), int(ap.object_offsets[j + 1])))
        for j in range(num_classes)
    ]
    for f_heap in free:
        heapq.heapify(f_heap)
    sold: list[list[tuple[float, int, int]]] = [[] for _ in range(num_classes)]
    bids = 0
    seq = 0
    pending = [i for i in range(num_person_classes) if waiting[i]]
    heapq.heapify(pending)
    while pending:
        while pending and not waiting[pending[0]]:
            heapq.heappop(pending)
        if not pending:
            break
        cls = pending[0]
        if bids >= max_iterations:
            raise IterationLimitError(
                f"similar-persons auction hit the iteration cap ({max_iterations})"
            )
        values = cost[cls] - quotes
        best = int(np.argmax(values))
        best_val = float(values[best])
        values[best] = -np.inf
        runner_up = float(np.max(values))
        w = best_val - sentinel if np.isneginf(runner_up) else runner_up
        price = (float(cost[cls, best]) - w) + epsilon
        need = min(len(waiting[cls]), int(class_size[best]))
        while len(free[best]) < need and sold[best] and sold[best][0][0] <= price:
            _, _, copy = heapq.heappop(sold[best])
            holder = int(owner[copy])
            if person_class[holder] == cls:
                need += 1
            assigned[holder] = -1
            owner[copy] = -1
            heapq.heappush(waiting[person_class[holder]], holder)
            if person_class[holder] != cls:
                heapq.heappush(pending, int(person_class[holder]))
            heapq.heappush(free[best], copy)
        granted = min(need, len(free[best]))
        for _ in range(granted):
            copy = heapq.heappop(free[best])
            person = heapq.heappop(waiting[cls])
            owner[copy] = person
            assigned[person] = copy
            prices[copy] = price
            seq += 1
            heapq.heappush(sold[best], (price, seq, copy))
        quotes[best] = sold[best][0][0] if sold[best] else 0.0
        bids += 1
        if bid_log is not None:
            bid_log.append((cls, best, price))
    return ClassicResult(
        assignment=assigned,
        prices=prices,
        iterations=bids,
        bids=bids,
        algorithm="auction-sop",
    )
