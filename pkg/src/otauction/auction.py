"""Real-valued transport auction: bidding phases, claim lists, and scaling.

Sinks bid for lots of supply; each lot keeps a claim list ordered by bid
price. A bid names one lot, a price, and a quantity; resolution evicts the
cheapest claims until the bid is covered or the lot price passes the bid.
Iterating bid and resolution phases drives every sink's unsatisfied demand to
zero and ends with a plan whose duality gap is at most total_weight * epsilon.

Concurrency: a state object is single-owner mutable. The bidding phase reads
a price snapshot and could be evaluated in parallel; resolution must stay
sequential per lot.
"""

from __future__ import annotations

import enum
import heapq
import time
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    InfeasibleProblemError,
    InternalStateError,
    InvalidProblemError,
    IterationLimitError,
)
from .oracle import feasibility_check
from .problem import (
    SimplifiedPlan,
    SolveReport,
    TransportPlan,
    TransportProblem,
    check_epsilon_cs,
    as_price_vector,
    duality_gap,
    dual_profit,
    primal_cost,
    simplify_plan,
    total_weight,
    validate_problem,
)

SATISFIED_RTOL = 1e-12  # leftover demand below this fraction counts as satisfied
CONSERVATION_RTOL = 1e-9  # claimed supply vs delivered demand, per total weight
CLAIM_DUST_RTOL = 1e-12  # eviction remainder below this fraction of s_j is dust


class BidderStrategy(enum.Enum):
    """Which unsatisfied sinks bid in one iteration."""

    ALL_UNSATISFIED = "all"  # every unsatisfied sink, against one price snapshot
    SINGLE = "single"  # only the lowest-indexed unsatisfied sink


@dataclass(frozen=True)
class Bid:
    """One sink's offer: quantity units of the lot at the given price."""

    bidder: int
    lot: int
    price: float
    quantity: float


@dataclass(frozen=True)
class Claim:
    """Granted portion of a bid, held on a lot's claim list."""

    bidder: int
    price: float
    quantity: float


class ClaimList:
    """Claims on one lot, cheapest first; equal prices evict oldest first.

    Entries are only ever removed while they are the minimum, so a plain
    binary heap keyed by (price, insertion sequence) suffices; partial
    evictions mutate the minimum entry's quantity in place.
    """

    __slots__ = ("_heap",)

    def __init__(self) -> None:
        # entry layout: [price, seq, bidder, quantity]
        self._heap: list[list] = []

    def __len__(self) -> int:
        return len(self._heap)

    def insert(self, price: float, seq: int, bidder: int, quantity: float) -> None:
        heapq.heappush(self._heap, [price, seq, bidder, quantity])

    def peek_min(self) -> list | None:
        return self._heap[0] if self._heap else None

    def pop_min(self) -> list:
        return heapq.heappop(self._heap)

    def min_price(self, default: float) -> float:
        return self._heap[0][0] if self._heap else default

    def claims(self) -> tuple[Claim, ...]:
        return tuple(Claim(e[2], e[0], e[3]) for e in self._heap)

    def claimed_total(self) -> float:
        return sum(e[3] for e in self._heap)


@dataclass(frozen=True)
class AuctionConfig:
    """Tuning knobs for one auction run.

    absorb_own_claims keeps a rebidding sink from competing with itself: when
    eviction reaches the bidder's own cheapest claim, that claim's quantity is
    folded into the pending bid instead of being fought over. Correctness does
    not depend on it; disable to measure its effect.
    """

    epsilon: float
    initial_prices: tuple[float, ...] | None = None
    absorb_own_claims: bool = True
    bidder_strategy: BidderStrategy = BidderStrategy.ALL_UNSATISFIED
    max_iterations: int = 1_000_000_000  # backstop on processed bids and iterations
    satisfied_rtol: float = SATISFIED_RTOL
    validate_invariants: bool = False

    def __post_init__(self) -> None:
        if not (self.epsilon > 0.0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon!r}")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class ScalingSchedule:
    """Geometric epsilon schedule: epsilon_initial, /decay, ..., epsilon_final."""

    epsilon_initial: float
    epsilon_final: float
    decay: float = 4.0

    def __post_init__(self) -> None:
        if not (self.epsilon_final > 0.0 and self.epsilon_initial > 0.0):
            raise ValueError("schedule epsilons must be positive")
        if self.decay <= 1.0:
            raise ValueError("decay must exceed 1")

    @staticmethod
    def default_for(problem: TransportProblem, epsilon_final: float) -> "ScalingSchedule":
        start = max(problem.max_abs_cost / 2.0, epsilon_final)
        return ScalingSchedule(start, epsilon_final)

    def phases(self) -> list[float]:
        if self.epsilon_initial <= self.epsilon_final:
            return [self.epsilon_final]
        out = []
        eps = self.epsilon_initial
        while eps > self.epsilon_final * (1.0 + 1e-12):
            out.append(eps)
            eps /= self.decay
        out.append(self.epsilon_final)
        return out


@dataclass
class PhaseSummary:
    """Per-iteration trace record."""

    iteration: int
    epsilon: float
    bids: int
    evictions: int
    satisfied: int
    unsatisfied_total: float
    max_price_delta: float
    steady_price_violations: int
    live_claims: int


@dataclass(eq=False)
class AuctionState:
    """Mutable bookkeeping for one run. Create via init_state."""

    problem: TransportProblem
    prices: np.ndarray
    initial_prices: np.ndarray
    unsatisfied_demand: np.ndarray  # remaining demand per sink
    available_supply: np.ndarray  # unclaimed supply per lot
    claim_lists: list[ClaimList]
    satisfied_tol: np.ndarray
    sentinel_gap: float  # stand-in distance below best value for one-source sinks
    iterations: int = 0
    bids: int = 0
    seq: int = 0

    def unsatisfied_sinks(self) -> np.ndarray:
        return np.flatnonzero(self.unsatisfied_demand > self.satisfied_tol)

    def all_satisfied(self) -> bool:
        return bool(np.all(self.unsatisfied_demand <= self.satisfied_tol))

    def check_invariants(self) -> None:
        """Raise InternalStateError if the cached arrays disagree with the
        claim lists or conservation fails."""
        problem = self.problem
        delivered = np.zeros(problem.num_sinks)
        for j, cl in enumerate(self.claim_lists):
            claimed = cl.claimed_total()
            if claimed > problem.supplies[j] * (1.0 + 1e-9) + 1e-12:
                raise InternalStateError(f"lot {j} over-claimed: {claimed!r}")
            expect_s = problem.supplies[j] - claimed
            if abs(self.available_supply[j] - expect_s) > 1e-9 * max(1.0, problem.supplies[j]):
                raise InternalStateError(f"available supply drift on lot {j}")
            expect_p = cl.min_price(self.initial_prices[j])
            if self.prices[j] != expect_p:
                raise InternalStateError(f"price cache drift on lot {j}")
            for claim in cl.claims():
                if claim.quantity <= 0.0:
                    raise InternalStateError(f"nonpositive claim on lot {j}")
                delivered[claim.bidder] += claim.quantity
        expect_d = problem.demand_array - delivered
        if np.max(np.abs(self.unsatisfied_demand - expect_d)) > 1e-9 * max(
            1.0, float(np.max(problem.demand_array))
        ):
            raise InternalStateError("unsatisfied demand drift")
        L = problem.total_demand
        if abs(delivered.sum() - (problem.supply_array - self.available_supply).sum()) > (
            CONSERVATION_RTOL * max(1.0, L)
        ):
            raise InternalStateError("conservation violated")


def init_state(problem: TransportProblem, config: AuctionConfig) -> AuctionState:
    """Fresh state: given (or zero) prices, empty claim lists, full demand."""
    validate_problem(problem).raise_if_invalid()
    if config.initial_prices is None:
        prices = np.zeros(problem.num_sources)
    else:
        prices = as_price_vector(problem, config.initial_prices).copy()
    L = total_weight(problem)
    sentinel = 2.0 * (problem.max_abs_cost + L * config.epsilon + 1.0)
    return AuctionState(
        problem=problem,
        prices=prices,
        initial_prices=prices.copy(),
        unsatisfied_demand=problem.demand_array.copy(),
        available_supply=problem.supply_array.copy(),
        claim_lists=[ClaimList() for _ in range(problem.num_sources)],
        satisfied_tol=config.satisfied_rtol * np.maximum(1.0, problem.demand_array),
        sentinel_gap=sentinel,
    )


def _bids_for(state: AuctionState, config: AuctionConfig, bidders: np.ndarray) -> list[Bid]:
    problem = state.problem
    values = problem.cost_matrix[bidders] - state.prices[None, :]
    best_lot = np.argmax(values, axis=1)  # ties: lowest source index
    rows = np.arange(len(bidders))
    best_val = values[rows, best_lot]
    if np.any(np.isneginf(best_val)):
        raise InternalStateError("bidder with no admissible source survived validation")
    values[rows, best_lot] = -np.inf
    runner_up = np.max(values, axis=1)
    # A sink with a single admissible source has no runner-up; any stand-in
    # far enough below the best value yields an unbeatable bid.
    w = np.where(np.isneginf(runner_up), best_val - state.sentinel_gap, runner_up)
    best_cost = problem.cost_matrix[bidders, best_lot]
    prices = best_cost - w + config.epsilon
    quantity = np.minimum(state.unsatisfied_demand[bidders], problem.supply_array[best_lot])
    return [
        Bid(int(i), int(j), float(b), float(q))
        for i, j, b, q in zip(bidders, best_lot, prices, quantity)
    ]


def compute_bid(state: AuctionState, config: AuctionConfig, sink: int) -> Bid:
    """The bid an unsatisfied sink makes against current prices: its best lot,
    priced to stay within epsilon of the runner-up value, for as much of its
    remaining demand as the lot can hold in total."""
    if state.unsatisfied_demand[sink] <= state.satisfied_tol[sink]:
        raise InvalidProblemError(f"sink {sink} is already satisfied")
    return _bids_for(state, config, np.asarray([sink]))[0]


def bidding_phase(state: AuctionState, config: AuctionConfig) -> list[Bid]:
    """Collect bids for this iteration against one price snapshot."""
    unsat = state.unsatisfied_sinks()
    if unsat.size == 0:
        raise InvalidProblemError("bidding phase called with every sink satisfied")
    if config.bidder_strategy is BidderStrategy.SINGLE:
        unsat = unsat[:1]
    return _bids_for(state, config, unsat)


def _process_bid(
    state: AuctionState, bid: Bid, absorb_own: bool, epsilon: float
) -> tuple[int, bool]:
    """Resolve one bid against its lot's claim list.

    Returns the eviction count and whether the bid broke the steady-price
    guarantee: a bid topping the momentary lot price by at least epsilon that
    leaves the price unchanged must fully satisfy its bidder.
    """
    j = bid.lot
    cl = state.claim_lists[j]
    supply = state.available_supply
    demand = state.unsatisfied_demand
    want = bid.quantity
    evictions = 0
    price_before = state.prices[j]
    demand_before = demand[bid.bidder]
    dust = CLAIM_DUST_RTOL * state.problem.supply_array[j]
    while supply[j] < want and cl:
        entry = cl.peek_min()
        if entry[0] > bid.price:
            break
        if absorb_own and entry[2] == bid.bidder:
            want += entry[3]
        # Evict only the shortfall. Taking more would hand the excess back to
        # the free pool, and a lot under eviction pressure could then keep a
        # free remnant forever: bidders with larger deficits would cycle
        # through full evictions without ever draining it, and the auction
        # would never finish.
        take = min(want - supply[j], entry[3])
        if entry[3] - take <= dust:
            # Rounding in want - supply can land one ulp short of the claim
            # quantity. A stranded sliver would pin the lot price at the old
            # level, so evict the whole claim and let the excess go free.
            take = entry[3]
        supply[j] += take
        entry[3] -= take
        demand[entry[2]] += take
        if entry[3] <= 0.0:
            cl.pop_min()
        evictions += 1
    granted = min(want, supply[j])
    if granted > 0.0:
        state.seq += 1
        cl.insert(bid.price, state.seq, bid.bidder, granted)
        demand[bid.bidder] -= granted
        supply[j] -= granted
    state.prices[j] = cl.min_price(state.initial_prices[j])
    state.bids += 1
    # The guarantee assumes the bid is fresh when it resolves. Earlier bids
    # in the same batch can raise this lot's price past the offer or evict
    # the bidder elsewhere, inflating its demand beyond the announced
    # quantity; a stale bid promises nothing.
    steady_unsatisfied = (
        state.prices[j] == price_before
        and bid.price >= price_before + epsilon
        and bid.quantity == min(demand_before, state.problem.supply_array[j])
        and demand[bid.bidder] > state.satisfied_tol[bid.bidder]
    )
    return evictions, steady_unsatisfied


def resolve_bids(
    state: AuctionState, bids: Sequence[Bid], config: AuctionConfig
) -> tuple[int, int]:
    """Apply a batch of bids, lot by lot.

    Within a lot, higher prices resolve first and ties go to the lower sink
    index, so one batch is deterministic regardless of bid order. Returns
    eviction and steady-price violation counts.
    """
    by_lot: dict[int, list[Bid]] = {}
    for bid in bids:
        by_lot.setdefault(bid.lot, []).append(bid)
    evictions = 0
    violations = 0
    for j in sorted(by_lot):
        for bid in sorted(by_lot[j], key=lambda b: (-b.price, b.bidder)):
            ev, bad = _process_bid(state, bid, config.absorb_own_claims, config.epsilon)
            evictions += ev
            violations += int(bad)
    return evictions, violations


def _check_iteration_invariants(
    state: AuctionState,
    config: AuctionConfig,
    prices_before: np.ndarray,
) -> None:
    if np.any(state.prices < prices_before):
        j = int(np.argmin(state.prices - prices_before))
        raise InternalStateError(
            f"lot price decreased across an iteration: lot {j}, "
            f"{prices_before[j]!r} -> {state.prices[j]!r}"
        )
    plan = TransportPlan.from_iter(
        (claim.bidder, j, claim.quantity)
        for j, cl in enumerate(state.claim_lists)
        for claim in cl.claims()
    )
    ok, violations = check_epsilon_cs(state.problem, plan, state.prices, config.epsilon)
    if not ok:
        raise InternalStateError(
            f"relaxed slackness broken for {len(violations)} claims, first {violations[0]}"
        )
    state.check_invariants()


def run_iteration(state: AuctionState, config: AuctionConfig) -> PhaseSummary:
    """One bidding phase plus resolution. No-op when everything is satisfied."""
    state_unsat = state.unsatisfied_sinks()
    if state_unsat.size == 0:
        return PhaseSummary(
            iteration=state.iterations,
            epsilon=config.epsilon,
            bids=0,
            evictions=0,
            satisfied=state.problem.num_sinks,
            unsatisfied_total=0.0,
            max_price_delta=0.0,
            steady_price_violations=0,
            live_claims=sum(len(cl) for cl in state.claim_lists),
        )
    bids = bidding_phase(state, config)
    prices_before = state.prices.copy()
    evictions, steady_violations = resolve_bids(state, bids, config)
    state.iterations += 1

    # The steady-price guarantee assumes evicting a claim feeds the owner's
    # renewed appetite within the same bid, so it only holds with absorption.
    if not config.absorb_own_claims:
        steady_violations = 0

    L = state.problem.total_demand
    delivered = L - float(state.unsatisfied_demand.sum())
    claimed = float((state.problem.supply_array - state.available_supply).sum())
    if abs(delivered - claimed) > CONSERVATION_RTOL * max(1.0, L):
        raise InternalStateError(
            f"conservation violated: delivered {delivered!r} vs claimed {claimed!r}"
        )
    if config.validate_invariants:
        _check_iteration_invariants(state, config, prices_before)
        if steady_violations:
            raise InternalStateError(
                f"{steady_violations} bids left a lot price unchanged without "
                "satisfying their bidders"
            )

    return PhaseSummary(
        iteration=state.iterations,
        epsilon=config.epsilon,
        bids=len(bids),
        evictions=evictions,
        satisfied=int(np.sum(state.unsatisfied_demand <= state.satisfied_tol)),
        unsatisfied_total=float(state.unsatisfied_demand.sum()),
        max_price_delta=float(np.max(state.prices - prices_before)),
        steady_price_violations=steady_violations,
        live_claims=sum(len(cl) for cl in state.claim_lists),
    )


def extract_plan(state: AuctionState) -> tuple[SimplifiedPlan, float]:
    """Aggregate live claims into a plan; also return the claim-sum cost."""
    triples = []
    cost = 0.0
    costs = state.problem.arc_costs
    for j, cl in enumerate(state.claim_lists):
        for claim in cl.claims():
            triples.append((claim.bidder, j, claim.quantity))
            cost += costs[claim.bidder, j] * claim.quantity
    plan = simplify_plan(state.problem, TransportPlan.from_iter(triples))
    return plan, cost


TraceSink = Callable[[PhaseSummary], None]


def _drive(state: AuctionState, config: AuctionConfig, trace: TraceSink | None) -> None:
    while not state.all_satisfied():
        if state.iterations >= config.max_iterations or state.bids >= config.max_iterations:
            raise IterationLimitError(
                f"auction hit the safety cap ({config.max_iterations}) with "
                f"{state.unsatisfied_sinks().size} sinks unsatisfied; the "
                "feasibility precheck passed, so this points at a solver bug "
                "or a cap far too small for the instance"
            )
        summary = run_iteration(state, config)
        if trace is not None:
            trace(summary)


def _final_report(
    state: AuctionState,
    epsilon_final: float,
    iterations: int,
    bids: int,
    elapsed: float,
    algorithm: str,
) -> SolveReport:
    problem = state.problem
    plan, _ = extract_plan(state)
    cost = primal_cost(problem, plan)
    prices = state.prices.copy()
    gap = duality_gap(problem, plan, prices)
    bound = total_weight(problem) * epsilon_final
    if gap > bound * (1.0 + 1e-9) + 1e-12 * max(1.0, abs(cost)):
        raise InternalStateError(
            f"final duality gap {gap!r} exceeds the guaranteed bound {bound!r}"
        )
    return SolveReport(
        plan=plan,
        primal_cost=cost,
        prices=prices,
        dual=dual_profit(problem, prices),
        gap=gap,
        iterations=iterations,
        bids=bids,
        elapsed=elapsed,
        epsilon_final=epsilon_final,
        algorithm=algorithm,
    )


def run_auction(
    problem: TransportProblem,
    config: AuctionConfig,
    trace: TraceSink | None = None,
) -> SolveReport:
    """Solve a feasible instance at one fixed epsilon.

    The returned plan is complete and its duality gap is bounded by
    total_weight(problem) * config.epsilon. Infeasible instances are rejected
    up front by a max-flow check.
    """
    start = time.perf_counter()
    validate_problem(problem).raise_if_invalid()
    if not feasibility_check(problem):
        raise InfeasibleProblemError("no complete plan exists for this instance")
    state = init_state(problem, config)
    _drive(state, config, trace)
    return _final_report(
        state,
        config.epsilon,
        state.iterations,
        state.bids,
        time.perf_counter() - start,
        "general-auction",
    )


def run_scaled(
    problem: TransportProblem,
    config: AuctionConfig,
    schedule: ScalingSchedule | None = None,
    trace: TraceSink | None = None,
) -> SolveReport:
    """Solve with geometric epsilon scaling.

    Each phase starts from the previous phase's prices but resets claim lists
    and demands; only the last phase's plan survives. A schedule whose initial
    epsilon equals its final one behaves exactly like run_auction.
    """
    start = time.perf_counter()
    validate_problem(problem).raise_if_invalid()
    if schedule is None:
        schedule = ScalingSchedule.default_for(problem, config.epsilon)
    if not feasibility_check(problem):
        raise InfeasibleProblemError("no complete plan exists for this instance")
    prices = (
        np.zeros(problem.num_sources)
        if config.initial_prices is None
        else as_price_vector(problem, config.initial_prices).copy()
    )
    iterations = 0
    bids = 0
    state: AuctionState | None = None
    for eps in schedule.phases():
        phase_config = replace(config, epsilon=eps, initial_prices=tuple(prices))
        state = init_state(problem, phase_config)
        _drive(state, phase_config, trace)
        prices = state.prices
        iterations += state.iterations
        bids += state.bids
    assert state is not None
    return _final_report(
        state,
        schedule.epsilon_final,
        iterations,
        bids,
        time.perf_counter() - start,
        "general-auction-scaled",
    )
