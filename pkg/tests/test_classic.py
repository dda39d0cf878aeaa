"""Unit-weight expansion and the classic auction variants."""

import numpy as np
import pytest

from otauction import (
    AuctionConfig,
    BidderStrategy,
    ExpansionError,
    InvalidProblemError,
    IterationLimitError,
    PlanError,
    TransportProblem,
    assignment_auction,
    auction_so,
    auction_sop,
    class_prices,
    collapse_assignment,
    expand_to_assignment,
    primal_cost,
    run_auction,
    solve_exact,
    total_weight,
)

TWIN = TransportProblem.from_lists(
    [3.0, 7.0],
    [5.0, 5.0],
    [(0, 0, -1.0), (0, 1, -2.0), (1, 0, -3.0), (1, 1, -4.0)],
)

UNIT_SQUARE = TransportProblem.from_lists(
    [1.0, 1.0],
    [1.0, 1.0],
    [(0, 0, -1.0), (0, 1, -3.0), (1, 0, -3.0), (1, 1, -1.0)],
)


def unit_demand_instance(seed: int) -> tuple[TransportProblem, float]:
    """Unit sink demands, small integer supplies, complete integer costs."""
    rng = np.random.default_rng(seed)
    while True:
        k = int(rng.integers(2, 6))
        supplies = rng.integers(1, 5, size=k)
        n = int(supplies.sum())
        if n <= 12:
            break
    costs = rng.integers(1, 11, size=(n, k))
    arcs = [(i, j, -float(costs[i, j])) for i in range(n) for j in range(k)]
    problem = TransportProblem.from_lists(
        [1.0] * n, supplies.astype(float).tolist(), arcs
    )
    epsilon = float(rng.choice([0.15, 0.4, 0.75]))
    return problem, epsilon


class TestExpansion:
    def test_twin_counts(self):
        ap, emap = expand_to_assignment(TWIN)
        assert ap.num_persons == 10
        assert ap.num_objects == 10
        assert ap.num_vertices == 20
        assert ap.predicted_arcs == 100
        np.testing.assert_array_equal(ap.person_offsets, [0, 3, 10])
        np.testing.assert_array_equal(ap.object_offsets, [0, 5, 10])
        np.testing.assert_array_equal(emap.person_sink, [0] * 3 + [1] * 7)
        np.testing.assert_array_equal(emap.object_source, [0] * 5 + [1] * 5)

    def test_identity_on_unit_instances(self):
        ap, emap = expand_to_assignment(UNIT_SQUARE)
        assert ap.num_persons == ap.num_objects == 2
        assert ap.predicted_arcs == 4
        np.testing.assert_array_equal(emap.person_sink, [0, 1])

    def test_rejects_fractional_weights(self):
        p = TransportProblem.from_lists([1.5], [1.5], [(0, 0, -1.0)])
        with pytest.raises(InvalidProblemError, match="not an integer"):
            expand_to_assignment(p)

    def test_rejects_fractional_costs(self):
        p = TransportProblem.from_lists([1.0], [1.0], [(0, 0, -1.5)])
        with pytest.raises(InvalidProblemError, match="not an integer"):
            expand_to_assignment(p)

    def test_respects_storage_cap(self):
        with pytest.raises(ExpansionError, match="cap"):
            expand_to_assignment(TWIN, max_bytes=100)

    def test_collapse_aggregates_copies(self):
        ap, emap = expand_to_assignment(TWIN)
        # persons 0-2 (sink 0) take objects 0-2 (source 0); persons 3-9 take
        # the rest of source 0 then all of source 1
        assignment = np.arange(10)
        plan = collapse_assignment(assignment, emap)
        assert plan.flows == {(0, 0): 3.0, (1, 0): 2.0, (1, 1): 5.0}

    def test_collapse_rejects_incomplete(self):
        ap, emap = expand_to_assignment(TWIN)
        bad = np.full(10, -1)
        with pytest.raises(PlanError, match="incomplete"):
            collapse_assignment(bad, emap)


class TestAssignmentAuction:
    def test_unit_square_optimum(self):
        ap, emap = expand_to_assignment(UNIT_SQUARE)
        result = assignment_auction(ap, 0.4)
        plan = collapse_assignment(result.assignment, emap)
        assert primal_cost(UNIT_SQUARE, plan) == -2.0
        assert result.algorithm == "assignment-auction"
        assert sorted(result.assignment.tolist()) == [0, 1]

    def test_iteration_cap(self):
        contested = TransportProblem.from_lists(
            [1.0, 1.0],
            [1.0, 1.0],
            [(0, 0, -1.0), (0, 1, -5.0), (1, 0, -1.0), (1, 1, -5.0)],
        )
        ap, _ = expand_to_assignment(contested)
        with pytest.raises(IterationLimitError):
            assignment_auction(ap, 0.5, max_iterations=1)

    def test_epsilon_validation(self):
        ap, _ = expand_to_assignment(UNIT_SQUARE)
        with pytest.raises(ValueError):
            assignment_auction(ap, 0.0)


class TestAuctionSo:
    def test_reduces_to_assignment_auction_on_singleton_classes(self):
        rng = np.random.default_rng(31)
        costs = rng.integers(1, 9, size=(5, 5))
        p = TransportProblem.from_lists(
            [1.0] * 5,
            [1.0] * 5,
            [(i, j, -float(costs[i, j])) for i in range(5) for j in range(5)],
        )
        ap, emap = expand_to_assignment(p)
        log_a, log_s = [], []
        plain = assignment_auction(ap, 0.3, bid_log=log_a)
        so = auction_so(ap, 0.3, bid_log=log_s)
        assert log_a == log_s
        np.testing.assert_array_equal(plain.assignment, so.assignment)
        np.testing.assert_array_equal(plain.prices, so.prices)

    def test_class_price_endpoint(self):
        # two-copy source contested by three unit sinks; the cheaper class
        # quote comes from its lowest sold copy
        p = TransportProblem.from_lists(
            [1.0, 1.0, 1.0],
            [2.0, 1.0],
            [
                (0, 0, -1.0), (0, 1, -5.0),
                (1, 0, -1.0), (1, 1, -2.0),
                (2, 0, -4.0), (2, 1, -1.0),
            ],
        )
        ap, emap = expand_to_assignment(p)
        result = auction_so(ap, 0.25)
        plan = collapse_assignment(result.assignment, emap)
        assert primal_cost(p, plan) == -3.0
        np.testing.assert_allclose(
            class_prices(ap, result.prices), [4.25, 7.5], atol=1e-12
        )

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_general_auction_single_mode(self, seed):
        problem, epsilon = unit_demand_instance(seed)
        config = AuctionConfig(epsilon=epsilon, bidder_strategy=BidderStrategy.SINGLE)
        ga = run_auction(problem, config)
        ap, emap = expand_to_assignment(problem)
        so = auction_so(ap, epsilon)
        so_cost = primal_cost(problem, collapse_assignment(so.assignment, emap))
        assert so_cost == ga.primal_cost
        np.testing.assert_allclose(
            class_prices(ap, so.prices), ga.prices, atol=1e-12
        )


class TestAuctionSop:
    def test_terminates_within_bound_on_class_instance(self):
        p = TransportProblem.from_lists(
            [2.0, 3.0],
            [1.0, 4.0],
            [(0, 0, -2.0), (0, 1, -6.0), (1, 0, -5.0), (1, 1, -3.0)],
        )
        ap, emap = expand_to_assignment(p)
        result = auction_sop(ap, 0.2)
        plan = collapse_assignment(result.assignment, emap)
        cost = primal_cost(p, plan)
        bound = total_weight(p) * 0.2
        assert solve_exact(p).cost - cost <= bound * (1 + 1e-9)
        assert result.algorithm == "auction-sop"

    def test_singleton_classes_reach_assignment_optimum(self):
        ap, emap = expand_to_assignment(UNIT_SQUARE)
        result = auction_sop(ap, 0.4)
        plan = collapse_assignment(result.assignment, emap)
        assert primal_cost(UNIT_SQUARE, plan) == -2.0

    @pytest.mark.parametrize("seed", [41, 42, 43])
    def test_random_integer_instances_meet_bound(self, seed):
        rng = np.random.default_rng(seed)
        m, k = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        demands = rng.integers(1, 4, size=m)
        total = int(demands.sum())
        if total < k:
            demands[0] += k - total
            total = int(demands.sum())
        supplies = 1 + rng.multinomial(total - k, np.full(k, 1.0 / k))
        costs = rng.integers(1, 9, size=(m, k))
        p = TransportProblem.from_lists(
            demands.astype(float).tolist(),
            supplies.astype(float).tolist(),
            [(i, j, -float(costs[i, j])) for i in range(m) for j in range(k)],
        )
        ap, emap = expand_to_assignment(p)
        epsilon = 0.3
        result = auction_sop(ap, epsilon)
        cost = primal_cost(p, collapse_assignment(result.assignment, emap))
        assert solve_exact(p).cost - cost <= total_weight(p) * epsilon * (1 + 1e-9)
