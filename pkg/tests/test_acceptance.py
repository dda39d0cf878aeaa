"""End-to-end acceptance gate.

One test per shipping criterion, in order. Each test prints a single
``ACCEPTANCE <nn> <PASS|FAIL>: <detail>`` line before asserting, and the
conftest terminal hook repeats every verdict after the run so the outcome
of each criterion is visible in one place. Criteria with a runtime budget
time themselves with a monotonic clock.
"""

import math
import time

import numpy as np
import pytest

from otauction import (
    AuctionConfig,
    BidderStrategy,
    InfeasibleProblemError,
    InternalStateError,
    SimplifiedPlan,
    TransportProblem,
    auction_so,
    class_prices,
    collapse_assignment,
    enumerate_tiny,
    expand_to_assignment,
    expansion_storage_bytes,
    feasibility_check,
    fit_power_law,
    gen_random_feasible,
    gen_real_valued,
    gen_weight_scaled,
    primal_cost,
    run_auction,
    solve_exact,
    solve_with,
    total_weight,
)

EPSILONS = (1.0, 0.1, 0.01)

# Balanced instances whose arc sets cannot carry the full weight; the
# feasibility precheck must reject all of them before any bidding starts.
INFEASIBLE_CASES = (
    TransportProblem.from_lists(
        [3.0, 1.0], [1.0, 3.0], [(0, 0, -1.0), (1, 1, -1.0)]
    ),
    TransportProblem.from_lists(
        [2.0, 2.0], [3.0, 1.0], [(0, 0, -1.0), (1, 1, -1.0)]
    ),
    TransportProblem.from_lists(
        [1.0, 2.0, 3.0],
        [3.0, 2.0, 1.0],
        [(0, 0, -1.0), (1, 1, -1.0), (2, 2, -1.0)],
    ),
)

# Measured (size, seconds) series whose best-fit power law is known to have
# exponent 1.63; used to confirm the regression recovers it from real data.
REFERENCE_TIMES = (
    (3000, 0.16),
    (6000, 0.56),
    (9000, 1.06),
    (12000, 1.72),
    (15000, 2.37),
    (18000, 3.17),
    (21000, 3.80),
    (24000, 5.34),
)


def _report(n: int, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {n:02d} {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
    assert ok, detail


@pytest.fixture(scope="module")
def suite200() -> list[TransportProblem]:
    """200 seeded random feasible instances, M and N between 2 and 20,
    real-valued weights, varying density."""
    problems = []
    for seed in range(200):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 21))
        n = int(rng.integers(2, 21))
        density = float(rng.uniform(0.3, 1.0))
        problems.append(
            gen_random_feasible(m, n, density=density, weight_style="real", seed=seed)
        )
    return problems


def _tiny_integer_instances(count: int = 50) -> list[TransportProblem]:
    """Integer-weight instances with total weight at most 12, small enough
    for exhaustive enumeration."""
    out: list[TransportProblem] = []
    seed = 1000
    while len(out) < count:
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 5))
        n = int(rng.integers(2, 5))
        density = float(rng.uniform(0.5, 1.0))
        problem = gen_random_feasible(
            m, n, density=density, weight_style="integer", seed=seed
        )
        if total_weight(problem) <= 12.0:
            out.append(problem)
        seed += 1
    return out


def _unit_demand_instance(seed: int) -> tuple[TransportProblem, float]:
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


def test_acceptance_01_cost_within_weight_epsilon_of_oracle(suite200):
    # On every (instance, epsilon) pair the exact optimum minus the auction
    # cost must land in [-1e-9*L*eps, L*eps*(1 + 1e-9)]. Budget: one minute.
    start = time.perf_counter()
    runs = 0
    min_diff = math.inf
    worst_excess = -math.inf
    failures: list[str] = []
    for k, problem in enumerate(suite200):
        opt = solve_exact(problem).cost
        L = total_weight(problem)
        for eps in EPSILONS:
            report = run_auction(problem, AuctionConfig(epsilon=eps))
            diff = opt - report.primal_cost
            bound = L * eps
            runs += 1
            min_diff = min(min_diff, diff)
            worst_excess = max(worst_excess, diff - bound)
            if not (-1e-9 * bound <= diff <= bound * (1.0 + 1e-9)):
                failures.append(
                    f"instance {k} eps={eps}: diff {diff!r} outside [0, {bound!r}]"
                )
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60.0
    detail = (
        f"{runs} runs on 200 instances, diff in bounds every time "
        f"(min diff {min_diff:.2e}, max diff-bound {worst_excess:.2e}), "
        f"{elapsed:.1f}s < 60s"
    )
    if failures:
        detail = f"{len(failures)} bound violations; first: {failures[0]}"
    elif elapsed >= 60.0:
        detail = f"bounds held but took {elapsed:.1f}s (budget 60s)"
    _report(1, ok, detail)


def test_acceptance_02_slackness_and_monotone_prices_every_iteration(suite200):
    # Instrumented runs re-check relaxed slackness of the live claims and
    # that no lot price decreased, after every iteration. Zero tolerance.
    runs = 0
    violations: list[str] = []
    for k, problem in enumerate(suite200):
        for eps in EPSILONS:
            config = AuctionConfig(epsilon=eps, validate_invariants=True)
            try:
                run_auction(problem, config)
            except InternalStateError as exc:
                violations.append(f"instance {k} eps={eps}: {exc}")
            runs += 1
    detail = f"{runs} instrumented runs, {len(violations)} invariant violations"
    if violations:
        detail += f"; first: {violations[0]}"
    _report(2, not violations, detail)


def test_acceptance_03_feasible_runs_halt_and_infeasible_rejected(suite200):
    config = AuctionConfig(epsilon=0.1)
    max_bids = 0
    max_iterations = 0
    for problem in suite200:
        report = run_auction(problem, config)
        max_bids = max(max_bids, report.bids)
        max_iterations = max(max_iterations, report.iterations)
    # "Well under" the backstop: not within three orders of magnitude.
    cap_ok = max_bids < config.max_iterations // 1000

    rejected = 0
    precheck_ok = True
    for problem in INFEASIBLE_CASES:
        if feasibility_check(problem):
            precheck_ok = False
            continue
        try:
            run_auction(problem, config)
            precheck_ok = False
        except InfeasibleProblemError:
            rejected += 1
    ok = cap_ok and precheck_ok and rejected == len(INFEASIBLE_CASES)
    _report(
        3,
        ok,
        f"all 200 feasible runs halted (max {max_bids} bids, "
        f"{max_iterations} iterations, cap {config.max_iterations}); "
        f"{rejected}/{len(INFEASIBLE_CASES)} infeasible instances rejected by precheck",
    )


def test_acceptance_04_integer_instances_solved_exactly():
    problems = _tiny_integer_instances(50)
    mismatches: list[str] = []
    for k, problem in enumerate(problems):
        L = total_weight(problem)
        opt = enumerate_tiny(problem).cost
        report = run_auction(problem, AuctionConfig(epsilon=0.9 / L))
        if report.primal_cost != opt:
            mismatches.append(
                f"instance {k}: auction {report.primal_cost!r} vs enumerated {opt!r}"
            )
    detail = "50 integer instances (L <= 12, eps < 1/L) match enumeration exactly"
    if mismatches:
        detail = f"{len(mismatches)} mismatches; first: {mismatches[0]}"
    _report(4, not mismatches, detail)


def test_acceptance_05_single_bidder_mode_matches_class_auction():
    cost_bad: list[str] = []
    price_bad: list[str] = []
    worst_price_err = 0.0
    for seed in range(50):
        problem, epsilon = _unit_demand_instance(seed)
        config = AuctionConfig(epsilon=epsilon, bidder_strategy=BidderStrategy.SINGLE)
        ga = run_auction(problem, config)
        ap, emap = expand_to_assignment(problem)
        so = auction_so(ap, epsilon)
        so_cost = primal_cost(problem, collapse_assignment(so.assignment, emap))
        if so_cost != ga.primal_cost:
            cost_bad.append(
                f"seed {seed}: class auction {so_cost!r} vs general {ga.primal_cost!r}"
            )
        err = float(np.max(np.abs(class_prices(ap, so.prices) - ga.prices)))
        worst_price_err = max(worst_price_err, err)
        if err > 1e-12:
            price_bad.append(f"seed {seed}: lot price error {err:.2e}")
    ok = not cost_bad and not price_bad
    detail = (
        f"50 unit-demand instances: costs identical, "
        f"lot prices agree to {worst_price_err:.1e} (<= 1e-12)"
    )
    if cost_bad or price_bad:
        detail = f"first mismatch: {(cost_bad + price_bad)[0]}"
    _report(5, ok, detail)


def test_acceptance_06_geometric_family_near_optimal_at_desk_scale():
    # Hard criterion: the guaranteed L*eps bound on all 30 runs inside two
    # minutes. The observed rate of machine-precision matches (1e-8
    # relative) is reported alongside but not asserted.
    start = time.perf_counter()
    eps = 0.75
    runs = 0
    tight = 0
    failures: list[str] = []
    for n in (50, 100, 200):
        for seed in range(10):
            problem = gen_real_valued(n, seed=seed)
            opt = solve_exact(problem).cost
            report = run_auction(problem, AuctionConfig(epsilon=eps))
            L = total_weight(problem)
            diff = opt - report.primal_cost
            runs += 1
            if not (-1e-9 * L * eps <= diff <= L * eps * (1.0 + 1e-9)):
                failures.append(f"N={n} seed={seed}: diff {diff!r} vs bound {L * eps!r}")
            if abs(diff) <= 1e-8 * abs(opt):
                tight += 1
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 120.0
    detail = (
        f"{runs} runs at eps=0.75: all within L*eps; {tight}/{runs} matched the "
        f"optimum to 1e-8 relative (reported, not asserted); {elapsed:.1f}s < 120s"
    )
    if failures:
        detail = f"{len(failures)} bound violations; first: {failures[0]}"
    elif elapsed >= 120.0:
        detail = f"bounds held but took {elapsed:.1f}s (budget 120s)"
    _report(6, ok, detail)


def test_acceptance_07_two_matching_margin_constant():
    # 2x2 instance with costs -sqrt(18), -sqrt(19), -sqrt(19), -sqrt(20):
    # the margin between its only two complete matchings is the alternating
    # sum below, documented as 0.00302 to within 5e-6.
    expression = math.sqrt(19) - math.sqrt(20) + math.sqrt(19) - math.sqrt(18)
    problem = TransportProblem.from_lists(
        [1.0, 1.0],
        [1.0, 1.0],
        [
            (0, 0, -math.sqrt(18)),
            (0, 1, -math.sqrt(19)),
            (1, 0, -math.sqrt(19)),
            (1, 1, -math.sqrt(20)),
        ],
    )
    diag = primal_cost(problem, SimplifiedPlan(flows={(0, 0): 1.0, (1, 1): 1.0}))
    anti = primal_cost(problem, SimplifiedPlan(flows={(0, 1): 1.0, (1, 0): 1.0}))
    margin = diag - anti
    sol = solve_exact(problem)
    eps = 5e-4  # total weight 2, so 2*eps stays below the margin
    report = run_auction(problem, AuctionConfig(epsilon=eps))
    ok = (
        abs(expression - 0.00302) <= 5e-6
        and abs(margin - expression) <= 1e-12
        and abs(sol.cost - diag) <= 1e-12
        and sol.cost - report.primal_cost <= 2.0 * eps * (1.0 + 1e-9)
    )
    _report(
        7,
        ok,
        f"margin {expression:.8f} within 5e-6 of 0.00302; exact solver picks "
        f"the wider pairing and the auction lands within 2*eps of it",
    )


def test_acceptance_08_expansion_size_formula():
    problem = TransportProblem.from_lists(
        [3.0, 7.0],
        [5.0, 5.0],
        [(0, 0, -1.0), (0, 1, -2.0), (1, 0, -3.0), (1, 1, -4.0)],
    )
    ap, _ = expand_to_assignment(problem)
    ok = (
        ap.num_vertices == 20 == 2 * (3 + 5 + 2)
        and ap.predicted_arcs == 100 == (3 + 5 + 2) ** 2
    )
    _report(
        8,
        ok,
        f"d=(3,7), s=(5,5) expands to {ap.num_vertices} vertices and "
        f"{ap.predicted_arcs} arcs, matching 2(3+5+2) and (3+5+2)^2",
    )


def test_acceptance_09_storage_flat_while_expansion_grows():
    # Same 100x100 topology, total weight scaled 100 -> 1000: the auction's
    # modeled working set should be nearly flat while the unit-expansion
    # model blows up. Trend only; no absolute sizes asserted.
    sizes = range(100, 1001, 100)
    ga_storage: list[int] = []
    expansion: list[int] = []
    for L in sizes:
        problem = gen_weight_scaled(L, M=100, N=100, arcs=3000, seed=7)
        ga_storage.append(solve_with(problem, "ga", 0.5)["storage"])
        expansion.append(expansion_storage_bytes(problem))
    spread = (max(ga_storage) - min(ga_storage)) / min(ga_storage)
    growth = expansion[-1] / expansion[0]
    ok = spread < 0.10 and growth >= 5.0
    _report(
        9,
        ok,
        f"auction storage varies {spread:.1%} (< 10%) across L in 100..1000; "
        f"expansion storage grows {growth:.1f}x (>= 5x)",
    )


def test_acceptance_10_power_fit_recovers_reference_exponent():
    fit = fit_power_law(REFERENCE_TIMES)
    rel = abs(fit.b - 1.63) / 1.63
    sizes = (3000, 6000, 12000, 24000)
    synth = fit_power_law([(x, 0.029 * x**1.63) for x in sizes])
    noiseless_exact = (
        abs(synth.b - 1.63) <= 1e-9
        and abs(synth.a - 0.029) <= 1e-9 * 0.029
        and synth.r_squared >= 1.0 - 1e-12
    )
    ok = rel < 0.05 and noiseless_exact
    _report(
        10,
        ok,
        f"measured series fits b={fit.b:.3f} ({rel:.1%} from 1.63, < 5%); "
        f"noiseless synthetic data recovered exactly",
    )
