"""Discrete optimal transport by real-valued auction.

The solver maximizes total (negative) cost of a balanced bipartite transport
instance: sinks bid for lots of source supply, lots keep price-ordered claim
lists, and every finished run lands within total_weight * epsilon of the
optimum. Classic unit-weight auction variants, exact oracles, instance
generators, and a benchmark harness round out the package; the ``otauction``
script exposes it all on the command line.
"""

from .auction import (
    AuctionConfig,
    AuctionState,
    Bid,
    BidderStrategy,
    Claim,
    PhaseSummary,
    ScalingSchedule,
    bidding_phase,
    compute_bid,
    extract_plan,
    init_state,
    resolve_bids,
    run_auction,
    run_iteration,
    run_scaled,
)
from .bench import (
    BenchRecord,
    PowerFit,
    auction_storage_bytes,
    compare_algorithms,
    expansion_storage_bytes,
    fit_power_law,
    run_suite,
    solve_with,
)
from .classic import (
    AssignmentProblem,
    ClassicResult,
    ExpansionMap,
    assignment_auction,
    auction_so,
    auction_sop,
    class_prices,
    collapse_assignment,
    expand_to_assignment,
)
from .errors import (
    ExpansionError,
    InfeasibleProblemError,
    InternalStateError,
    InvalidProblemError,
    IterationLimitError,
    OTAuctionError,
    OracleBudgetError,
    ParseError,
    PlanError,
)
from .fileio import parse_problem, parse_problem_text, problem_to_text, write_problem
from .generators import (
    GenSpec,
    gen_assignment,
    gen_asymmetric,
    gen_random_feasible,
    gen_real_valued,
    gen_weight_scaled,
    generate,
)
from .oracle import (
    OracleSolution,
    VerifyVerdict,
    enumerate_tiny,
    feasibility_check,
    solve_exact,
    verify_report,
)
from .problem import (
    SimplifiedPlan,
    SolveReport,
    TransportPlan,
    TransportProblem,
    ValidationReport,
    check_epsilon_cs,
    dual_profit,
    duality_gap,
    plan_is_complete,
    primal_cost,
    simplify_plan,
    total_weight,
    validate_problem,
)

__version__ = "0.1.0"

__all__ = [
    "AssignmentProblem",
    "AuctionConfig",
    "AuctionState",
    "BenchRecord",
    "Bid",
    "BidderStrategy",
    "Claim",
    "ClassicResult",
    "ExpansionError",
    "ExpansionMap",
    "GenSpec",
    "InfeasibleProblemError",
    "InternalStateError",
    "InvalidProblemError",
    "IterationLimitError",
    "OTAuctionError",
    "OracleBudgetError",
    "OracleSolution",
    "ParseError",
    "PhaseSummary",
    "PlanError",
    "PowerFit",
    "ScalingSchedule",
    "SimplifiedPlan",
    "SolveReport",
    "TransportPlan",
    "TransportProblem",
    "ValidationReport",
    "VerifyVerdict",
    "assignment_auction",
    "auction_so",
    "auction_sop",
    "auction_storage_bytes",
    "bidding_phase",
    "check_epsilon_cs",
    "class_prices",
    "collapse_assignment",
    "compare_algorithms",
    "compute_bid",
    "dual_profit",
    "duality_gap",
    "enumerate_tiny",
    "expand_to_assignment",
    "expansion_storage_bytes",
    "extract_plan",
    "feasibility_check",
    "fit_power_law",
    "gen_assignment",
    "gen_asymmetric",
    "gen_random_feasible",
    "gen_real_valued",
    "gen_weight_scaled",
    "generate",
    "init_state",
    "parse_problem",
    "parse_problem_text",
    "plan_is_complete",
    "primal_cost",
    "problem_to_text",
    "resolve_bids",
    "run_auction",
    "run_iteration",
    "run_scaled",
    "run_suite",
    "simplify_plan",
    "solve_exact",
    "solve_with",
    "total_weight",
    "validate_problem",
    "verify_report",
    "write_problem",
]
