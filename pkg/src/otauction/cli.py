"""Command line interface.

Subcommands: solve, verify, generate, compare, bench. Reports are JSON on
stdout (schema 1, keys sorted; the elapsed fields are excluded from any
determinism guarantee), errors are JSON on stderr. Costs cross this boundary
in the user convention: positive values to minimize. Exit codes: 0 ok,
2 parse error, 3 infeasible, 4 constraint violated, 5 cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict

import numpy as np

from .auction import AuctionConfig, ScalingSchedule, run_auction, run_scaled
from .bench import ALGORITHMS, SUITES, compare_algorithms, run_suite
from .classic import (
    DEFAULT_EXPANSION_CAP_BYTES,
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
from .fileio import parse_problem, write_problem
from .generators import GenSpec, generate
from .oracle import solve_exact, verify_report
from .problem import (
    SimplifiedPlan,
    SolveReport,
    dual_profit,
    primal_cost,
    total_weight,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_CONSTRAINT = 4
EXIT_CAP = 5

_CLASSIC_SOLVERS = {
    "assignment": assignment_auction,
    "so": auction_so,
    "sop": auction_sop,
}


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _emit_error(exc: BaseException, code: int) -> int:
    payload = {
        "schema": 1,
        "error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code},
    }
    json.dump(payload, sys.stderr, indent=2, sort_keys=True)
    sys.stderr.write("\n")
    return code


def _exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ParseError, OSError, json.JSONDecodeError)):
        return EXIT_PARSE
    if isinstance(exc, InfeasibleProblemError):
        return EXIT_INFEASIBLE
    if isinstance(exc, (IterationLimitError, ExpansionError, OracleBudgetError)):
        return EXIT_CAP
    if isinstance(exc, InternalStateError):
        return EXIT_INTERNAL
    return EXIT_CONSTRAINT


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _instance_summary(problem) -> dict:
    return {
        "sinks": problem.num_sinks,
        "sources": problem.num_sources,
        "arcs": len(problem.arcs),
        "total_weight": total_weight(problem),
    }


def _plan_json(plan: SimplifiedPlan) -> list[list]:
    return [[i + 1, j + 1, q] for (i, j), q in sorted(plan.flows.items())]


def _plan_from_json(entries) -> SimplifiedPlan:
    flows = {}
    for entry in entries:
        if len(entry) != 3:
            raise ParseError(f"plan entry {entry!r} is not [sink, source, quantity]", None)
        i, j, q = entry
        flows[(int(i) - 1, int(j) - 1)] = float(q)
    return SimplifiedPlan(flows=flows)


def cmd_solve(args: argparse.Namespace) -> int:
    problem = parse_problem(args.problem)
    algorithm = args.algorithm
    if algorithm != "exact" and args.epsilon is None:
        raise InvalidProblemError(f"algorithm {algorithm!r} requires --epsilon")
    out = {
        "schema": 1,
        "command": "solve",
        "algorithm": algorithm,
        "instance": _instance_summary(problem),
        "epsilon": args.epsilon,
    }
    if algorithm in ("ga", "ga-scaled"):
        config = AuctionConfig(epsilon=args.epsilon, max_iterations=args.max_iterations)
        if algorithm == "ga":
            report = run_auction(problem, config)
        else:
            if args.epsilon_initial is not None:
                schedule = ScalingSchedule(args.epsilon_initial, args.epsilon, args.decay)
            else:
                schedule = ScalingSchedule.default_for(problem, args.epsilon)
            report = run_scaled(problem, config, schedule)
        plan = report.plan
        prices = report.prices.tolist()
        cost = report.primal_cost
        gap = report.gap
        iterations, bids, elapsed = report.iterations, report.bids, report.elapsed
        out["epsilon_final"] = report.epsilon_final
    elif algorithm in _CLASSIC_SOLVERS:
        start = time.perf_counter()
        ap, emap = expand_to_assignment(problem, max_bytes=args.expansion_cap)
        result = _CLASSIC_SOLVERS[algorithm](ap, args.epsilon, max_iterations=args.max_iterations)
        plan = collapse_assignment(result.assignment, emap)
        cost = primal_cost(problem, plan)
        lots = class_prices(ap, result.prices)
        prices = lots.tolist()
        gap = max(0.0, float(dual_profit(problem, lots) - cost))
        iterations, bids = result.iterations, result.bids
        elapsed = time.perf_counter() - start
        out["expansion"] = {
            "persons": ap.num_persons,
            "objects": ap.num_objects,
            "vertices": ap.num_vertices,
            "predicted_arcs": ap.predicted_arcs,
        }
    elif algorithm == "exact":
        start = time.perf_counter()
        solution = solve_exact(problem)
        plan = solution.plan
        cost = solution.cost
        gap = 0.0
        prices = None
        iterations = bids = 0
        elapsed = time.perf_counter() - start
        out["epsilon"] = None
    else:
        raise InvalidProblemError(
            f"unknown algorithm {algorithm!r}; known: {', '.join(ALGORITHMS)}"
        )
    out.update(
        {
            "cost": -cost,
            "dual_bound": -(cost + gap),
            "gap": gap,
            "iterations": iterations,
            "bids": bids,
            "elapsed": elapsed,
            "prices": prices,
        }
    )
    if args.include_plan:
        out["plan"] = _plan_json(plan)
    _emit(out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    problem = parse_problem(args.problem)
    with open(args.report, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict) or "plan" not in data:
        raise ParseError(
            "report carries no plan; produce it with solve --include-plan", None
        )
    if data.get("prices") is None:
        raise ParseError("report carries no prices; verification needs them", None)
    epsilon = args.epsilon if args.epsilon is not None else data.get("epsilon")
    if epsilon is None:
        raise ParseError("no epsilon given and none recorded in the report", None)
    plan = _plan_from_json(data["plan"])
    prices = np.asarray([float(p) for p in data["prices"]], dtype=float)
    report = SolveReport(
        plan=plan,
        primal_cost=-float(data.get("cost", 0.0)),
        prices=prices,
        dual=float(data.get("dual_bound", 0.0)),
        gap=float(data.get("gap", 0.0)),
        iterations=int(data.get("iterations", 0)),
        bids=int(data.get("bids", 0)),
        elapsed=0.0,
        epsilon_final=float(epsilon),
        algorithm=str(data.get("algorithm", "unknown")),
    )
    verdict = verify_report(problem, report, float(epsilon))
    _emit(
        {
            "schema": 1,
            "command": "verify",
            "pass": verdict.ok,
            "epsilon": float(epsilon),
            "bound": total_weight(problem) * float(epsilon),
            "gap": verdict.gap,
            "checks": {
                "plan_valid": verdict.plan_valid,
                "complete": verdict.complete,
                "eps_cs": verdict.eps_cs_ok,
                "gap_within_bound": verdict.gap_ok,
                "matches_oracle": verdict.oracle_ok,
            },
            "oracle_cost": None if verdict.oracle_cost is None else -verdict.oracle_cost,
            "notes": list(verdict.notes),
        }
    )
    return EXIT_OK if verdict.ok else EXIT_CONSTRAINT


def cmd_generate(args: argparse.Namespace) -> int:
    spec = GenSpec(
        family=args.family,
        N=args.n,
        M=args.m,
        density=args.density,
        cost_range=args.cost_range,
        weight_mode=args.weight_mode,
        weight_style=args.weight_style,
        total_weight=args.total_weight,
        arcs=args.arcs,
        seed=args.seed,
    )
    problem = generate(spec)
    comments = [f"otauction generate: {spec.describe()}"]
    if args.output == "-":
        write_problem(problem, sys.stdout, comments)
        return EXIT_OK
    write_problem(problem, args.output, comments)
    _emit(
        {
            "schema": 1,
            "command": "generate",
            "family": spec.family,
            "spec": spec.describe(),
            "output": args.output,
            "instance": _instance_summary(problem),
        }
    )
    return EXIT_OK


def _records_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    fields = [
        "suite",
        "scale",
        "algorithm",
        "elapsed",
        "storage_bytes",
        "iterations",
        "bids",
        "gap",
        "cost",
        "runs",
        "worker",
    ]
    writer.writerow(fields)
    for record in records:
        row = asdict(record)
        row["cost"] = -row["cost"]  # minimization view, like the JSON reports
        writer.writerow([row[f] for f in fields])
    return buf.getvalue()


def cmd_compare(args: argparse.Namespace) -> int:
    if args.files:
        problems = [parse_problem(path) for path in args.files]
    else:
        if args.n is None:
            raise InvalidProblemError("compare needs --files or a generator --n")
        problems = [
            generate(
                GenSpec(
                    family=args.family,
                    N=args.n,
                    M=args.m,
                    density=args.density,
                    cost_range=args.cost_range,
                    weight_style=args.weight_style,
                    weight_mode=args.weight_mode,
                    total_weight=args.total_weight,
                    seed=seed,
                )
            )
            for seed in args.seeds
        ]
    records, worst, ok = compare_algorithms(
        problems,
        algorithms=args.algorithms,
        epsilon=args.epsilon,
        repetitions=args.repetitions,
        min_time=args.min_time,
    )
    if args.format == "csv":
        sys.stdout.write(_records_csv(records))
    else:
        _emit(
            {
                "schema": 1,
                "command": "compare",
                "algorithms": list(args.algorithms),
                "epsilon": args.epsilon,
                "instances": len(problems),
                "repetitions": args.repetitions,
                "records": [
                    {**asdict(r), "cost": -r.cost} for r in records
                ],
                "max_cost_discrepancy": worst,
                "within_bounds": ok,
            }
        )
    return EXIT_OK if ok else EXIT_CONSTRAINT


def cmd_bench(args: argparse.Namespace) -> int:
    records, fits = run_suite(
        args.suite,
        sizes=args.sizes,
        epsilon=args.epsilon,
        seed=args.seed,
        min_time=args.min_time,
        algorithms=args.algorithms,
    )
    if args.format == "csv":
        sys.stdout.write(_records_csv(records))
    else:
        _emit(
            {
                "schema": 1,
                "command": "bench",
                "suite": args.suite,
                "records": [{**asdict(r), "cost": -r.cost} for r in records],
                "fits": {
                    alg: {"a": fit.a, "b": fit.b, "r_squared": fit.r_squared}
                    for alg, fit in fits.items()
                },
            }
        )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otauction",
        description="Discrete optimal transport via real-valued auctions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem file")
    p_solve.add_argument("problem", help="problem file path")
    p_solve.add_argument(
        "--algorithm", default="ga-scaled", choices=list(ALGORITHMS)
    )
    p_solve.add_argument("--epsilon", type=float, default=None)
    p_solve.add_argument(
        "--epsilon-initial", type=float, default=None, help="scaling start (ga-scaled)"
    )
    p_solve.add_argument("--decay", type=float, default=4.0, help="scaling divisor")
    p_solve.add_argument("--max-iterations", type=int, default=1_000_000_000)
    p_solve.add_argument(
        "--expansion-cap",
        type=int,
        default=DEFAULT_EXPANSION_CAP_BYTES,
        help="predicted expansion byte cap for classic algorithms",
    )
    p_solve.add_argument("--include-plan", action="store_true")
    p_solve.set_defaults(fn=cmd_solve)

    p_verify = sub.add_parser("verify", help="verify a solve report")
    p_verify.add_argument("problem")
    p_verify.add_argument("report", help="JSON report from solve --include-plan")
    p_verify.add_argument("--epsilon", type=float, default=None)
    p_verify.set_defaults(fn=cmd_verify)

    def add_genspec(p: argparse.ArgumentParser, require_n: bool = True) -> None:
        p.add_argument("--family", default="random", choices=[
            "assignment", "asymmetric", "weight-scaled", "real-valued", "random",
        ])
        p.add_argument("--n", type=int, required=require_n, help="sources (scaling size)")
        p.add_argument("--m", type=int, default=None, help="sinks (family default)")
        p.add_argument("--density", type=float, default=None)
        p.add_argument("--cost-range", type=int, default=None)
        p.add_argument("--weight-mode", default=None, choices=["unit", "range-1-19"])
        p.add_argument("--weight-style", default=None, choices=["real", "integer"])
        p.add_argument("--total-weight", type=int, default=None)
        p.add_argument("--arcs", type=int, default=None)

    p_gen = sub.add_parser("generate", help="generate a problem file")
    add_genspec(p_gen)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--output", default="-", help="path or - for stdout")
    p_gen.set_defaults(fn=cmd_generate)

    p_cmp = sub.add_parser("compare", help="run several algorithms on the same instances")
    p_cmp.add_argument("--files", nargs="*", default=None, help="problem files to use")
    add_genspec(p_cmp, require_n=False)
    p_cmp.add_argument("--seeds", type=_int_list, default=[0])
    p_cmp.add_argument("--algorithms", type=_str_list, default=["ga", "exact"])
    p_cmp.add_argument("--epsilon", type=float, required=True)
    p_cmp.add_argument("--repetitions", type=int, default=1)
    p_cmp.add_argument("--min-time", type=float, default=0.0)
    p_cmp.add_argument("--format", default="json", choices=["json", "csv"])
    p_cmp.set_defaults(fn=cmd_compare)

    p_bench = sub.add_parser("bench", help="run a benchmark suite")
    p_bench.add_argument("--suite", required=True, choices=list(SUITES))
    p_bench.add_argument("--sizes", type=_int_list, default=None)
    p_bench.add_argument("--epsilon", type=float, default=None)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--min-time", type=float, default=1.0)
    p_bench.add_argument("--algorithms", type=_str_list, default=None)
    p_bench.add_argument("--format", default="json", choices=["json", "csv"])
    p_bench.set_defaults(fn=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (OTAuctionError, OSError, ValueError, json.JSONDecodeError) as exc:
        return _emit_error(exc, _exit_code_for(exc))


if __name__ == "__main__":
    sys.exit(main())
