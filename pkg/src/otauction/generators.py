"""Seeded instance generators for benchmarks and property tests.

Every generator guarantees a feasible, balanced instance by embedding a
hidden feasible flow (a matching, or a northwest-corner routing over shuffled
vertex orders) and only then sampling filler arcs up to the target density.

Randomness: numpy's PCG64 behind default_rng, which is bit-stable across
platforms. Independent substreams come from numpy.random.SeedSequence seeded
with [seed, tag] lists; gen_weight_scaled draws its weights from
[seed, 1, total_weight] so the topology stream never sees the total and stays
identical across weight scales.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable

import numpy as np

from .errors import InvalidProblemError
from .problem import TransportProblem, validate_problem

UNIT = "unit"
RANGE_1_19 = "range-1-19"
REAL = "real"
INTEGER = "integer"

FAMILIES = ("assignment", "asymmetric", "weight-scaled", "real-valued", "random")


@dataclass(frozen=True)
class GenSpec:
    """Declarative description of one generated instance."""

    family: str
    N: int
    M: int | None = None
    density: float | None = None
    cost_range: int | None = None
    weight_mode: str | None = None
    weight_style: str | None = None
    total_weight: int | None = None
    arcs: int | None = None
    seed: int = 0

    def describe(self) -> str:
        parts = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None:
                parts.append(f"{f.name}={v}")
        return " ".join(parts)


def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def _sample_arcs(
    rng: np.random.Generator,
    num_sinks: int,
    num_sources: int,
    target: int,
    required: Iterable[tuple[int, int]],
) -> list[tuple[int, int]]:
    """Required arcs plus uniform filler, without replacement, up to target.
    The result is sorted lexicographically so downstream cost draws are
    order-stable."""
    cells = num_sinks * num_sources
    required = set(required)
    target = min(max(target, len(required)), cells)
    extra = target - len(required)
    if extra > 0:
        taken = np.zeros(cells, dtype=bool)
        for i, j in required:
            taken[i * num_sources + j] = True
        pool = np.flatnonzero(~taken)
        picked = rng.choice(pool, size=extra, replace=False)
        arcs = list(required) + [
            (int(k) // num_sources, int(k) % num_sources) for k in picked
        ]
    else:
        arcs = list(required)
    arcs.sort()
    return arcs


def _negative_int_costs(
    rng: np.random.Generator, count: int, cost_range: int
) -> np.ndarray:
    if cost_range < 1:
        raise InvalidProblemError(f"cost range must be at least 1, got {cost_range}")
    return -rng.integers(1, cost_range + 1, size=count).astype(float)


def _build(
    demands: Iterable[float],
    supplies: Iterable[float],
    arcs: list[tuple[int, int]],
    costs: np.ndarray,
) -> TransportProblem:
    problem = TransportProblem.from_lists(
        demands=list(map(float, demands)),
        supplies=list(map(float, supplies)),
        arcs=[(i, j, float(c)) for (i, j), c in zip(arcs, costs)],
    )
    validate_problem(problem).raise_if_invalid()
    return problem


def _hidden_flow_arcs(
    demands: np.ndarray,
    supplies: np.ndarray,
    sink_order: np.ndarray,
    source_order: np.ndarray,
) -> list[tuple[int, int]]:
    """Arcs of a northwest-corner routing over the given vertex orders.

    At most M+N-1 arcs carrying a complete feasible flow. Trailing float dust
    (when the sides balance only to rounding) is absorbed by the last source.
    """
    remaining_d = demands[sink_order].astype(float).tolist()
    remaining_s = supplies[source_order].astype(float).tolist()
    last = len(remaining_s) - 1
    arcs = []
    i = j = 0
    while i < len(remaining_d):
        q = min(remaining_d[i], remaining_s[j]) if j < last else remaining_d[i]
        arcs.append((int(sink_order[i]), int(source_order[j])))
        remaining_d[i] -= q
        remaining_s[j] -= q
        if remaining_d[i] <= 1e-12 * max(1.0, float(demands[sink_order[i]])):
            i += 1
        if j < last and remaining_s[j] <= 1e-12 * max(1.0, float(supplies[source_order[j]])):
            j += 1
    return arcs


def gen_assignment(
    N: int, density: float = 0.125, cost_range: int = 100, seed: int = 0
) -> TransportProblem:
    """Unit-weight N x N instance with integer costs in [-cost_range, -1].

    A hidden perfect matching is always present; filler arcs bring the count
    up to about density * N^2. Requires density >= 1/N so the matching fits.
    """
    if N < 1:
        raise InvalidProblemError(f"N must be positive, got {N}")
    if not (0.0 < density <= 1.0):
        raise InvalidProblemError(f"density must be in (0, 1], got {density}")
    if density < 1.0 / N:
        raise InvalidProblemError(
            f"density {density} is below 1/N = {1.0 / N}; the feasibility "
            "matching alone exceeds it"
        )
    rng = _rng(seed, 0)
    matching = rng.permutation(N)
    required = [(i, int(matching[i])) for i in range(N)]
    arcs = _sample_arcs(rng, N, N, round(density * N * N), required)
    costs = _negative_int_costs(rng, len(arcs), cost_range)
    return _build(np.ones(N), np.ones(N), arcs, costs)


def gen_asymmetric(
    N: int,
    M: int = 400,
    weight_mode: str = UNIT,
    density: float = 0.14,
    cost_range: int = 100,
    seed: int = 0,
) -> TransportProblem:
    """Skewed-demand family: half the weight sits on a tenth of the sinks.

    Sources get unit weight or integer weights in [1, 19]; the sink side then
    splits the source total 50/50 between a random 10% of sinks and the rest.
    Requires N >= M.
    """
    if M < 1 or N < M:
        raise InvalidProblemError(f"need N >= M >= 1, got M={M}, N={N}")
    if not (0.0 < density <= 1.0):
        raise InvalidProblemError(f"density must be in (0, 1], got {density}")
    rng = _rng(seed, 0)
    if weight_mode == UNIT:
        supplies = np.ones(N, dtype=np.int64)
    elif weight_mode == RANGE_1_19:
        supplies = rng.integers(1, 20, size=N)
    else:
        raise InvalidProblemError(f"unknown weight mode {weight_mode!r}")
    total = int(supplies.sum())
    heavy_count = max(1, M // 10)
    light_count = M - heavy_count
    heavy_total = total // 2 if light_count else total
    light_total = total - heavy_total
    if heavy_total < heavy_count or (light_count and light_total < light_count):
        raise InvalidProblemError(
            f"cannot split total weight {total} over {M} sinks with every "
            "weight positive; increase N or the source weights"
        )
    demands = np.zeros(M, dtype=np.int64)
    heavy = rng.choice(M, size=heavy_count, replace=False)
    light = np.setdiff1d(np.arange(M), heavy)

    def spread(indices: np.ndarray, amount: int) -> None:
        base, rem = divmod(amount, len(indices))
        demands[indices] = base
        demands[indices[:rem]] += 1

    spread(np.sort(heavy), heavy_total)
    if light_count:
        spread(light, light_total)
    required = _hidden_flow_arcs(
        demands.astype(float), supplies.astype(float), rng.permutation(M), rng.permutation(N)
    )
    arcs = _sample_arcs(rng, M, N, round(density * M * N), required)
    costs = _negative_int_costs(rng, len(arcs), cost_range)
    return _build(demands, supplies, arcs, costs)


def gen_weight_scaled(
    total_weight: int,
    M: int = 500,
    N: int = 500,
    arcs: int = 225_000,
    cost_range: int = 100,
    seed: int = 0,
) -> TransportProblem:
    """Square family whose topology and costs ignore the total weight.

    The arc set, costs, and the hidden matching depend only on (seed); the
    integer weights (each >= 1, summing to total_weight per side) come from a
    stream keyed by (seed, total_weight). Scaling the weight therefore reuses
    the exact same network.
    """
    if M != N:
        raise InvalidProblemError(
            f"the weight-scaled family is square; got M={M}, N={N}"
        )
    L = int(total_weight)
    if L != total_weight or L < max(M, N):
        raise InvalidProblemError(
            f"total weight must be an integer >= max(M, N) = {max(M, N)}, got {total_weight!r}"
        )
    topo = _rng(seed, 0)
    matching = topo.permutation(N)
    required = [(i, int(matching[i])) for i in range(M)]
    arc_list = _sample_arcs(topo, M, N, int(arcs), required)
    costs = _negative_int_costs(topo, len(arc_list), cost_range)
    weight_rng = _rng(seed, 1, L)
    demands = 1 + weight_rng.multinomial(L - M, np.full(M, 1.0 / M))
    supplies = np.zeros(N, dtype=np.int64)
    supplies[matching] = demands
    return _build(demands, supplies, arc_list, costs)


def gen_real_valued(N: int, seed: int = 0) -> TransportProblem:
    """Geometric family with irrational costs and twenty distinct weights.

    Both sides get integer coordinates in [0, N]^2; the complete bipartite
    cost is -sqrt(1 + m) with m the squared Euclidean distance mod 20, and
    vertex k (1-based) weighs sqrt(1 + ((k-1) mod 20)) on both sides, so the
    instance balances exactly.
    """
    if N < 1:
        raise InvalidProblemError(f"N must be positive, got {N}")
    rng = _rng(seed, 0)
    sink_xy = rng.integers(0, N + 1, size=(N, 2))
    source_xy = rng.integers(0, N + 1, size=(N, 2))
    dx = sink_xy[:, 0][:, None] - source_xy[:, 0][None, :]
    dy = sink_xy[:, 1][:, None] - source_xy[:, 1][None, :]
    m = (dx * dx + dy * dy) % 20
    cost = -np.sqrt(1.0 + m)
    weights = np.sqrt(1.0 + (np.arange(N) % 20))
    arcs = [(i, j, float(cost[i, j])) for i in range(N) for j in range(N)]
    problem = TransportProblem.from_lists(
        demands=weights.tolist(), supplies=weights.tolist(), arcs=arcs
    )
    validate_problem(problem).raise_if_invalid()
    return problem


def gen_random_feasible(
    M: int,
    N: int,
    density: float = 0.5,
    weight_style: str = REAL,
    cost_range: int = 10,
    seed: int = 0,
) -> TransportProblem:
    """Unstructured feasible instances for property tests.

    Real style draws weights uniform in (0, 5] and rescales the source side
    to balance; integer style draws small integer weights and splits the same
    total across sources. A shuffled northwest-corner flow pins feasibility.
    """
    if M < 1 or N < 1:
        raise InvalidProblemError(f"need M, N >= 1, got M={M}, N={N}")
    if not (0.0 < density <= 1.0):
        raise InvalidProblemError(f"density must be in (0, 1], got {density}")
    rng = _rng(seed, 0)
    if weight_style == REAL:
        demands = 5.0 * (1.0 - rng.random(M))
        raw = 5.0 * (1.0 - rng.random(N))
        supplies = raw * (demands.sum() / raw.sum())
    elif weight_style == INTEGER:
        demands = rng.integers(1, 10, size=M)
        deficit = N - int(demands.sum())
        if deficit > 0:
            demands[0] += deficit
        supplies = 1 + rng.multinomial(int(demands.sum()) - N, np.full(N, 1.0 / N))
        demands = demands.astype(float)
        supplies = supplies.astype(float)
    else:
        raise InvalidProblemError(f"unknown weight style {weight_style!r}")
    required = _hidden_flow_arcs(
        np.asarray(demands, dtype=float),
        np.asarray(supplies, dtype=float),
        rng.permutation(M),
        rng.permutation(N),
    )
    arc_list = _sample_arcs(rng, M, N, round(density * M * N), required)
    if weight_style == INTEGER:
        costs = _negative_int_costs(rng, len(arc_list), cost_range)
    else:
        costs = -float(cost_range) * (1.0 - rng.random(len(arc_list)))
    return _build(demands, supplies, arc_list, costs)


def generate(spec: GenSpec) -> TransportProblem:
    """Dispatch a GenSpec to its family generator, applying family defaults."""
    f = spec.family
    if f == "assignment":
        return gen_assignment(
            spec.N,
            density=spec.density if spec.density is not None else 0.125,
            cost_range=spec.cost_range if spec.cost_range is not None else 100,
            seed=spec.seed,
        )
    if f == "asymmetric":
        return gen_asymmetric(
            spec.N,
            M=spec.M if spec.M is not None else 400,
            weight_mode=spec.weight_mode if spec.weight_mode is not None else UNIT,
            density=spec.density if spec.density is not None else 0.14,
            cost_range=spec.cost_range if spec.cost_range is not None else 100,
            seed=spec.seed,
        )
    if f == "weight-scaled":
        if spec.total_weight is None:
            raise InvalidProblemError("weight-scaled family needs total_weight")
        return gen_weight_scaled(
            spec.total_weight,
            # square family: a missing M follows N instead of the 500 default
            M=spec.M if spec.M is not None else spec.N,
            N=spec.N,
            arcs=spec.arcs if spec.arcs is not None else 225_000,
            cost_range=spec.cost_range if spec.cost_range is not None else 100,
            seed=spec.seed,
        )
    if f == "real-valued":
        return gen_real_valued(spec.N, seed=spec.seed)
    if f == "random":
        return gen_random_feasible(
            M=spec.M if spec.M is not None else spec.N,
            N=spec.N,
            density=spec.density if spec.density is not None else 0.5,
            weight_style=spec.weight_style if spec.weight_style is not None else REAL,
            cost_range=spec.cost_range if spec.cost_range is not None else 10,
            seed=spec.seed,
        )
    raise InvalidProblemError(f"unknown family {f!r}; known: {', '.join(FAMILIES)}")
