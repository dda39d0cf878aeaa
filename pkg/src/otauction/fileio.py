"""Plain-text problem files.

Format, one record per line:

    c <free-form comment>
    p ot <num_sinks> <num_supplies> <num_arcs>
    d <sink> <weight>
    s <source> <weight>
    a <sink> <source> <cost>

The header must be the first non-comment line. Indices are 1-based in files
(0-based in memory). Weights are positive decimals, costs strictly negative;
floats are written with repr so a write/parse round trip is exact.
"""

from __future__ import annotations

import io
import os
from typing import IO, Iterable, Union

from .errors import ParseError
from .problem import TransportProblem, validate_problem

Source = Union[str, os.PathLike, IO[str]]


def _open_for(source: Source, mode: str) -> tuple[IO[str], bool]:
    if hasattr(source, "read") or hasattr(source, "write"):
        return source, False
    return open(source, mode, encoding="utf-8"), True


def _positive(token: str, line_no: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{what} {token!r} is not a number", line_no) from None
    if not value > 0.0 or value != value or value == float("inf"):
        raise ParseError(f"{what} must be positive and finite, got {token}", line_no)
    return value


def _negative(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"cost {token!r} is not a number", line_no) from None
    if not value < 0.0 or value != value or value == float("-inf"):
        raise ParseError(f"cost must be negative and finite, got {token}", line_no)
    return value


def _index(token: str, line_no: int, upper: int, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"{what} index {token!r} is not an integer", line_no) from None
    if not 1 <= value <= upper:
        raise ParseError(f"{what} index {value} outside 1..{upper}", line_no)
    return value - 1


def parse_problem(source: Source) -> TransportProblem:
    """Parse a problem file (path or open text stream).

    Raises ParseError with a line number on malformed input and
    InvalidProblemError when the parsed instance fails validation.
    """
    stream, owned = _open_for(source, "r")
    try:
        header = None
        demands: dict[int, float] = {}
        supplies: dict[int, float] = {}
        arcs: list[tuple[int, int, float]] = []
        seen_arcs: set[tuple[int, int]] = set()
        for line_no, raw in enumerate(stream, start=1):
            line = raw.strip()
            if not line or line.startswith("c"):
                continue
            tokens = line.split()
            kind = tokens[0]
            if kind == "p":
                if header is not None:
                    raise ParseError("duplicate header line", line_no)
                if len(tokens) != 5 or tokens[1] != "ot":
                    raise ParseError(
                        "header must be 'p ot <sinks> <sources> <arcs>'", line_no
                    )
                try:
                    m, n, a = (int(t) for t in tokens[2:5])
                except ValueError:
                    raise ParseError("header counts must be integers", line_no) from None
                if m < 1 or n < 1 or a < 0:
                    raise ParseError(f"header counts out of range: {m} {n} {a}", line_no)
                header = (m, n, a)
                continue
            if header is None:
                raise ParseError(
                    f"record {kind!r} before the 'p ot' header", line_no
                )
            m, n, a = header
            if kind == "d":
                if len(tokens) != 3:
                    raise ParseError("demand line must be 'd <sink> <weight>'", line_no)
                i = _index(tokens[1], line_no, m, "sink")
                if i in demands:
                    raise ParseError(f"duplicate demand for sink {i + 1}", line_no)
                demands[i] = _positive(tokens[2], line_no, "weight")
            elif kind == "s":
                if len(tokens) != 3:
                    raise ParseError("supply line must be 's <source> <weight>'", line_no)
                j = _index(tokens[1], line_no, n, "source")
                if j in supplies:
                    raise ParseError(f"duplicate supply for source {j + 1}", line_no)
                supplies[j] = _positive(tokens[2], line_no, "weight")
            elif kind == "a":
                if len(tokens) != 4:
                    raise ParseError("arc line must be 'a <sink> <source> <cost>'", line_no)
                i = _index(tokens[1], line_no, m, "sink")
                j = _index(tokens[2], line_no, n, "source")
                if (i, j) in seen_arcs:
                    raise ParseError(f"duplicate arc ({i + 1}, {j + 1})", line_no)
                seen_arcs.add((i, j))
                arcs.append((i, j, _negative(tokens[3], line_no)))
            else:
                raise ParseError(f"unknown record type {kind!r}", line_no)
        if header is None:
            raise ParseError("missing 'p ot' header", None)
        m, n, a = header
        if len(demands) != m:
            raise ParseError(
                f"header declares {m} sinks but {len(demands)} demand lines found", None
            )
        if len(supplies) != n:
            raise ParseError(
                f"header declares {n} sources but {len(supplies)} supply lines found", None
            )
        if len(arcs) != a:
            raise ParseError(
                f"header declares {a} arcs but {len(arcs)} arc lines found", None
            )
    finally:
        if owned:
            stream.close()
    problem = TransportProblem.from_lists(
        demands=[demands[i] for i in range(m)],
        supplies=[supplies[j] for j in range(n)],
        arcs=arcs,
    )
    validate_problem(problem).raise_if_invalid()
    return problem


def parse_problem_text(text: str) -> TransportProblem:
    return parse_problem(io.StringIO(text))


def write_problem(
    problem: TransportProblem, target: Source, comments: Iterable[str] = ()
) -> None:
    """Write a problem file; comments land as leading 'c' lines."""
    stream, owned = _open_for(target, "w")
    try:
        for comment in comments:
            for piece in str(comment).splitlines() or [""]:
                stream.write(f"c {piece}\n")
        stream.write(
            f"p ot {problem.num_sinks} {problem.num_sources} {len(problem.arcs)}\n"
        )
        for i, w in enumerate(problem.demands):
            stream.write(f"d {i + 1} {w!r}\n")
        for j, w in enumerate(problem.supplies):
            stream.write(f"s {j + 1} {w!r}\n")
        for i, j, c in problem.arcs:
            stream.write(f"a {i + 1} {j + 1} {c!r}\n")
    finally:
        if owned:
            stream.close()


def problem_to_text(problem: TransportProblem, comments: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    write_problem(problem, buf, comments)
    return buf.getvalue()
