"""Problem file format: parsing, writing, round trips, and diagnostics."""

import io

import numpy as np
import pytest

from otauction import (
    InvalidProblemError,
    ParseError,
    gen_random_feasible,
    parse_problem,
    parse_problem_text,
    problem_to_text,
    write_problem,
)

GOOD = """\
c a 2x2 example
p ot 2 2 4
d 1 1
d 2 1
s 1 1
s 2 1
a 1 1 -1
a 1 2 -3
a 2 1 -3
a 2 2 -1
"""


class TestParsing:
    def test_minimal_file(self):
        p = parse_problem_text(GOOD)
        assert p.num_sinks == 2 and p.num_sources == 2
        np.testing.assert_array_equal(p.demand_array, [1.0, 1.0])
        assert p.arc_costs[(0, 1)] == -3.0

    def test_comments_and_blank_lines_ignored(self):
        noisy = "c leading\n\n" + GOOD + "\nc trailing\n"
        assert parse_problem_text(noisy).arcs == parse_problem_text(GOOD).arcs

    def test_parses_from_stream(self):
        p = parse_problem(io.StringIO(GOOD))
        assert p.num_sinks == 2

    def test_parses_from_path(self, tmp_path):
        f = tmp_path / "square.ot"
        f.write_text(GOOD, encoding="utf-8")
        assert parse_problem(str(f)).num_sources == 2

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("d 1 1\n", "header"),
            ("p ot 2 2 4\np ot 2 2 4\n", "duplicate header"),
            ("p beans 2 2 4\n", "header"),
            ("p ot 0 2 4\n", "range"),
            ("p ot 1 1 1\nd 1 1\ns 1 1\na 1 1 1.5\n", "negative"),
            ("p ot 1 1 2\nd 1 1\ns 1 1\na 1 1 -1\na 1 1 -2\n", "duplicate"),
            ("p ot 1 1 1\nd 1 one\ns 1 1\na 1 1 -1\n", "number"),
            ("p ot 1 2 1\nd 1 1\ns 1 1\ns 5 1\na 1 1 -1\n", "index"),
            ("p ot 1 1 1\nd 1 1\nx 1 1\n", "unknown record"),
        ],
        ids=[
            "record-before-header",
            "duplicate-header",
            "bad-magic",
            "zero-count",
            "positive-cost",
            "duplicate-arc",
            "not-a-number",
            "index-out-of-range",
            "unknown-record",
        ],
    )
    def test_malformed_input(self, text, fragment):
        with pytest.raises(ParseError) as exc:
            parse_problem_text(text)
        assert exc.value.line is not None
        assert fragment.lower() in str(exc.value).lower()

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("c nothing else\n", "missing"),
            ("p ot 2 1 2\nd 1 1\nd 2 1\ns 1 2\na 1 1 -1\n", "arc lines"),
            ("p ot 2 1 2\nd 1 2\ns 1 2\na 1 1 -1\na 2 1 -1\n", "demand lines"),
        ],
        ids=["no-header", "arc-count", "demand-count"],
    )
    def test_count_mismatches_detected_at_end(self, text, fragment):
        with pytest.raises(ParseError) as exc:
            parse_problem_text(text)
        assert fragment.lower() in str(exc.value).lower()

    def test_structurally_bad_instance_fails_validation(self):
        unbalanced = (
            "p ot 1 1 1\n"
            "d 1 2\n"
            "s 1 1\n"
            "a 1 1 -1\n"
        )
        with pytest.raises(InvalidProblemError):
            parse_problem_text(unbalanced)


class TestWriting:
    def test_round_trip_preserves_real_weights_exactly(self):
        p = gen_random_feasible(6, 7, density=0.7, weight_style="real", seed=19)
        q = parse_problem_text(problem_to_text(p))
        assert q.demands == p.demands
        assert q.supplies == p.supplies
        assert q.arcs == p.arcs

    def test_round_trip_irrational_costs(self):
        from otauction import gen_real_valued

        p = gen_real_valued(15, seed=20)
        q = parse_problem_text(problem_to_text(p))
        assert q.arcs == p.arcs

    def test_comments_written_first(self):
        p = parse_problem_text(GOOD)
        text = problem_to_text(p, comments=["made by hand", "two lines\nof it"])
        lines = text.splitlines()
        assert lines[0] == "c made by hand"
        assert lines[1] == "c two lines"
        assert lines[2] == "c of it"
        assert lines[3].startswith("p ot ")

    def test_write_to_path(self, tmp_path):
        p = parse_problem_text(GOOD)
        target = tmp_path / "out.ot"
        write_problem(p, str(target), comments=["saved"])
        again = parse_problem(str(target))
        assert again.arcs == p.arcs

    def test_stable_output(self):
        p = parse_problem_text(GOOD)
        assert problem_to_text(p) == problem_to_text(p)
