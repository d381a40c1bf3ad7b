from __future__ import annotations

import itertools

import pytest

from corpus import WORKED_DIMACS, WORKED_SOLUTION
from hardmdp.cnf import (
    Assignment,
    DimacsError,
    Formula,
    count_solutions,
    emit_dimacs,
    evaluate,
    first_unsatisfied_clause,
    hamming_dist,
    parse_dimacs,
    solutions,
    unique_solution,
)


def brute_count(f: Formula) -> int:
    n = 0
    for signs in itertools.product((-1, 1), repeat=f.num_vars):
        ok = all(any((lit > 0) == (signs[abs(lit) - 1] == 1) for lit in c) for c in f.clauses)
        n += ok
    return n


class TestParse:
    def test_minimal(self):
        f = parse_dimacs("p cnf 3 1\n1 2 3 0")
        assert f.num_vars == 3
        assert f.clauses == ((1, 2, 3),)

    def test_worked_example(self, worked_formula):
        assert worked_formula.num_vars == 4
        assert len(worked_formula.clauses) == 7
        assert worked_formula.clauses[0] == (1, 2, 3)
        assert worked_formula.clauses[6] == (1, 1, 1)

    def test_clause_spanning_lines_and_comments(self):
        f = parse_dimacs("c hi\np cnf 3 2\n1 -2\n 3 0 -1 -2 -3 0\n")
        assert f.clauses == ((1, -2, 3), (-1, -2, -3))

    @pytest.mark.parametrize(
        "text, kind, line",
        [
            ("p cnf 2 1\n1 2 0", "clause-length", 2),
            ("p cnf 4 1\n1 2 3 4 0", "clause-length", 2),
            ("p cnf x 1\n1 2 3 0", "header", 1),
            ("p dnf 3 1\n1 2 3 0", "header", 1),
            ("1 2 3 0\n", "header", 1),
            ("p cnf 3 1\n1 2 7 0", "var-range", 2),
            ("p cnf 3 1\n1 2 3 0\nfoo", "trailing", 3),
            ("p cnf 3 1\n1 2 3 0\n1 2", "trailing", 3),
        ],
    )
    def test_errors_are_distinct(self, text, kind, line):
        with pytest.raises(DimacsError) as err:
            parse_dimacs(text)
        assert err.value.kind == kind
        assert err.value.line == line

    def test_clause_count_mismatch(self):
        with pytest.raises(DimacsError) as err:
            parse_dimacs("p cnf 3 2\n1 2 3 0\n")
        assert err.value.kind == "header"

    def test_round_trip(self, worked_formula):
        assert parse_dimacs(emit_dimacs(worked_formula, ["again"])) == worked_formula
        assert emit_dimacs(parse_dimacs(WORKED_DIMACS)).startswith("p cnf 4 7\n")


class TestEvaluate:
    def test_worked_solution(self, worked_formula):
        assert evaluate(worked_formula, Assignment.from_signs(WORKED_SOLUTION))

    def test_worked_root(self, worked_formula):
        assert not evaluate(worked_formula, Assignment.all_false(4))

    def test_tautology_always_true(self):
        f = Formula(2, ((1, -1, 1),))
        assert all(evaluate(f, Assignment(2, b)) for b in range(4))

    def test_length_mismatch(self, worked_formula):
        with pytest.raises(ValueError):
            evaluate(worked_formula, Assignment.all_false(3))


class TestFirstUnsatisfied:
    def test_root(self, worked_formula):
        idx = first_unsatisfied_clause(worked_formula, Assignment.all_false(4))
        assert idx == 0
        assert worked_formula.clause_vars(idx) == (1, 2, 3)

    def test_after_flipping_x1(self, worked_formula):
        idx = first_unsatisfied_clause(worked_formula, Assignment.from_signs((1, -1, -1, -1)))
        assert idx == 1
        assert worked_formula.clauses[idx] == (-1, 2, 3)

    def test_solution(self, worked_formula):
        assert first_unsatisfied_clause(worked_formula, Assignment.from_signs(WORKED_SOLUTION)) is None

    def test_length_mismatch(self, worked_formula):
        with pytest.raises(ValueError):
            first_unsatisfied_clause(worked_formula, Assignment.all_false(5))


class TestAssignment:
    def test_signs_round_trip(self):
        w = Assignment.from_signs((1, -1, -1, 1))
        assert w.signs() == (1, -1, -1, 1)
        assert w[1] == 1 and w[2] == -1
        assert w.bits == 0b1001

    def test_bad_entries(self):
        with pytest.raises(ValueError):
            Assignment.from_signs((1, 0))
        with pytest.raises(ValueError):
            Assignment(2, 7)

    def test_flip_and_dot(self):
        w = Assignment.all_false(4)
        assert w.flip(2).signs() == (-1, 1, -1, -1)
        assert w.dot(w) == 4
        assert w.dot(Assignment.from_signs(WORKED_SOLUTION)) == -2

    def test_hex_width(self):
        assert Assignment(4, 0xB).hex() == "b"
        assert Assignment(9, 1).hex() == "001"


class TestHamming:
    def test_identity(self):
        w = Assignment.from_signs((1, -1, 1))
        assert hamming_dist(w, w) == 0

    def test_worked_root_to_solution(self):
        a, b = Assignment.all_false(4), Assignment.from_signs(WORKED_SOLUTION)
        assert hamming_dist(a, b) == 3
        assert a.dot(b) == -2
        assert hamming_dist(a, b) == (4 - a.dot(b)) // 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            hamming_dist(Assignment(2, 0), Assignment(3, 0))


class TestCounting:
    def test_worked_unique(self, worked_formula):
        assert count_solutions(worked_formula) == 1
        assert unique_solution(worked_formula).signs() == WORKED_SOLUTION

    def test_empty_formula(self):
        assert count_solutions(Formula(5, ())) == 32

    def test_contradiction(self):
        f = Formula(1, ((1, 1, 1), (-1, -1, -1)))
        assert count_solutions(f) == 0
        assert unique_solution(f) is None

    def test_cap_early_exit(self):
        assert count_solutions(Formula(6, ()), cap=3) > 3

    def test_too_many_vars(self):
        with pytest.raises(ValueError):
            count_solutions(Formula(30, ()))

    def test_unique_solution_rejects_multiple(self):
        with pytest.raises(ValueError):
            unique_solution(Formula(2, ((1, 1, 1),)))

    def test_matches_brute_force(self):
        f = Formula(5, ((1, -2, 3), (-1, 4, 5), (2, -3, -5), (-4, -4, 1)))
        assert count_solutions(f) == brute_count(f) == len(solutions(f))
