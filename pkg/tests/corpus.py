"""Shared formulas and seeded suites for the tests."""

from __future__ import annotations

from hardmdp.cnf import Formula, parse_dimacs
from hardmdp.generate import planted_formula, unique_formula, unsat_formula
from hardmdp.instance import InstanceParams
from hardmdp.rng import RandomStream

WORKED_DIMACS = """c the worked example: unique solution (1, 1, -1, 1)
p cnf 4 7
1 2 3 0
-1 2 3 0
-1 3 4 0
1 2 -3 0
-1 2 -3 0
-3 -3 -3 0
1 1 1 0
"""

WORKED_SOLUTION = (1, 1, -1, 1)

# acceptance suites cap H at v^2 or this, whichever is smaller
SUITE_HCAP = 64


def worked_example() -> Formula:
    return parse_dimacs(WORKED_DIMACS)


def ladder_formula(v: int = 16) -> Formula:
    """x1 forced through two clauses, then every variable forced true.

    From the all-false root, action 2 toggles x2 forever; the unique
    solution is all-true, at distance v from the root.
    """
    clauses = [(1, 2, 2), (1, -2, -2)] + [(i, i, i) for i in range(1, v + 1)]
    return Formula(v, tuple(clauses))


def value_law_suite(k: int) -> list[tuple[Formula, InstanceParams]]:
    """30 certified unique-SAT formulas, v in 4..10, r in {2,3}, H in {v, 2v, min(v^2, cap)}."""
    out = []
    for i in range(30):
        v = 4 + i % 7
        r = 2 + (i // 7) % 2
        H = [v, 2 * v, min(v * v, SUITE_HCAP)][i % 3]
        f = unique_formula(v, RandomStream(1000 + i))
        out.append((f, InstanceParams(v, r, H, k)))
    return out


def unique_suite(n: int, seed: int, v_lo: int = 4, v_hi: int = 10) -> list[Formula]:
    return [unique_formula(v_lo + i % (v_hi - v_lo + 1), RandomStream(seed, (i,))) for i in range(n)]


def unsat_suite(n: int, seed: int, v_lo: int = 4, v_hi: int = 10) -> list[Formula]:
    return [unsat_formula(v_lo + i % (v_hi - v_lo + 1), RandomStream(seed, (i,))) for i in range(n)]


def multi_suite(n: int, seed: int, v_lo: int = 5, v_hi: int = 12) -> list[Formula]:
    """Formulas with 2..8 solutions."""
    return [planted_formula(v_lo + i % (v_hi - v_lo + 1), RandomStream(seed, (i,)), 2, 8) for i in range(n)]
