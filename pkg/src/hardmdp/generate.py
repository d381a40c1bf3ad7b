"""Random 3-CNF instances with certified solution counts.

All generators track the live solution set as a boolean mask over the
2^v assignments, so every returned count is exact.
"""

from __future__ import annotations

import numpy as np

from .cnf import MAX_ENUM_VARS, Clause, Formula
from .rng import RandomStream


def random_clause(v: int, rng: RandomStream) -> Clause:
    if v < 3:
        vars_ = [1 + rng.below(v) for _ in range(3)]
    else:
        vars_ = [int(x) + 1 for x in rng.generator.choice(v, size=3, replace=False)]
    return tuple(x if rng.below(2) else -x for x in vars_)  # type: ignore[return-value]


def _clause_mask(words: np.ndarray, clause: Clause) -> np.ndarray:
    ok = np.zeros(words.shape, dtype=bool)
    for lit in clause:
        bit = (words >> (abs(lit) - 1)) & 1
        ok |= bit == (1 if lit > 0 else 0)
    return ok


def _words(v: int) -> np.ndarray:
    if v > MAX_ENUM_VARS:
        raise ValueError(f"v={v} is beyond the enumeration cap")
    return np.arange(1 << v, dtype=np.int64)


def planted_formula(
    v: int, rng: RandomStream, lo: int = 1, hi: int = 1, max_clauses: int | None = None
) -> Formula:
    """Random formula whose solution count lies in [lo, hi].

    A hidden assignment is drawn; random clauses it satisfies are added
    (others rejected) until the count falls into range.  Restarts if the
    count jumps below ``lo``.
    """
    if not 1 <= lo <= hi:
        raise ValueError("need 1 <= lo <= hi")
    words = _words(v)
    max_clauses = max_clauses or 40 * v
    while True:
        planted = rng.bits(v)
        alive = np.ones(words.shape, dtype=bool)
        clauses: list[Clause] = []
        while len(clauses) < max_clauses:
            c = random_clause(v, rng)
            if not any((lit > 0) == bool((planted >> (abs(lit) - 1)) & 1) for lit in c):
                continue
            nxt = alive & _clause_mask(words, c)
            n = int(np.count_nonzero(nxt))
            if n < lo:
                break
            if n == int(np.count_nonzero(alive)):
                continue
            alive = nxt
            clauses.append(c)
            if n <= hi:
                return Formula(v, tuple(clauses))


def unique_formula(v: int, rng: RandomStream) -> Formula:
    return planted_formula(v, rng, 1, 1)


def unsat_formula(v: int, rng: RandomStream) -> Formula:
    """Random clauses (skipping redundant ones) until nothing satisfies."""
    words = _words(v)
    alive = np.ones(words.shape, dtype=bool)
    clauses: list[Clause] = []
    while alive.any():
        c = random_clause(v, rng)
        nxt = alive & _clause_mask(words, c)
        if np.count_nonzero(nxt) == np.count_nonzero(alive):
            continue
        alive = nxt
        clauses.append(c)
    return Formula(v, tuple(clauses))
