"""3-CNF formulas, DIMACS I/O and brute-force assignment checking.

Literals are DIMACS-style signed integers: ``3`` is x3, ``-3`` is not x3.
Assignments are bit-packed: bit ``i - 1`` holds variable ``i`` with
0 meaning -1 (false) and 1 meaning +1 (true).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Clause = tuple[int, int, int]

MAX_ENUM_VARS = 24
_CHUNK_BITS = 20


class DimacsError(ValueError):
    """Malformed DIMACS input.  ``kind`` names the failure, ``line`` is 1-based."""

    def __init__(self, kind: str, line: int, message: str):
        super().__init__(f"line {line}: {kind}: {message}")
        self.kind = kind
        self.line = line


@dataclass(frozen=True)
class Assignment:
    """A vector in {-1, +1}^v stored as a packed integer."""

    num_vars: int
    bits: int

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("num_vars must be non-negative")
        if self.bits < 0 or self.bits >> self.num_vars:
            raise ValueError(f"bits {self.bits:#x} do not fit in {self.num_vars} variables")

    @classmethod
    def from_signs(cls, signs: Sequence[int]) -> Assignment:
        bits = 0
        for i, s in enumerate(signs):
            if s == 1:
                bits |= 1 << i
            elif s != -1:
                raise ValueError(f"assignment entries must be -1 or +1, got {s!r}")
        return cls(len(signs), bits)

    @classmethod
    def all_false(cls, num_vars: int) -> Assignment:
        return cls(num_vars, 0)

    def __len__(self) -> int:
        return self.num_vars

    def __getitem__(self, var: int) -> int:
        """Sign of variable ``var`` (1-based)."""
        if not 1 <= var <= self.num_vars:
            raise IndexError(var)
        return 1 if (self.bits >> (var - 1)) & 1 else -1

    def signs(self) -> tuple[int, ...]:
        return tuple(1 if (self.bits >> i) & 1 else -1 for i in range(self.num_vars))

    def flip(self, var: int) -> Assignment:
        if not 1 <= var <= self.num_vars:
            raise IndexError(var)
        return Assignment(self.num_vars, self.bits ^ (1 << (var - 1)))

    def dot(self, other: Assignment) -> int:
        _check_same_length(self, other)
        return self.num_vars - 2 * (self.bits ^ other.bits).bit_count()

    def hex(self) -> str:
        width = max(1, (self.num_vars + 3) // 4)
        return f"{self.bits:0{width}x}"

    def __repr__(self) -> str:
        return f"Assignment({self.signs()})"


@dataclass(frozen=True)
class Formula:
    """A 3-CNF formula over variables 1..num_vars with ordered clauses."""

    num_vars: int
    clauses: tuple[Clause, ...]
    _pos: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _neg: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        clauses = tuple(tuple(int(lit) for lit in c) for c in self.clauses)
        pos, neg = [], []
        for idx, clause in enumerate(clauses):
            if len(clause) != 3:
                raise ValueError(f"clause {idx} has {len(clause)} literals, expected 3")
            p = n = 0
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"clause {idx}: literal {lit} outside 1..{self.num_vars}")
                if lit > 0:
                    p |= 1 << (lit - 1)
                else:
                    n |= 1 << (-lit - 1)
            pos.append(p)
            neg.append(n)
        object.__setattr__(self, "clauses", clauses)
        object.__setattr__(self, "_pos", tuple(pos))
        object.__setattr__(self, "_neg", tuple(neg))

    def clause_vars(self, idx: int) -> tuple[int, int, int]:
        a, b, c = self.clauses[idx]
        return abs(a), abs(b), abs(c)

    def first_unsat_bits(self, bits: int) -> int | None:
        """Index of the first clause falsified by packed assignment ``bits``."""
        for idx, (p, n) in enumerate(zip(self._pos, self._neg)):
            if not (bits & p) and not (~bits & n):
                return idx
        return None

    def satisfied_by_bits(self, bits: int) -> bool:
        return self.first_unsat_bits(bits) is None

    def sat_mask(self, words: np.ndarray) -> np.ndarray:
        """Vectorised evaluation over an array of packed assignments."""
        alive = np.ones(words.shape, dtype=bool)
        for p, n in zip(self._pos, self._neg):
            alive &= ((words & p) != 0) | ((~words & n) != 0)
        return alive


def _check_same_length(w: Assignment, w2: Assignment) -> None:
    if w.num_vars != w2.num_vars:
        raise ValueError(f"assignment lengths differ: {w.num_vars} != {w2.num_vars}")


def _check_fits(f: Formula, w: Assignment) -> None:
    if w.num_vars != f.num_vars:
        raise ValueError(f"assignment has {w.num_vars} entries, formula has {f.num_vars} variables")


def parse_dimacs(text: str) -> Formula:
    """Parse DIMACS CNF text; every clause must have exactly three literals."""
    header: tuple[int, int] | None = None
    clauses: list[Clause] = []
    current: list[int] = []
    start_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise DimacsError("header", lineno, "duplicate problem line")
            if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
                raise DimacsError("header", lineno, f"expected 'p cnf <vars> <clauses>', got {line!r}")
            try:
                nv, nc = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError("header", lineno, f"non-integer counts in {line!r}") from None
            if nv < 0 or nc < 0:
                raise DimacsError("header", lineno, "negative counts")
            header = (nv, nc)
            continue
        if header is None:
            raise DimacsError("header", lineno, "clause data before problem line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError("trailing", lineno, f"unexpected token {tok!r}") from None
            if lit == 0:
                if len(current) != 3:
                    raise DimacsError(
                        "clause-length", start_line, f"clause has {len(current)} literals, expected 3"
                    )
                clauses.append((current[0], current[1], current[2]))
                current = []
                continue
            if not current:
                start_line = lineno
            if abs(lit) > header[0]:
                raise DimacsError("var-range", lineno, f"literal {lit} exceeds declared {header[0]} variables")
            current.append(lit)
    if header is None:
        raise DimacsError("header", 0, "missing problem line")
    if current:
        raise DimacsError("trailing", start_line, f"unterminated clause {current}")
    if len(clauses) != header[1]:
        raise DimacsError(
            "header", 0, f"problem line declares {header[1]} clauses, found {len(clauses)}"
        )
    return Formula(header[0], tuple(clauses))


def read_dimacs(path) -> Formula:
    with open(path, encoding="utf-8") as fh:
        return parse_dimacs(fh.read())


def emit_dimacs(f: Formula, comments: Iterable[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {f.num_vars} {len(f.clauses)}")
    lines.extend(" ".join(str(lit) for lit in clause) + " 0" for clause in f.clauses)
    return "\n".join(lines) + "\n"


def evaluate(f: Formula, w: Assignment) -> bool:
    _check_fits(f, w)
    return f.satisfied_by_bits(w.bits)


def first_unsatisfied_clause(f: Formula, w: Assignment) -> int | None:
    _check_fits(f, w)
    return f.first_unsat_bits(w.bits)


def hamming_dist(w: Assignment, w2: Assignment) -> int:
    _check_same_length(w, w2)
    return (w.bits ^ w2.bits).bit_count()


def _chunks(num_vars: int):
    total = 1 << num_vars
    step = 1 << min(num_vars, _CHUNK_BITS)
    for lo in range(0, total, step):
        yield np.arange(lo, min(lo + step, total), dtype=np.int64)


def _check_enumerable(f: Formula, max_vars: int) -> None:
    if f.num_vars > max_vars:
        raise ValueError(f"{f.num_vars} variables exceeds enumeration cap of {max_vars}")


def count_solutions(f: Formula, cap: int | None = None, max_vars: int = MAX_ENUM_VARS) -> int:
    """Number of satisfying assignments by exhaustive enumeration.

    Stops early once the count exceeds ``cap``; the returned value is then
    some number greater than ``cap`` rather than the exact total.
    """
    _check_enumerable(f, max_vars)
    count = 0
    for words in _chunks(f.num_vars):
        count += int(np.count_nonzero(f.sat_mask(words)))
        if cap is not None and count > cap:
            break
    return count


def solutions(f: Formula, limit: int | None = None, max_vars: int = MAX_ENUM_VARS) -> list[Assignment]:
    """Satisfying assignments in increasing packed order (at most ``limit``)."""
    _check_enumerable(f, max_vars)
    found: list[Assignment] = []
    for words in _chunks(f.num_vars):
        for bits in words[f.sat_mask(words)].tolist():
            found.append(Assignment(f.num_vars, bits))
            if limit is not None and len(found) >= limit:
                return found
    return found


def unique_solution(f: Formula) -> Assignment | None:
    """The unique solution, or None when unsatisfiable.

    Raises ValueError when the formula breaks the Unique-3-SAT promise.
    """
    sols = solutions(f, limit=2)
    if len(sols) > 1:
        raise ValueError("formula has more than one satisfying assignment")
    return sols[0] if sols else None
