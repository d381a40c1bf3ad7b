"""The CNF -> MDP compiler.

States carry a packed assignment and a depth.  From a normal state the
actions flip variables of the first clause the assignment falsifies; a
satisfying state or a state at depth H exits to the terminal state, paying
a Bernoulli reward with mean

    g(l, dist) = (1 - (l + dist) / (H + v)) ** r

where dist is the Hamming distance to the unique solution.  The two-action
variant splits the three-way choice through an intermediate state at the
same depth.

Feature vectors are indexed by ordered tuples of variable indices.  With
D = 2(H + v) the optimal value of a normal state is

    (D - 2l - v + <w, w*>)^r / D^r

and expanding the power over ordered tuples gives each coefficient as an
integer over the common denominator D^r, so every feature vector is stored
as integer numerators plus one denominator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .cnf import Assignment, Formula
from .instance import InstanceParams

Poly = dict[tuple[int, ...], int]


@dataclass(frozen=True, slots=True)
class State:
    bits: int
    depth: int
    pending: tuple[int, int] | None = None
    terminal: bool = False

    @property
    def is_intermediate(self) -> bool:
        return self.pending is not None

    def assignment(self, num_vars: int) -> Assignment:
        if self.terminal:
            raise ValueError("the terminal state has no assignment")
        return Assignment(num_vars, self.bits)

    def key(self, num_vars: int) -> str:
        """Canonical text form: ``N:<hex>:<depth>``, ``I:<hex>:<depth>:<i1>,<i2>`` or ``T``."""
        if self.terminal:
            return "T"
        word = Assignment(num_vars, self.bits).hex()
        if self.pending is None:
            return f"N:{word}:{self.depth}"
        return f"I:{word}:{self.depth}:{self.pending[0]},{self.pending[1]}"


BOTTOM = State(0, 0, None, True)


def parse_state_key(key: str) -> State:
    if key == "T":
        return BOTTOM
    parts = key.split(":")
    if parts[0] == "N" and len(parts) == 3:
        return State(int(parts[1], 16), int(parts[2]))
    if parts[0] == "I" and len(parts) == 4:
        i1, i2 = (int(x) for x in parts[3].split(","))
        return State(int(parts[1], 16), int(parts[2]), (i1, i2))
    raise ValueError(f"bad state key {key!r}")


def root_state() -> State:
    """All-(-1) assignment at depth 0."""
    return State(0, 0)


def g_reward(depth: int, dist: int, params: InstanceParams) -> Fraction:
    if not 0 <= depth <= params.horizon:
        raise ValueError(f"depth {depth} outside 0..{params.horizon}")
    if not 0 <= dist <= params.num_vars:
        raise ValueError(f"distance {dist} outside 0..{params.num_vars}")
    return Fraction(params.denominator - depth - dist, params.denominator) ** params.degree


def _check_action(a: int, k: int) -> None:
    if not isinstance(a, int) or isinstance(a, bool) or not 1 <= a <= k:
        raise ValueError(f"action must be in 1..{k}, got {a!r}")


def _check_state(s: State, params: InstanceParams) -> None:
    if s.terminal:
        raise ValueError("no actions are available from the terminal state")
    if not 0 <= s.depth <= params.horizon:
        raise ValueError(f"depth {s.depth} outside 0..{params.horizon}")


def is_exit(s: State, f: Formula, params: InstanceParams) -> bool:
    """True for normal states whose every action leads to the terminal state."""
    if s.terminal or s.pending is not None:
        return False
    return s.depth >= params.horizon or f.satisfied_by_bits(s.bits)


def transition3(s: State, a: int, f: Formula, params: InstanceParams) -> State:
    if params.num_actions != 3:
        raise ValueError("transition3 needs a 3-action instance")
    _check_action(a, 3)
    _check_state(s, params)
    if s.pending is not None:
        raise ValueError("intermediate states only exist in 2-action instances")
    if s.depth >= params.horizon:
        return BOTTOM
    idx = f.first_unsat_bits(s.bits)
    if idx is None:
        return BOTTOM
    var = abs(f.clauses[idx][a - 1])
    return State(s.bits ^ (1 << (var - 1)), s.depth + 1)


def transition2(s: State, a: int, f: Formula, params: InstanceParams) -> State:
    if params.num_actions != 2:
        raise ValueError("transition2 needs a 2-action instance")
    _check_action(a, 2)
    _check_state(s, params)
    if s.pending is not None:
        var = s.pending[a - 1]
        return State(s.bits ^ (1 << (var - 1)), s.depth + 1)
    if s.depth >= params.horizon:
        return BOTTOM
    idx = f.first_unsat_bits(s.bits)
    if idx is None:
        return BOTTOM
    i1, i2, i3 = f.clause_vars(idx)
    if a == 1:
        return State(s.bits ^ (1 << (i3 - 1)), s.depth + 1)
    return State(s.bits, s.depth, (i1, i2))


def transition(s: State, a: int, f: Formula, params: InstanceParams) -> State:
    if params.num_actions == 3:
        return transition3(s, a, f, params)
    return transition2(s, a, f, params)


def expected_reward(s: State, f: Formula, params: InstanceParams, w_star: Assignment | None) -> Fraction:
    """Mean reward of any action from ``s`` in the full MDP (zero when w* is None)."""
    _check_state(s, params)
    if w_star is None or not is_exit(s, f, params):
        return Fraction(0)
    return g_reward(s.depth, (s.bits ^ w_star.bits).bit_count(), params)


def optimal_value(s: State, w_star: Assignment | None, params: InstanceParams) -> Fraction:
    """Closed-form V*: g for normal states, g with the extra 2 for stuck intermediates."""
    if s.terminal or w_star is None:
        return Fraction(0)
    diff = s.bits ^ w_star.bits
    numer = s.depth + diff.bit_count()
    if s.pending is not None:
        i1, i2 = s.pending
        both_right = not (diff >> (i1 - 1)) & 1 and not (diff >> (i2 - 1)) & 1
        numer += 2 * both_right
    return Fraction(params.denominator - numer, params.denominator) ** params.degree


def _sign(bits: int, var: int) -> int:
    return 1 if (bits >> (var - 1)) & 1 else -1


def poly_mul(p: Poly, q: Poly) -> Poly:
    """Product of tuple-indexed polynomials; monomials multiply by concatenation."""
    out: Poly = {}
    get = out.get
    for t1, c1 in p.items():
        for t2, c2 in q.items():
            t = t1 + t2
            out[t] = get(t, 0) + c1 * c2
    return {t: c for t, c in out.items() if c}


def poly_pow(base: Poly, r: int) -> Poly:
    out: Poly = {(): 1}
    for _ in range(r):
        out = poly_mul(out, base)
    return out


def base_polynomial(s: State, params: InstanceParams) -> Poly:
    """D * (1 - numerator/(H+v)) as a linear-plus-pair polynomial in w*."""
    v, D = params.num_vars, 2 * params.denominator
    base: Poly = {(): D - 2 * s.depth - v}
    for t in range(1, v + 1):
        base[(t,)] = _sign(s.bits, t)
    if s.pending is not None:
        # 4 * [w_i1 = w*_i1][w_i2 = w*_i2] = (1 + w_i1 w*_i1)(1 + w_i2 w*_i2)
        i1, i2 = s.pending
        pair = poly_mul({(): 1, (i1,): _sign(s.bits, i1)}, {(): 1, (i2,): _sign(s.bits, i2)})
        for t, c in pair.items():
            base[t] = base.get(t, 0) - c
        base = {t: c for t, c in base.items() if c}
    return base


class FeatureVector:
    """Sparse tuple-indexed coefficients, stored as integers over one denominator."""

    __slots__ = ("entries", "denominator")

    def __init__(self, entries: Poly | None = None, denominator: int = 1):
        if denominator <= 0:
            raise ValueError("denominator must be positive")
        self.entries: Poly = {t: c for t, c in (entries or {}).items() if c}
        self.denominator = denominator

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, t: tuple[int, ...]) -> Fraction:
        return Fraction(self.entries.get(tuple(t), 0), self.denominator)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        # a/b == c/d  <=>  a*d == c*b, compared entrywise
        if self.entries.keys() != other.entries.keys():
            return False
        return all(c * other.denominator == other.entries[t] * self.denominator for t, c in self.entries.items())

    def __repr__(self) -> str:
        return f"FeatureVector({len(self.entries)} entries / {self.denominator})"

    def items(self) -> Iterator[tuple[tuple[int, ...], Fraction]]:
        for t, c in self.entries.items():
            yield t, Fraction(c, self.denominator)

    def support(self):
        return self.entries.keys()

    def dot(self, theta: ThetaVector) -> Fraction:
        if theta.w_star is None or not self.entries:
            return Fraction(0)
        sign = theta.sign
        return Fraction(sum(c * sign(t) for t, c in self.entries.items()), self.denominator)

    def scaled_floats(self) -> dict[tuple[int, ...], float]:
        return {t: c / self.denominator for t, c in self.entries.items()}


ZERO_FEATURES = FeatureVector()


class ThetaVector:
    """theta_S = prod_{i in S} w*_i over every tuple of length <= max_len.

    Entries are computed on demand; the full vector has ``len(self)`` entries.
    An unsatisfiable formula gets the zero vector.
    """

    def __init__(self, w_star: Assignment | None, num_vars: int, max_len: int):
        if w_star is not None and w_star.num_vars != num_vars:
            raise ValueError("solution length does not match the formula")
        self.w_star = w_star
        self.num_vars = num_vars
        self.max_len = max_len
        self._neg = 0 if w_star is None else ~w_star.bits & ((1 << num_vars) - 1)
        self._cache: dict[tuple[int, ...], int] = {}

    def __len__(self) -> int:
        return sum(self.num_vars**j for j in range(self.max_len + 1))

    def sign(self, t: tuple[int, ...]) -> int:
        s = self._cache.get(t)
        if s is None:
            if len(t) > self.max_len or any(not 1 <= i <= self.num_vars for i in t):
                raise KeyError(t)
            if self.w_star is None:
                s = 0
            else:
                odd = sum((self._neg >> (i - 1)) & 1 for i in t) & 1
                s = -1 if odd else 1
            self._cache[t] = s
        return s

    def __getitem__(self, t: tuple[int, ...]) -> int:
        return self.sign(tuple(t))

    def items(self) -> Iterator[tuple[tuple[int, ...], int]]:
        idx = range(1, self.num_vars + 1)
        for j in range(self.max_len + 1):
            for t in itertools.product(idx, repeat=j):
                yield t, self.sign(t)


def features_psi(s: State, params: InstanceParams) -> FeatureVector:
    if s.terminal:
        return ZERO_FEATURES
    if s.pending is not None and params.num_actions != 2:
        raise ValueError("intermediate states only exist in 2-action instances")
    poly = poly_pow(base_polynomial(s, params), params.degree)
    return FeatureVector(poly, (2 * params.denominator) ** params.degree)


def features_psi_sa(s: State, a: int, f: Formula, params: InstanceParams) -> FeatureVector:
    """Features of the successor; an exit pair keeps its source state's features.

    From an exit state the action pays the state's reward and ends the
    episode, so Q*(s, a) = V*(s) there and psi(s, a) = psi(s) keeps Q* linear.
    """
    child = transition(s, a, f, params)
    if child.terminal:
        return features_psi(s, params)
    return features_psi(child, params)


def theta(f: Formula, w_star: Assignment | None, params: InstanceParams) -> ThetaVector:
    if w_star is not None and not f.satisfied_by_bits(w_star.bits):
        raise ValueError("supplied w* does not satisfy the formula")
    return ThetaVector(w_star, params.num_vars, params.feature_degree)


@dataclass(frozen=True)
class HardMDP:
    """A compiled instance: formula plus parameters."""

    formula: Formula
    params: InstanceParams

    def __post_init__(self):
        if self.formula.num_vars != self.params.num_vars:
            raise ValueError("params were derived for a different variable count")

    @property
    def num_actions(self) -> int:
        return self.params.num_actions

    def root(self) -> State:
        return root_state()

    def transition(self, s: State, a: int) -> State:
        return transition(s, a, self.formula, self.params)

    def is_exit(self, s: State) -> bool:
        return is_exit(s, self.formula, self.params)

    def expected_reward(self, s: State, w_star: Assignment | None) -> Fraction:
        return expected_reward(s, self.formula, self.params, w_star)

    def features(self, s: State, a: int | None = None) -> FeatureVector:
        if a is None:
            return features_psi(s, self.params)
        return features_psi_sa(s, a, self.formula, self.params)

    def theta(self, w_star: Assignment | None) -> ThetaVector:
        return theta(self.formula, w_star, self.params)
