"""Exact optimal values by backward induction over reachable states.

States are folded on (assignment, depth, pending pair): transitions and
rewards depend only on that triple, so the 3^H tree collapses to at most
2^v * (H + 1) normal states plus their intermediates.  Rewards enter as
exact Bernoulli means; nothing is sampled.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

from .cnf import Assignment, Formula, count_solutions, unique_solution
from .instance import InstanceParams
from .mdp import HardMDP, State, optimal_value, root_state

DEFAULT_CAP = 10**8


class CapExceeded(RuntimeError):
    pass


def work_cap(cap: int | None = None) -> int:
    if cap is not None:
        return cap
    env = os.environ.get("HARDMDP_CAP")
    return int(env) if env else DEFAULT_CAP


def work_estimate(params: InstanceParams) -> int:
    return (1 << params.num_vars) * (params.horizon + 1) * params.num_actions


@dataclass
class ValueTable:
    mdp: HardMDP
    solution: Assignment | None
    values: dict[State, Fraction]
    children: dict[State, tuple[State, ...]]

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, s: State) -> Fraction:
        if s.terminal:
            return Fraction(0)
        return self.values[s]

    def states(self) -> Iterator[State]:
        return iter(self.values)

    def q_value(self, s: State, a: int) -> Fraction:
        child = self.children[s][a - 1]
        return self.mdp.expected_reward(s, self.solution) + self[child]

    def pairs(self) -> Iterator[tuple[State, int]]:
        for s, kids in self.children.items():
            for a in range(1, len(kids) + 1):
                yield s, a

    def export(self) -> str:
        """One ``<state key> <num>/<den>`` line per state, sorted by key."""
        v = self.mdp.params.num_vars
        rows = sorted((s.key(v), val) for s, val in self.values.items())
        return "".join(f"{k} {val.numerator}/{val.denominator}\n" for k, val in rows)


def reachable_states(mdp: HardMDP) -> dict[State, tuple[State, ...]]:
    """Forward closure from the root: state -> children (terminal included)."""
    k = mdp.num_actions
    root = root_state()
    children: dict[State, tuple[State, ...]] = {}
    stack = [root]
    seen = {root}
    while stack:
        s = stack.pop()
        kids = tuple(mdp.transition(s, a) for a in range(1, k + 1))
        children[s] = kids
        for c in kids:
            if not c.terminal and c not in seen:
                seen.add(c)
                stack.append(c)
    return children


def exact_values(
    f: Formula,
    params: InstanceParams,
    cap: int | None = None,
    solution: Assignment | None = ...,  # type: ignore[assignment]
) -> ValueTable:
    """V* for every reachable state.

    The solution is found by enumeration unless passed in (``None`` means
    the formula is known to be unsatisfiable).
    """
    limit = work_cap(cap)
    if work_estimate(params) > limit:
        raise CapExceeded(f"2^v (H+1) k = {work_estimate(params)} exceeds work cap {limit}")
    w_star = unique_solution(f) if solution is ... else solution
    mdp = HardMDP(f, params)
    children = reachable_states(mdp)
    # intermediates depend on depth+1; normals on depth+1 and same-depth intermediates
    order = sorted(children, key=lambda s: (-s.depth, s.pending is None))
    values: dict[State, Fraction] = {}
    zero = Fraction(0)
    for s in order:
        if mdp.is_exit(s):
            values[s] = mdp.expected_reward(s, w_star)
        else:
            values[s] = max(zero if c.terminal else values[c] for c in children[s])
    return ValueTable(mdp, w_star, values, children)


def _require_unique(f: Formula) -> Assignment:
    n = count_solutions(f, cap=1)
    if n != 1:
        raise ValueError(f"formula must be uniquely satisfiable (found {'>1' if n > 1 else 0} solutions)")
    w = unique_solution(f)
    assert w is not None
    return w


@dataclass
class ValueLawReport:
    max_abs_error: Fraction
    counterexample: str | None
    states_checked: int
    intermediate_checked: int

    @property
    def ok(self) -> bool:
        return self.max_abs_error == 0


def verify_value_law(
    f: Formula,
    params: InstanceParams,
    closed_form: Callable[[State, Assignment, InstanceParams], Fraction] = optimal_value,
    cap: int | None = None,
    table: ValueTable | None = None,
) -> ValueLawReport:
    """Compare DP values with the closed form at every reachable state."""
    w_star = _require_unique(f)
    table = table or exact_values(f, params, cap, solution=w_star)
    worst, where, n_int = Fraction(0), None, 0
    for s, val in table.values.items():
        n_int += s.is_intermediate
        err = abs(val - closed_form(s, w_star, params))
        if err > worst:
            worst, where = err, s.key(params.num_vars)
    return ValueLawReport(worst, where, len(table), n_int)


@dataclass
class LinearityReport:
    max_residual_v: Fraction
    max_residual_q: Fraction
    d_used: int
    d: int
    states: int
    pairs: int
    counterexample: str | None = None
    support: set = field(default_factory=set, repr=False)

    @property
    def ok(self) -> bool:
        return self.max_residual_v == 0 and self.max_residual_q == 0 and self.d_used <= self.d


def verify_linearity(
    f: Formula, params: InstanceParams, cap: int | None = None, table: ValueTable | None = None
) -> LinearityReport:
    """Exact residuals V* - <theta, psi(s)> and Q* - <theta, psi(s, a)>."""
    w_star = _require_unique(f)
    table = table or exact_values(f, params, cap, solution=w_star)
    mdp = table.mdp
    th = mdp.theta(w_star)
    support: set = set()

    def inner(s: State, a: int | None = None) -> Fraction:
        psi = mdp.features(s, a)
        support.update(psi.support())
        return psi.dot(th)

    worst_v = worst_q = Fraction(0)
    where = None
    for s, val in table.values.items():
        err = abs(val - inner(s))
        if err > worst_v:
            worst_v, where = err, s.key(params.num_vars)
    # psi(s, a) depends only on the state it is built from, so pairs sharing
    # that state share one evaluation
    q_cache: dict[State, Fraction] = {}
    n_pairs = 0
    for s, a in table.pairs():
        n_pairs += 1
        child = table.children[s][a - 1]
        source = s if child.terminal else child
        if source not in q_cache:
            q_cache[source] = inner(s, a)
        err = abs(table.q_value(s, a) - q_cache[source])
        if err > worst_q:
            worst_q, where = err, f"{s.key(params.num_vars)}/a{a}"
    return LinearityReport(worst_v, worst_q, len(support), params.feature_dim, len(table), n_pairs, where, support)


def optimal_policy(f: Formula, params: InstanceParams, solution: Assignment | None = None) -> list[int]:
    """Greedy distance-decreasing actions from the root until an exit state."""
    w_star = solution if solution is not None else unique_solution(f)
    if w_star is None:
        raise ValueError("optimal_policy needs a satisfiable formula")
    mdp = HardMDP(f, params)
    return greedy_path(mdp, w_star)


def greedy_path(mdp: HardMDP, w_star: Assignment) -> list[int]:
    s = mdp.root()
    actions: list[int] = []
    while not mdp.is_exit(s):
        dist = (s.bits ^ w_star.bits).bit_count()
        for a in range(1, mdp.num_actions + 1):
            child = mdp.transition(s, a)
            if child.pending is not None:
                # an intermediate is worth entering only if it can fix a wrong bit
                if any(((s.bits ^ w_star.bits) >> (i - 1)) & 1 for i in child.pending):
                    break
            elif (child.bits ^ w_star.bits).bit_count() < dist:
                break
        else:
            raise AssertionError("no distance-decreasing action")  # pragma: no cover
        actions.append(a)
        s = child
        if s.pending is not None:
            for a in (1, 2):
                nxt = mdp.transition(s, a)
                if (nxt.bits ^ w_star.bits).bit_count() < dist:
                    break
            actions.append(a)
            s = nxt
    return actions


def sequence_value(mdp: HardMDP, actions, w_star: Assignment | None) -> tuple[Fraction, State]:
    """Expected return of an open-loop action sequence, and where it stops.

    The return is the exit reward of the first exit state reached; a
    sequence that runs out before reaching an exit state earns nothing.
    """
    s = mdp.root()
    for a in actions:
        if mdp.is_exit(s):
            break
        s = mdp.transition(s, a)
    if mdp.is_exit(s):
        return mdp.expected_reward(s, w_star), s
    return Fraction(0), s
