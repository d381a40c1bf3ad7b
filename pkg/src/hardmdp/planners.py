"""Reference planners.

A planner is any callable ``planner(handle, budget) -> Plan`` that talks to
the MDP only through the handle's queries.  Apart from the oracle-optimal
planner, which requires a full-oracle handle and says so, none of them
ever see the solution.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .mdp import FeatureVector, State
from .oracle import BudgetExceeded, OracleHandle
from .rng import RandomStream

RIDGE = 1e-8


@dataclass
class Plan:
    actions: tuple[int, ...]
    found: bool = False
    budget_exhausted: bool = False
    info: dict = field(default_factory=dict)


Planner = Callable[[OracleHandle, int], Plan]


class PlannerRefused(PermissionError):
    pass


def _arm(h: OracleHandle, budget: int) -> None:
    limit = h.calls + max(0, budget)
    if h.budget is None or limit < h.budget:
        h.arm_budget(limit)


def exhaustive_planner(sim: OracleHandle, budget: int) -> Plan:
    """Complete search, layer by layer in depth.

    A normal state at depth l < H whose first action leads straight to the
    terminal state is satisfying; at depth H the reward is sampled instead.
    Each assignment is expanded once, at the smallest depth it is reached,
    which loses nothing: a shallower copy can do everything a deeper one can.
    """
    _arm(sim, budget)
    H, k = sim.horizon, sim.num_actions
    root = sim.root()
    layer: list[tuple[State, tuple[int, ...]]] = [(root, ())]
    seen = {root.bits}
    expanded = 0
    try:
        while layer:
            nxt: list[tuple[State, tuple[int, ...]]] = []
            for s, path in layer:
                expanded += 1
                if s.depth >= H:
                    if sim.query_reward(s, 1):
                        return Plan(path, found=True, info={"expanded": expanded})
                    continue
                first = sim.query_transition(s, 1)
                if first.terminal:
                    return Plan(path, found=True, info={"expanded": expanded})
                kids = [(first, path + (1,))]
                kids += [(sim.query_transition(s, a), path + (a,)) for a in range(2, k + 1)]
                for c, cp in kids:
                    if c.pending is not None:
                        grand = [(sim.query_transition(c, b), cp + (b,)) for b in (1, 2)]
                    else:
                        grand = [(c, cp)]
                    for g, gp in grand:
                        if g.bits not in seen:
                            seen.add(g.bits)
                            nxt.append((g, gp))
            layer = nxt
    except BudgetExceeded:
        return Plan((), budget_exhausted=True, info={"expanded": expanded})
    return Plan((), info={"expanded": expanded, "complete": True})


def greedy_clause_planner(sim: OracleHandle, budget: int, rng: RandomStream) -> Plan:
    """Random walk over clause-guided actions, restarting at depth H."""
    if budget <= 0:
        return Plan((), budget_exhausted=True)
    _arm(sim, budget)
    H, k = sim.horizon, sim.num_actions
    path: list[int] = []
    restarts = 0
    try:
        while True:
            s, path = sim.root(), []
            while not (s.pending is None and s.depth >= H):
                a = 1 + rng.below(k)
                c = sim.query_transition(s, a)
                if c.terminal:
                    return Plan(tuple(path), found=True, info={"restarts": restarts})
                path.append(a)
                s = c
            restarts += 1
    except BudgetExceeded:
        return Plan(tuple(path), budget_exhausted=True, info={"restarts": restarts})


def _integer_weights(theta_hat: Mapping[tuple[int, ...], float | Fraction]) -> dict[tuple[int, ...], int]:
    """Scale a weight vector to integers with no rounding (floats are dyadic)."""
    fr = {t: Fraction(w) for t, w in theta_hat.items()}
    den = math.lcm(1, *(w.denominator for w in fr.values()))
    return {t: int(w * den) for t, w in fr.items() if w}


def greedy_action(theta_hat: Mapping[tuple[int, ...], float | Fraction], candidates: Sequence[FeatureVector]) -> int:
    """argmax_a <theta_hat, psi_a>, exact, ties to the lowest action (1-based)."""
    weights = _integer_weights(theta_hat)
    best_a, best = 1, None
    for a, psi in enumerate(candidates, start=1):
        score = Fraction(sum(c * weights.get(t, 0) for t, c in psi.entries.items()), psi.denominator)
        if best is None or score > best:
            best_a, best = a, score
    return best_a


def fit_linear_values(samples: Sequence[tuple[FeatureVector, float]]) -> dict[tuple[int, ...], float]:
    """Least squares on the normal equations, ridge 1e-8 when they are singular."""
    if not samples:
        return {}
    index: dict[tuple[int, ...], int] = {}
    for psi, _ in samples:
        for t in psi.support():
            index.setdefault(t, len(index))
    X = np.zeros((len(samples), len(index)))
    y = np.array([target for _, target in samples], dtype=float)
    for row, (psi, _) in enumerate(samples):
        for t, c in psi.scaled_floats().items():
            X[row, index[t]] = c
    A = X.T @ X
    b = X.T @ y
    if np.linalg.matrix_rank(A) < A.shape[0]:
        A = A + RIDGE * np.eye(A.shape[0])
    w = np.linalg.solve(A, b)
    return {t: float(w[i]) for t, i in index.items()}


def regression_planner(sim: OracleHandle, budget: int, rng: RandomStream, explore_share: float = 0.5) -> Plan:
    """Fit V ~ <theta_hat, psi> to sampled returns, then act greedily on it.

    Exploration runs random episodes, querying features, reward and
    transition at each step (three calls).  The rest of the budget pays for
    the greedy rollout.
    """
    _arm(sim, budget)
    k = sim.num_actions
    explore_calls = int(budget * explore_share)
    stop_at = sim.calls + explore_calls
    samples: list[tuple[FeatureVector, float]] = []
    episodes = 0
    try:
        while sim.calls + 3 <= stop_at:
            s = sim.root()
            feats: list[FeatureVector] = []
            rewards: list[int] = []
            while not s.terminal and sim.calls + 3 <= stop_at:
                feats.append(sim.query_features(s))
                a = 1 + rng.below(k)
                rewards.append(sim.query_reward(s, a))
                s = sim.query_transition(s, a)
            if not s.terminal:
                break
            episodes += 1
            togo = 0
            for psi, r in zip(reversed(feats), reversed(rewards)):
                togo += r
                samples.append((psi, float(togo)))
    except BudgetExceeded:
        pass
    theta_hat = fit_linear_values(samples)
    info = {"episodes": episodes, "samples": len(samples), "nonzero_weights": sum(1 for w in theta_hat.values() if w)}
    s = sim.root()
    path: list[int] = []
    try:
        while True:
            cands = [sim.query_features(s, a) for a in range(1, k + 1)]
            a = greedy_action(theta_hat, cands)
            c = sim.query_transition(s, a)
            if c.terminal:
                return Plan(tuple(path), info=info | {"theta_hat": theta_hat})
            path.append(a)
            s = c
    except BudgetExceeded:
        return Plan(tuple(path), budget_exhausted=True, info=info | {"theta_hat": theta_hat})


def oracle_optimal_planner(handle: OracleHandle, budget: int | None = None) -> Plan:
    """Greedy distance-decreasing path.  Needs the full oracle; refuses the simulator."""
    if handle.kind != "full":
        raise PlannerRefused("oracle_optimal_planner needs a full-oracle handle")
    if budget is not None:
        _arm(handle, budget)
    w_star = handle.solution
    if w_star is None:
        return Plan((), info={"unsat": True})

    def dist(s: State) -> int:
        return (s.bits ^ w_star.bits).bit_count()

    s = handle.root()
    path: list[int] = []
    try:
        while not (s.bits == w_star.bits or s.depth >= handle.horizon):
            d = dist(s)
            for a in range(1, handle.num_actions + 1):
                c = handle.query_transition(s, a)
                if c.pending is not None:
                    if any(((s.bits ^ w_star.bits) >> (i - 1)) & 1 for i in c.pending):
                        break
                elif dist(c) < d:
                    break
            path.append(a)
            s = c
            if s.pending is not None:
                for b in (1, 2):
                    c = handle.query_transition(s, b)
                    if dist(c) < d:
                        break
                path.append(b)
                s = c
    except BudgetExceeded:
        return Plan(tuple(path), budget_exhausted=True, info={"privileged": True})
    return Plan(tuple(path), found=s.bits == w_star.bits, info={"privileged": True})


PLANNER_NAMES = ("exhaustive", "greedy", "regression", "oracle")


def make_planner(name: str, seed: int = 0) -> Planner:
    """Planner by name; randomised planners get a stream derived from ``seed``."""
    if name == "exhaustive":
        return exhaustive_planner
    if name == "greedy":
        return functools.partial(_with_stream, greedy_clause_planner, seed)
    if name == "regression":
        return functools.partial(_with_stream, regression_planner, seed)
    if name == "oracle":
        return oracle_optimal_planner
    raise ValueError(f"unknown planner {name!r} (choose from {', '.join(PLANNER_NAMES)})")


def _with_stream(fn, seed: int, h: OracleHandle, budget: int) -> Plan:
    return fn(h, budget, RandomStream(seed, (0x504C,)))
