"""Oracle access to a compiled MDP, with call accounting.

Two kinds of handle exist.  The full oracle knows the solution w* and pays
level-H rewards; the simulator never sees w*, detects satisfying states by
evaluating the formula, and pays nothing at level H for non-satisfying
states.  Transitions and features are identical for both.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence, TextIO

from .cnf import Assignment
from .mdp import FeatureVector, HardMDP, State, g_reward
from .rng import RandomStream

Kind = Literal["full", "simulator"]


class BudgetExceeded(RuntimeError):
    pass


class OracleHandle:
    """Single-threaded access point: one counter, one random stream."""

    def __init__(
        self,
        mdp: HardMDP,
        kind: Kind,
        solution: Assignment | None = None,
        seed: int = 0,
        stream: tuple[int, ...] = (),
        log: TextIO | None = None,
    ):
        if kind not in ("full", "simulator"):
            raise ValueError(f"unknown oracle kind {kind!r}")
        if kind == "simulator" and solution is not None:
            raise ValueError("the simulator must not hold the solution")
        if solution is not None and not mdp.formula.satisfied_by_bits(solution.bits):
            raise ValueError("stored solution does not satisfy the formula")
        self.mdp = mdp
        self.kind = kind
        self.solution = solution
        self.seed = seed
        self.rng = RandomStream(seed, stream)
        self.calls = 0
        self.budget: int | None = None
        self.log = log

    # instance facts a planner is allowed to know
    @property
    def horizon(self) -> int:
        return self.mdp.params.horizon

    @property
    def num_actions(self) -> int:
        return self.mdp.params.num_actions

    @property
    def num_vars(self) -> int:
        return self.mdp.params.num_vars

    @property
    def feature_dim(self) -> int:
        return self.mdp.params.feature_dim

    def root(self) -> State:
        return self.mdp.root()

    def arm_budget(self, calls: int | None) -> None:
        self.budget = calls

    @property
    def remaining(self) -> int | None:
        return None if self.budget is None else max(0, self.budget - self.calls)

    def _charge(self) -> None:
        if self.budget is not None and self.calls >= self.budget:
            raise BudgetExceeded(f"oracle budget of {self.budget} calls exhausted")
        self.calls += 1

    def _record(self, query: str, s: State, a: int | None, result) -> None:
        if self.log is not None:
            rec = {"q": query, "state": s.key(self.num_vars), "action": a, "result": result}
            self.log.write(json.dumps(rec, sort_keys=True) + "\n")

    def query_transition(self, s: State, a: int) -> State:
        self._charge()
        child = self.mdp.transition(s, a)
        self._record("transition", s, a, child.key(self.num_vars))
        return child

    def reward_mean(self, s: State) -> Fraction:
        """Mean of the reward distribution this handle samples from at ``s``."""
        if self.kind == "full":
            return self.mdp.expected_reward(s, self.solution)
        if s.terminal:
            raise ValueError("no reward at the terminal state")
        if s.pending is None and self.mdp.formula.satisfied_by_bits(s.bits):
            return g_reward(s.depth, 0, self.mdp.params)
        return Fraction(0)

    def query_reward(self, s: State, a: int, stream=None) -> int:
        if s.terminal:
            raise ValueError("no reward at the terminal state")
        if not 1 <= a <= self.num_actions:
            raise ValueError(f"action must be in 1..{self.num_actions}, got {a!r}")
        self._charge()
        mean = self.reward_mean(s)
        rng = self.rng if stream is None else stream
        # draw even when the mean is zero so streams stay aligned across kinds
        sample = rng.bernoulli(mean)
        self._record("reward", s, a, sample)
        return sample

    def query_features(self, s: State, a: int | None = None) -> FeatureVector:
        self._charge()
        psi = self.mdp.features(s, a)
        self._record("features", s, a, len(psi))
        return psi


def full_oracle(mdp: HardMDP, solution: Assignment | None, seed: int = 0, **kw) -> OracleHandle:
    """Verification-only handle; ``solution=None`` certifies an unsatisfiable formula."""
    return OracleHandle(mdp, "full", solution, seed, **kw)


def simulator(mdp: HardMDP, seed: int = 0, **kw) -> OracleHandle:
    return OracleHandle(mdp, "simulator", None, seed, **kw)


@dataclass
class Trajectory:
    states: list[State] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    rewards: list[int] = field(default_factory=list)
    tau: int | None = None
    truncated: bool = False
    budget_exceeded: bool = False
    auto_closed: bool = False
    ignored_actions: int = 0

    @property
    def final_state(self) -> State:
        """Last non-terminal state visited."""
        for s in reversed(self.states):
            if not s.terminal:
                return s
        raise ValueError("empty trajectory")

    @property
    def total_reward(self) -> int:
        return sum(self.rewards)


def rollout(
    h: OracleHandle,
    actions: Sequence[int],
    pad: bool = False,
    episode: int | None = None,
) -> Trajectory:
    """Execute ``actions`` from the root until the terminal state.

    At an exit state (satisfying or depth H) every action is equivalent, so
    an exhausted sequence is closed with action 1 and the reward is drawn.
    An exhausted sequence at any other state ends the episode with no
    further reward and ``truncated`` set, unless ``pad`` continues it with
    action 1.  Actions after the terminal state are counted and ignored.
    """
    stream = None if episode is None else h.rng.substream(episode)
    s = h.root()
    traj = Trajectory(states=[s])
    i = 0
    while not s.terminal:
        if i < len(actions):
            a = actions[i]
            i += 1
        elif h.mdp.is_exit(s):
            a = 1
            traj.auto_closed = True
        elif pad:
            a = 1
        else:
            traj.truncated = True
            break
        try:
            r = h.query_reward(s, a, stream)
            s = h.query_transition(s, a)
        except BudgetExceeded:
            traj.truncated = True
            traj.budget_exceeded = True
            break
        traj.actions.append(a)
        traj.rewards.append(r)
        traj.states.append(s)
    if s.terminal:
        traj.tau = len(traj.actions)
    traj.ignored_actions = len(actions) - i
    return traj
