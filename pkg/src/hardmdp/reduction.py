"""SAT decisions from RL planners, and the isolation front-end.

``a_sat`` wraps a planner into a decider: the planner only ever talks to the
simulator, its action sequence is replayed on the transition function, and
the final assignment is checked against the formula.  A YES always comes
with a witness that has been evaluated, so false positives cannot occur.

``isolate`` turns a formula with several solutions into candidates with
random XOR constraints, each compiled to 3-CNF through fresh variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .cnf import Assignment, Clause, Formula, count_solutions, unique_solution
from .exact import exact_values, sequence_value
from .instance import (
    CONDITIONED_SUCCESS,
    RL_ERROR,
    SAT_ERROR,
    InstanceParams,
    ScheduleQuery,
    default_budget,
    derive_params,
    schedule_r,
)
from .mdp import HardMDP
from .oracle import BudgetExceeded, OracleHandle, simulator
from .planners import Plan
from .rng import RandomStream

PlannerFn = Callable[[OracleHandle, int], "Plan | Sequence[int]"]

ANALYSIS_CONSTANTS = {
    "rl_error": str(RL_ERROR),
    "sat_error": str(SAT_ERROR),
    "conditioned_success": str(CONDITIONED_SUCCESS),
}


def _fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _json_safe(info: dict) -> dict:
    return {k: v for k, v in info.items() if isinstance(v, (bool, int, float, str))}


@dataclass
class ReductionReport:
    decision: str
    assignment: Assignment
    calls_used: int
    budget: int
    value_estimate: Fraction
    transcript: list[str]
    actions: tuple[int, ...] = ()
    budget_exceeded: bool = False
    planner_found: bool = False
    planner_info: dict = field(default_factory=dict)

    @property
    def yes(self) -> bool:
        return self.decision == "YES"

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "assignment": list(self.assignment.signs()),
            "assignment_hex": self.assignment.hex(),
            "calls_used": self.calls_used,
            "budget": self.budget,
            "value_estimate": _fraction_str(self.value_estimate),
            "transcript": self.transcript,
            "actions": list(self.actions),
            "budget_exceeded": self.budget_exceeded,
            "planner_found": self.planner_found,
            "planner_info": _json_safe(self.planner_info),
            "analysis": ANALYSIS_CONSTANTS,
        }


def _as_plan(result) -> Plan:
    if isinstance(result, Plan):
        return result
    return Plan(tuple(result))


def _check_actions(actions, k: int) -> tuple[int, ...]:
    out = []
    for a in actions:
        if isinstance(a, bool) or not isinstance(a, int) or not 1 <= a <= k:
            raise ValueError(f"planner returned a malformed action {a!r} (expected an int in 1..{k})")
        out.append(a)
    return tuple(out)


def a_sat(
    f: Formula,
    planner: PlannerFn,
    params: InstanceParams,
    budget: int | None = None,
    seed: int = 0,
    stream: tuple[int, ...] = (),
) -> ReductionReport:
    """Decide satisfiability of ``f`` with ``planner`` run on the simulator.

    The returned sequence is replayed from the root on transitions only
    (no oracle calls); replay stops at the terminal state, and the last
    non-terminal assignment is the candidate witness.
    """
    if params.num_vars != f.num_vars:
        raise ValueError("params and formula disagree on the variable count")
    budget = default_budget(params) if budget is None else budget
    mdp = HardMDP(f, params)
    sim = simulator(mdp, seed, stream=stream)
    sim.arm_budget(budget)
    try:
        plan = _as_plan(planner(sim, budget))
    except BudgetExceeded:
        plan = Plan((), budget_exhausted=True)
    actions = _check_actions(plan.actions, params.num_actions)

    s = mdp.root()
    transcript = [s.key(f.num_vars)]
    for a in actions:
        nxt = mdp.transition(s, a)
        if nxt.terminal:
            break
        s = nxt
        transcript.append(s.key(f.num_vars))

    satisfied = s.pending is None and f.satisfied_by_bits(s.bits)
    value = sim.reward_mean(s) if mdp.is_exit(s) else Fraction(0)
    return ReductionReport(
        decision="YES" if satisfied else "NO",
        assignment=s.assignment(f.num_vars),
        calls_used=sim.calls,
        budget=budget,
        value_estimate=value,
        transcript=transcript,
        actions=actions,
        budget_exceeded=plan.budget_exhausted,
        planner_found=plan.found,
        planner_info=plan.info,
    )


@dataclass
class PolicyCheck:
    good: bool
    v_pi: Fraction
    v_star: Fraction
    margin: Fraction
    stop_state: str

    @property
    def threshold(self) -> Fraction:
        return self.v_star - Fraction(1, 4)

    def to_dict(self) -> dict:
        return {
            "good": self.good,
            "v_pi": _fraction_str(self.v_pi),
            "v_star": _fraction_str(self.v_star),
            "threshold": _fraction_str(self.threshold),
            "margin": _fraction_str(self.margin),
            "v_pi_float": float(self.v_pi),
            "v_star_float": float(self.v_star),
            "stop_state": self.stop_state,
        }


def good_policy_check(
    f: Formula, params: InstanceParams, actions: Sequence[int], cap: int | None = None
) -> PolicyCheck:
    """Is V^pi > V* - 1/4 at the root?  Both values exact; margin = V^pi - (V* - 1/4)."""
    if count_solutions(f, cap=2) > 1:
        raise ValueError("good_policy_check needs a formula with at most one solution")
    w_star = unique_solution(f)
    table = exact_values(f, params, cap, solution=w_star)
    mdp = table.mdp
    v_star = table[mdp.root()]
    v_pi, stop = sequence_value(mdp, _check_actions(actions, params.num_actions), w_star)
    margin = v_pi - (v_star - Fraction(1, 4))
    return PolicyCheck(margin > 0, v_pi, v_star, margin, stop.key(f.num_vars))


# -- isolation ----------------------------------------------------------------


@dataclass(frozen=True)
class Parity:
    """sum of x_i over ``variables`` = ``rhs`` (mod 2), with x_i = 1 meaning true."""

    variables: tuple[int, ...]
    rhs: int

    @property
    def mask(self) -> int:
        m = 0
        for x in self.variables:
            m |= 1 << (x - 1)
        return m

    def holds(self, bits: int) -> bool:
        return (bits & self.mask).bit_count() % 2 == self.rhs


def random_parity(v: int, rng: RandomStream) -> Parity:
    mask = rng.bits(v)
    return Parity(tuple(i + 1 for i in range(v) if (mask >> i) & 1), rng.below(2))


def xor_clauses(t: int, a: int, b: int) -> list[Clause]:
    """3-CNF for t <-> a XOR b."""
    return [(-t, a, b), (t, -a, b), (t, a, -b), (-t, -a, -b)]


def parity_clauses(p: Parity, next_var: int) -> tuple[list[Clause], int]:
    """Clauses for ``p``; fresh variables start at ``next_var``.  Returns (clauses, next free var)."""
    xs = p.variables
    if not xs:
        # 0 = 0 is vacuous; 0 = 1 is a contradiction
        return ([(1, 1, 1), (-1, -1, -1)] if p.rhs else []), next_var
    clauses: list[Clause] = []
    acc = xs[0]
    for x in xs[1:]:
        t = next_var
        next_var += 1
        clauses += xor_clauses(t, acc, x)
        acc = t
    unit = acc if p.rhs else -acc
    clauses.append((unit, unit, unit))
    return clauses, next_var


@dataclass(frozen=True)
class IsolationCandidate:
    k: int
    parities: tuple[Parity, ...]
    formula: Formula
    original_vars: int

    def project(self, bits: int) -> int:
        return bits & ((1 << self.original_vars) - 1)

    def admits(self, bits: int) -> bool:
        """Does an original assignment satisfy every sampled parity?"""
        return all(p.holds(bits) for p in self.parities)


def with_parities(f: Formula, parities: Sequence[Parity], k: int = -1) -> IsolationCandidate:
    clauses = list(f.clauses)
    nxt = f.num_vars + 1
    for p in parities:
        extra, nxt = parity_clauses(p, nxt)
        clauses += extra
    return IsolationCandidate(len(parities) if k < 0 else k, tuple(parities), Formula(nxt - 1, tuple(clauses)), f.num_vars)


def isolate(f: Formula, rng: RandomStream, max_k: int | None = None) -> list[IsolationCandidate]:
    """Candidates for k = 0..max_k (default v) random parities over the original variables."""
    top = f.num_vars if max_k is None else max_k
    out = []
    for k in range(top + 1):
        sub = rng.substream(k)
        out.append(with_parities(f, [random_parity(f.num_vars, sub) for _ in range(k)], k))
    return out


@dataclass
class EndToEndReport:
    decision: str
    witness: Assignment | None
    stages: list[dict]
    seed: int

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "witness": None if self.witness is None else list(self.witness.signs()),
            "seed": self.seed,
            "stages": self.stages,
        }


def end_to_end(
    f: Formula,
    planner: PlannerFn,
    schedule: ScheduleQuery,
    rng: RandomStream,
    use_isolation: bool = False,
    budget: int | None = None,
    num_actions: int = 3,
    params_for: Callable[[Formula], InstanceParams] | None = None,
    max_k: int | None = None,
) -> EndToEndReport:
    """Run a_sat on ``f`` (or on each isolation candidate) and certify any witness.

    Parameters default to reduction mode with r from ``schedule``;
    ``params_for`` overrides that (verification-mode desk runs).  Stops at
    the first candidate whose witness satisfies ``f``.
    """

    def params_of(g: Formula) -> InstanceParams:
        if params_for is not None:
            return params_for(g)
        return derive_params(g, schedule_r(schedule, max(g.num_vars, 2)), k=num_actions)

    if use_isolation:
        candidates = isolate(f, rng.substream(0), max_k)
    else:
        candidates = [with_parities(f, [], 0)]
    stages: list[dict] = []
    for i, cand in enumerate(candidates):
        params = params_of(cand.formula)
        rep = a_sat(cand.formula, planner, params, budget, seed=rng.seed, stream=rng.path + (1, i))
        witness = Assignment(f.num_vars, cand.project(rep.assignment.bits))
        certified = rep.yes and f.satisfied_by_bits(witness.bits)
        stages.append(
            {
                "candidate": i,
                "k": cand.k,
                "parities": [{"vars": list(p.variables), "rhs": p.rhs} for p in cand.parities],
                "num_vars": cand.formula.num_vars,
                "num_clauses": len(cand.formula.clauses),
                "params": {"v": params.num_vars, "r": params.degree, "H": str(params.horizon), "k": params.num_actions},
                "certified": certified,
                **{key: val for key, val in rep.to_dict().items() if key != "analysis"},
            }
        )
        if certified:
            return EndToEndReport("YES", witness, stages, rng.seed)
    return EndToEndReport("NO", None, stages, rng.seed)
