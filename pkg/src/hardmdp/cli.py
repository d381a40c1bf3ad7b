"""Command-line front end: gen, verify, solve, reduce, isolate, bench.

Every command prints one JSON report (sorted keys, versioned schema) and
exits 0 on success/YES, 1 on NO/not-good/failed check, 2 on usage errors
and 3 when the exact solver's work cap is hit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from typing import Sequence

from .cnf import MAX_ENUM_VARS, DimacsError, Formula, count_solutions, emit_dimacs, parse_dimacs, solutions, unique_solution
from .exact import CapExceeded, exact_values, verify_linearity, verify_value_law, work_cap, work_estimate
from .generate import unique_formula
from .instance import (
    SCENARIOS,
    InstanceDescriptor,
    InstanceParams,
    ScheduleQuery,
    default_budget,
    derive_params,
    schedule_r,
)
from .mdp import HardMDP, State, optimal_value
from .oracle import full_oracle
from .planners import PLANNER_NAMES, PlannerRefused, make_planner, oracle_optimal_planner
from .reduction import a_sat, end_to_end, good_policy_check, isolate
from .rng import RandomStream

SCHEMA = "hardmdp-report"
SCHEMA_VERSION = 1

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- instance resolution -------------------------------------------------------


def _load_formula(args) -> tuple[Formula, InstanceDescriptor | None]:
    if args.formula and args.random:
        raise UsageError("--formula and --random are mutually exclusive")
    if args.formula:
        with open(args.formula, encoding="utf-8") as fh:
            text = fh.read()
        if "hardmdp-instance/1" in text:
            desc = InstanceDescriptor.loads(text, os.path.dirname(os.path.abspath(args.formula)))
            return desc.formula, desc
        return parse_dimacs(text), None
    if args.random:
        if args.v is None:
            raise UsageError("--random needs --v")
        if not 1 <= args.v <= MAX_ENUM_VARS:
            raise UsageError(f"--v must be in 1..{MAX_ENUM_VARS} for certified generation")
        return unique_formula(args.v, RandomStream(args.seed, (0x47454E,))), None
    raise UsageError("give --formula PATH or --random --v N")


def _schedule(args) -> ScheduleQuery:
    return ScheduleQuery(args.scenario or "poly3", Fraction(args.q), args.m)


def _degree(args, v: int) -> int:
    if args.r is not None:
        return args.r
    if args.scenario:
        return schedule_r(_schedule(args), v)
    return 2


def _params_for(args, f: Formula, desc: InstanceDescriptor | None = None) -> InstanceParams:
    explicit = any(x is not None for x in (args.r, args.H, args.k, args.mode, args.scenario))
    if desc is not None and not explicit:
        return desc.params
    r = _degree(args, f.num_vars)
    k = args.k or 3
    mode = args.mode or ("verification" if args.H is not None else "reduction")
    return derive_params(f, r, k, mode, args.H)


def _instance_summary(f: Formula, params: InstanceParams) -> dict:
    return {
        "v": params.num_vars,
        "r": params.degree,
        "H": params.horizon,
        "k": params.num_actions,
        "d": params.feature_dim,
        "mode": params.mode,
        "clauses": len(f.clauses),
    }


def _report(command: str, args, **body) -> dict:
    return {"schema": SCHEMA, "version": SCHEMA_VERSION, "command": command, "seed": args.seed, **body}


def _fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


# -- commands ------------------------------------------------------------------


def cmd_gen(args) -> tuple[int, dict]:
    f, desc = _load_formula(args)
    params = _params_for(args, f, desc)
    body = {"instance": _instance_summary(f, params)}
    if f.num_vars <= MAX_ENUM_VARS:
        n = count_solutions(f, cap=2)
        body["solutions"] = "0" if n == 0 else ("1" if n == 1 else ">1")
        if args.unique and n != 1:
            body["error"] = "formula is not uniquely satisfiable"
            return EXIT_NO, _report("gen", args, **body)
    descriptor = InstanceDescriptor(f, params, args.seed)
    body["descriptor"] = descriptor.dumps()
    body["dimacs"] = emit_dimacs(f)
    if args.descriptor_out:
        with open(args.descriptor_out, "w", encoding="utf-8") as fh:
            fh.write(descriptor.dumps())
    return EXIT_OK, _report("gen", args, **body)


def _faulty_value(s: State, w_star, params: InstanceParams) -> Fraction:
    """Closed form with a deliberate error at depth 0, for detector sanity runs."""
    bump = Fraction(1, params.denominator**params.degree) if s.depth == 0 else Fraction(0)
    return optimal_value(s, w_star, params) + bump


def cmd_verify(args) -> tuple[int, dict]:
    f, desc = _load_formula(args)
    params = _params_for(args, f, desc)
    table = exact_values(f, params, args.cap)
    closed = _faulty_value if args.inject_fault else optimal_value
    law = verify_value_law(f, params, closed, table=table)
    lin = verify_linearity(f, params, table=table)
    body = {
        "instance": _instance_summary(f, params),
        "value_law": {
            "ok": law.ok,
            "max_abs_error": _fraction(law.max_abs_error),
            "counterexample": law.counterexample,
            "states": law.states_checked,
            "intermediate_states": law.intermediate_checked,
        },
        "linearity": {
            "ok": lin.ok,
            "max_residual_v": _fraction(lin.max_residual_v),
            "max_residual_q": _fraction(lin.max_residual_q),
            "d_used": lin.d_used,
            "d": lin.d,
            "pairs": lin.pairs,
            "counterexample": lin.counterexample,
        },
        "fault_injected": bool(args.inject_fault),
    }
    return (EXIT_OK if law.ok and lin.ok else EXIT_NO), _report("verify", args, **body)


def _dp_feasible(f: Formula, params: InstanceParams, cap: int | None) -> bool:
    return f.num_vars <= MAX_ENUM_VARS and work_estimate(params) <= work_cap(cap)


def cmd_solve(args) -> tuple[int, dict]:
    f, desc = _load_formula(args)
    params = _params_for(args, f, desc)
    budget = args.budget if args.budget is not None else default_budget(params)
    body: dict = {"instance": _instance_summary(f, params), "planner": args.planner, "budget": budget}
    if args.planner == "oracle":
        w_star = unique_solution(f)
        h = full_oracle(HardMDP(f, params), w_star, args.seed)
        # privileged runs are verification aids; only an explicit --budget limits them
        plan = oracle_optimal_planner(h, args.budget)
        body["privileged"] = True
        body["calls_used"] = h.calls
        actions = plan.actions
        found = plan.found
    else:
        rep = a_sat(f, make_planner(args.planner, args.seed), params, budget, seed=args.seed)
        body["privileged"] = False
        body["calls_used"] = rep.calls_used
        body["decision"] = rep.decision
        body["budget_exceeded"] = rep.budget_exceeded
        actions = rep.actions
        found = rep.yes
    body["actions"] = list(actions)
    if _dp_feasible(f, params, args.cap) and count_solutions(f, cap=2) <= 1:
        check = good_policy_check(f, params, actions, args.cap)
        body["policy_check"] = check.to_dict()
        return (EXIT_OK if check.good else EXIT_NO), _report("solve", args, **body)
    body["policy_check"] = None
    return (EXIT_OK if found else EXIT_NO), _report("solve", args, **body)


def cmd_reduce(args) -> tuple[int, dict]:
    f, _ = _load_formula(args)
    if args.planner == "oracle":
        raise UsageError("the oracle planner needs the full oracle; reduce only offers the simulator")
    planner = make_planner(args.planner, args.seed)
    params_for = None
    if args.H is not None or args.mode == "verification":
        r, k, H = args.r or 2, args.k or 3, args.H
        if H is None:
            raise UsageError("verification mode needs --H")
        params_for = lambda g: derive_params(g, r, k, "verification", H)  # noqa: E731
    elif args.r is not None:
        r, k = args.r, args.k or 3
        params_for = lambda g: derive_params(g, r, k, "reduction")  # noqa: E731
    result = end_to_end(
        f,
        planner,
        _schedule(args),
        RandomStream(args.seed),
        use_isolation=args.isolate,
        budget=args.budget,
        num_actions=args.k or 3,
        params_for=params_for,
    )
    body = {"planner": args.planner, "isolation": args.isolate, **result.to_dict()}
    return (EXIT_OK if result.decision == "YES" else EXIT_NO), _report("reduce", args, **body)


def cmd_isolate(args) -> tuple[int, dict]:
    f, _ = _load_formula(args)
    cands = isolate(f, RandomStream(args.seed, (0x49534F,)), args.max_k)
    sols = solutions(f) if f.num_vars <= MAX_ENUM_VARS else None
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
    rows = []
    for c in cands:
        row = {
            "k": c.k,
            "parities": [{"vars": list(p.variables), "rhs": p.rhs} for p in c.parities],
            "num_vars": c.formula.num_vars,
            "num_clauses": len(c.formula.clauses),
        }
        if sols is not None:
            row["surviving_solutions"] = sum(1 for w in sols if c.admits(w.bits))
        if args.out_dir:
            path = os.path.join(args.out_dir, f"candidate_{c.k:03d}.cnf")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(emit_dimacs(c.formula))
            row["path"] = path
        rows.append(row)
    body = {"original": {"v": f.num_vars, "clauses": len(f.clauses)}, "candidates": rows}
    if sols is not None:
        body["original"]["solutions"] = len(sols)
    return EXIT_OK, _report("isolate", args, **body)


DEFAULT_SUITE = {
    "random": {"count": 20, "v_min": 6, "v_max": 10},
    "planners": ["exhaustive", "greedy", "regression"],
    "budgets": [10000],
    "r": 2,
    "k": 3,
}


def _suite_formulas(suite: dict, seed: int) -> list[Formula]:
    out: list[Formula] = []
    for i, item in enumerate(suite.get("formulas", [])):
        if "dimacs" in item:
            out.append(parse_dimacs(item["dimacs"]))
        else:
            out.append(unique_formula(int(item["v"]), RandomStream(int(item.get("seed", seed)), (i,))))
    spec = suite.get("random")
    if spec:
        lo, hi = int(spec["v_min"]), int(spec["v_max"])
        for i in range(int(spec["count"])):
            v = lo + i % (hi - lo + 1)
            out.append(unique_formula(v, RandomStream(seed, (0x42, i))))
    return out


def cmd_bench(args) -> tuple[int, dict]:
    if args.suite:
        try:
            with open(args.suite, encoding="utf-8") as fh:
                suite = json.load(fh)
            if not isinstance(suite, dict):
                raise ValueError("suite must be a JSON object")
            formulas = _suite_formulas(suite, args.seed)
            planners = [str(p) for p in suite.get("planners", [])]
            budgets = [int(b) for b in suite.get("budgets", [])]
            r, k = int(suite.get("r", 2)), int(suite.get("k", 3))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"malformed suite file: {exc}") from exc
    else:
        suite = DEFAULT_SUITE
        formulas = _suite_formulas(suite, args.seed)
        planners, budgets, r, k = list(suite["planners"]), list(suite["budgets"]), suite["r"], suite["k"]
    for name in planners:
        if name not in PLANNER_NAMES or name == "oracle":
            raise UsageError(f"unknown planner {name!r} for bench")
    cells = []
    for name in planners:
        for budget in budgets:
            t0 = time.perf_counter()
            yes = calls = 0
            for i, f in enumerate(formulas):
                params = derive_params(f, r, k)
                rep = a_sat(f, make_planner(name, args.seed + i), params, budget, seed=args.seed, stream=(i,))
                yes += rep.yes
                calls += rep.calls_used
            n = len(formulas)
            cell = {
                "planner": name,
                "budget": budget,
                "formulas": n,
                "success_rate": yes / n if n else None,
                "mean_calls": calls / n if n else None,
            }
            if args.timing:
                cell["wall_seconds"] = round(time.perf_counter() - t0, 3)
            cells.append(cell)
    return EXIT_OK, _report("bench", args, r=r, k=k, cells=cells)


# -- argument parsing ----------------------------------------------------------


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _nonneg(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("instance")
    src.add_argument("--formula", help="DIMACS file or instance descriptor")
    src.add_argument("--random", action="store_true", help="generate a certified unique-SAT formula")
    src.add_argument("--v", type=_positive, help="variable count for --random")
    src.add_argument("--r", type=_positive, help="reward polynomial degree (default 2, or from --scenario)")
    src.add_argument("--H", type=_positive, help="horizon (implies verification mode)")
    src.add_argument("--k", type=int, choices=(2, 3), help="actions per state (default 3)")
    src.add_argument("--mode", choices=("verification", "reduction"))
    src.add_argument("--scenario", choices=SCENARIOS, help="derive r from a hardness schedule")
    src.add_argument("--q", default="1", help="schedule exponent q (rational)")
    src.add_argument("--m", type=_nonneg, default=0, help="schedule parameter m (appendix scenario)")
    run = common.add_argument_group("run")
    run.add_argument("--planner", default="exhaustive", choices=PLANNER_NAMES)
    run.add_argument("--budget", type=_nonneg, help="oracle-call budget (default v^ceil(r^2/4))")
    run.add_argument("--seed", type=_nonneg, default=0)
    run.add_argument("--cap", type=_positive, help="exact-solver work cap (env HARDMDP_CAP)")
    run.add_argument("--report-out", help="also write the JSON report here")
    run.add_argument("--timing", action="store_true", help="include wall-clock times (breaks byte-identity)")

    p = argparse.ArgumentParser(prog="hardmdp", description="Hard linear-realizable MDPs from 3-CNF formulas.")
    sub = p.add_subparsers(dest="command", required=True)
    g = sub.add_parser("gen", parents=[common], help="resolve an instance and print its parameters")
    g.add_argument("--unique", action="store_true", help="fail unless the formula has exactly one solution")
    g.add_argument("--descriptor-out", help="write the instance descriptor here")
    v = sub.add_parser("verify", parents=[common], help="check the value law and linear realizability exactly")
    v.add_argument("--inject-fault", action="store_true", help="perturb the closed form (detector sanity)")
    sub.add_parser("solve", parents=[common], help="run a planner and grade its policy")
    r = sub.add_parser("reduce", parents=[common], help="decide satisfiability through a planner")
    r.add_argument("--isolate", action="store_true", help="add random parity constraints first")
    i = sub.add_parser("isolate", parents=[common], help="emit parity-constrained candidates")
    i.add_argument("--max-k", type=_nonneg, help="largest parity count (default v)")
    i.add_argument("--out-dir", help="write candidate DIMACS files here")
    b = sub.add_parser("bench", parents=[common], help="run a seeded planner benchmark suite")
    b.add_argument("--suite", help="JSON suite file (default: 20 unique-SAT formulas, v in 6..10)")
    return p


COMMANDS = {
    "gen": cmd_gen,
    "verify": cmd_verify,
    "solve": cmd_solve,
    "reduce": cmd_reduce,
    "isolate": cmd_isolate,
    "bench": cmd_bench,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.q = Fraction(args.q)
        code, report = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hardmdp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DimacsError, ValueError, PlannerRefused, OSError) as exc:
        print(f"hardmdp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"hardmdp: cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
