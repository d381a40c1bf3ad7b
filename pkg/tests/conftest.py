from __future__ import annotations

import re

import pytest

import hardmdp.reduction as _reduction
from corpus import worked_example

# Every a_sat call in the session is audited: a YES must carry a witness
# that satisfies the formula it was asked about.
A_SAT_AUDIT = {"runs": 0, "yes": 0, "bad": []}
_a_sat = _reduction.a_sat


def _audited_a_sat(f, *args, **kwargs):
    rep = _a_sat(f, *args, **kwargs)
    A_SAT_AUDIT["runs"] += 1
    if rep.yes:
        A_SAT_AUDIT["yes"] += 1
        if not f.satisfied_by_bits(rep.assignment.bits):
            A_SAT_AUDIT["bad"].append((f, rep.assignment))
    return rep


_audited_a_sat.__doc__ = _a_sat.__doc__
_reduction.a_sat = _audited_a_sat

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


@pytest.fixture
def worked_formula():
    return worked_example()


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, in criterion order."""
    outcome: dict[int, tuple[str, str]] = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if not m or rep.when not in ("call", "setup"):
                continue
            n = int(m.group(1))
            ok = key == "passed"
            if n in outcome and outcome[n][0] == "FAIL":
                continue
            if rep.when == "setup" and ok:
                continue
            outcome[n] = ("PASS" if ok else "FAIL", m.group(2).replace("_", " "))
    tr = terminalreporter
    tr.section("a_sat audit")
    tr.write_line(
        f"{A_SAT_AUDIT['runs']} runs, {A_SAT_AUDIT['yes']} YES, "
        f"{len(A_SAT_AUDIT['bad'])} YES with a non-satisfying witness"
    )
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcome):
        verdict, name = outcome[n]
        terminalreporter.write_line(f"{verdict} criterion {n}: {name}")


def pytest_sessionfinish(session, exitstatus):
    if A_SAT_AUDIT["bad"] and exitstatus == 0:
        session.exitstatus = 1
