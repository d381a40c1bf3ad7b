"""Instance parameters, degree schedules and the instance descriptor file."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import mpmath

from .cnf import Formula, emit_dimacs, parse_dimacs, read_dimacs

Mode = Literal["verification", "reduction"]
Scenario = Literal["poly3", "poly2", "subexp", "appendix"]
SCENARIOS = ("poly3", "poly2", "subexp", "appendix")
MODES = ("verification", "reduction")

# analysis constants carried into reports; never enforced at runtime
RL_ERROR = Fraction(1, 10)
SAT_ERROR = Fraction(1, 8)
CONDITIONED_SUCCESS = (Fraction(9, 10) - Fraction(1, 5)) / Fraction(4, 5)


@dataclass(frozen=True)
class InstanceParams:
    """MDP parameters for one formula.

    ``degree`` is the exponent r of the reward polynomial, ``horizon`` is H,
    ``num_actions`` is 2 or 3.  ``feature_degree`` is the longest index
    tuple used by the features (r for 3 actions, 2r for 2 actions).
    """

    num_vars: int
    degree: int
    horizon: int
    num_actions: int = 3
    mode: Mode = "verification"

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("need at least one variable")
        if self.degree < 1:
            raise ValueError(f"degree r must be >= 1, got {self.degree}")
        if self.horizon < 1:
            raise ValueError(f"horizon H must be >= 1, got {self.horizon}")
        if self.num_actions not in (2, 3):
            raise ValueError(f"num_actions must be 2 or 3, got {self.num_actions}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "reduction" and self.horizon != self.num_vars**self.degree:
            raise ValueError("reduction mode requires H = v^r")

    @property
    def feature_degree(self) -> int:
        return self.degree if self.num_actions == 3 else 2 * self.degree

    @property
    def feature_dim(self) -> int:
        return tuple_count(self.num_vars, self.feature_degree)

    @property
    def denominator(self) -> int:
        """H + v, the normaliser inside the reward polynomial."""
        return self.horizon + self.num_vars


def tuple_count(v: int, max_len: int) -> int:
    """Number of ordered index tuples over [v] of length 0..max_len."""
    return sum(v**j for j in range(max_len + 1))


@dataclass(frozen=True)
class ScheduleQuery:
    scenario: Scenario
    q: Fraction = Fraction(1)
    m: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        object.__setattr__(self, "q", Fraction(self.q))
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")


def _ceil_fraction(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _ceil_sqrt_fraction(x: Fraction) -> int:
    """Exact ceil(sqrt(x)) for a non-negative rational."""
    # sqrt(p/q) = sqrt(p*q)/q; find the least n with n^2 * q >= p
    p, q = x.numerator, x.denominator
    n = math.isqrt(p // q)
    while n * n * q < p:
        n += 1
    return n


def _ceil_mp(x: mpmath.mpf) -> int:
    c = int(mpmath.ceil(x))
    # guard the boundary: an exact-integer value must not round up
    if abs(x - c + 1) < mpmath.mpf(10) ** -60:
        c -= 1
    return c


def schedule_r(query: ScheduleQuery, v: int) -> int:
    """Degree r prescribed by each parameter setting, for v variables."""
    if v < 2:
        raise ValueError("schedules need v >= 2")
    if query.scenario == "poly3":
        return _ceil_fraction(8 * query.q)
    if query.scenario == "poly2":
        return _ceil_fraction(12 * query.q)
    log2v_exact = v.bit_length() - 1 if v & (v - 1) == 0 else None
    if query.scenario == "appendix":
        if log2v_exact is not None:
            return _ceil_sqrt_fraction((16 * query.q) ** (query.m + 2) * log2v_exact**query.m)
        with mpmath.workdps(120):
            x = mpmath.mpf(16 * query.q.numerator) / query.q.denominator
            val = mpmath.sqrt(x ** (query.m + 2) * mpmath.log(v, 2) ** query.m)
            return _ceil_mp(val)
    # subexp
    if log2v_exact is not None:
        # sqrt(v)/k <= n  <=>  v <= (n k)^2
        n = 1
        while (n * log2v_exact) ** 2 < v:
            n += 1
        return n
    with mpmath.workdps(120):
        return _ceil_mp(mpmath.sqrt(v) / mpmath.log(v, 2))


def derive_params(
    formula: Formula | int,
    r: int,
    k: int = 3,
    mode: Mode = "reduction",
    horizon: int | None = None,
) -> InstanceParams:
    """Tie a formula (or a bare variable count) to MDP parameters.

    Reduction mode fixes H = v^r; verification mode takes the caller's H.
    """
    v = formula if isinstance(formula, int) else formula.num_vars
    if r < 1:
        raise ValueError(f"degree r must be >= 1, got {r}")
    if mode == "reduction":
        if horizon is not None and horizon != v**r:
            raise ValueError("reduction mode fixes H = v^r; use verification mode to override")
        horizon = v**r
    elif horizon is None or horizon < 1:
        raise ValueError("verification mode needs a horizon H >= 1")
    return InstanceParams(v, r, horizon, k, mode)


def default_budget(params: InstanceParams) -> int:
    """Oracle-call budget v^ceil(r^2/4) from the running-time assumption."""
    return params.num_vars ** -(-(params.degree**2) // 4)


@dataclass(frozen=True)
class BoundReport:
    v_star_lower: Fraction
    last_layer_upper: Fraction
    last_layer_target: Fraction
    v_star_ok: bool
    last_layer_ok: bool


def bound_check(params: InstanceParams) -> BoundReport:
    """Evaluate the two large-v inequalities exactly for concrete (v, r, H)."""
    if params.mode != "reduction":
        raise ValueError("bound_check applies to reduction-mode parameters")
    v, r, H = params.num_vars, params.degree, params.horizon
    share = Fraction(v, H + v)
    lower = (1 - share) ** r
    upper = share**r
    target = Fraction(v) ** (r - r * r)
    return BoundReport(lower, upper, target, lower >= Fraction(1, 2), upper <= target)


@dataclass
class InstanceDescriptor:
    """Everything needed to rebuild an instance: formula, r, H, k, mode, seed."""

    formula: Formula
    params: InstanceParams
    seed: int = 0
    formula_path: str | None = None
    extra: dict[str, str] = field(default_factory=dict)

    def dumps(self) -> str:
        items = {
            "format": "hardmdp-instance/1",
            "v": str(self.params.num_vars),
            "r": str(self.params.degree),
            "H": str(self.params.horizon),
            "k": str(self.params.num_actions),
            "mode": self.params.mode,
            "seed": str(self.seed),
        }
        if self.formula_path is not None:
            items["formula_path"] = self.formula_path
        else:
            items["clauses"] = " ".join(f"{a} {b} {c} 0" for a, b, c in self.formula.clauses)
        for key, val in self.extra.items():
            items[f"x-{key}"] = val
        return "".join(f"{key} = {items[key]}\n" for key in sorted(items))

    @classmethod
    def loads(cls, text: str, base_dir: str | None = None) -> InstanceDescriptor:
        items: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"descriptor line {lineno}: expected 'key = value'")
            items[key.strip()] = val.strip()
        if items.get("format") != "hardmdp-instance/1":
            raise ValueError("not a hardmdp instance descriptor")
        v = int(items["v"])
        path = items.get("formula_path")
        if path is not None:
            full = path if base_dir is None or os.path.isabs(path) else os.path.join(base_dir, path)
            formula = read_dimacs(full)
        else:
            body = items.get("clauses", "")
            ncl = sum(1 for tok in body.split() if tok == "0")
            formula = parse_dimacs(f"p cnf {v} {ncl}\n{body}\n")
        if formula.num_vars != v:
            raise ValueError(f"descriptor says v={v}, formula has {formula.num_vars}")
        params = InstanceParams(
            v, int(items["r"]), int(items["H"]), int(items["k"]), items["mode"]  # type: ignore[arg-type]
        )
        extra = {k[2:]: val for k, val in items.items() if k.startswith("x-")}
        return cls(formula, params, int(items.get("seed", "0")), path, extra)

    def dimacs(self) -> str:
        return emit_dimacs(self.formula)
