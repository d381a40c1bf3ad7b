from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import pytest

from hardmdp.cnf import Formula, emit_dimacs
from hardmdp.instance import (
    CONDITIONED_SUCCESS,
    InstanceDescriptor,
    InstanceParams,
    ScheduleQuery,
    bound_check,
    default_budget,
    derive_params,
    schedule_r,
    tuple_count,
)


class TestParams:
    def test_worked_reduction(self, worked_formula):
        p = derive_params(worked_formula, 2, 3, "reduction")
        assert (p.horizon, p.feature_dim) == (16, 21)

    def test_toy_verification(self):
        p = derive_params(2, 1, 3, "verification", horizon=2)
        assert p.feature_dim == 3

    def test_sixteen_vars(self):
        assert derive_params(16, 2).horizon == 256

    def test_two_actions_double_degree(self):
        p = InstanceParams(4, 2, 16, 2)
        assert p.feature_degree == 4
        assert p.feature_dim == 1 + 4 + 16 + 64 + 256

    def test_big_horizon_is_exact(self):
        p = derive_params(10, 64)
        assert p.horizon == 10**64
        assert p.feature_dim <= 2 * 10**64

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(num_vars=4, degree=0, horizon=4),
            dict(num_vars=4, degree=2, horizon=0),
            dict(num_vars=4, degree=2, horizon=4, num_actions=4),
            dict(num_vars=4, degree=2, horizon=4, mode="reduction"),
            dict(num_vars=4, degree=2, horizon=4, mode="bogus"),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            InstanceParams(**kwargs)

    def test_verification_needs_horizon(self):
        with pytest.raises(ValueError):
            derive_params(4, 2, mode="verification")
        with pytest.raises(ValueError):
            derive_params(4, 2, mode="verification", horizon=0)

    def test_reduction_rejects_other_horizon(self):
        with pytest.raises(ValueError):
            derive_params(4, 2, mode="reduction", horizon=5)

    def test_tuple_count_bound(self):
        for v in range(2, 9):
            for D in range(1, 7):
                assert tuple_count(v, D) <= 2 * v**D

    def test_default_budget(self):
        assert default_budget(derive_params(10, 8)) == 10**16
        assert default_budget(derive_params(4, 3)) == 4**3


class TestSchedules:
    def test_paper_values(self):
        assert schedule_r(ScheduleQuery("poly3", Fraction(1)), 10) == 8
        assert schedule_r(ScheduleQuery("poly2", Fraction(1)), 10) == 12
        assert schedule_r(ScheduleQuery("appendix", Fraction(1), 0), 10) == 16

    def test_rational_q_rounds_up(self):
        assert schedule_r(ScheduleQuery("poly3", Fraction(9, 8)), 10) == 9
        assert schedule_r(ScheduleQuery("poly3", Fraction(17, 16)), 10) == 9
        assert schedule_r(ScheduleQuery("poly2", Fraction(3, 2)), 10) == 18

    def test_subexp(self):
        for v in (4, 16, 100, 1000):
            expect = math.ceil(mpmath.sqrt(v) / mpmath.log(v, 2))
            assert schedule_r(ScheduleQuery("subexp"), v) == expect
        assert schedule_r(ScheduleQuery("subexp"), 16) == 1

    def test_appendix_against_mpmath(self):
        for v, q, m in [(16, 1, 1), (10, 2, 1), (1000, 1, 2), (7, Fraction(3, 2), 3)]:
            q = Fraction(q)
            with mpmath.workdps(80):
                base = mpmath.mpf(16 * q.numerator) / q.denominator
                val = mpmath.sqrt(base ** (m + 2) * mpmath.log(v, 2) ** m)
            assert schedule_r(ScheduleQuery("appendix", Fraction(q), m), v) == int(mpmath.ceil(val))

    def test_appendix_power_of_two_exact(self):
        # (16)^3 * 4 = 16384 = 128^2 exactly, so no rounding up
        assert schedule_r(ScheduleQuery("appendix", Fraction(1), 1), 16) == 128

    def test_monotone_in_q(self):
        for scen in ("poly3", "poly2", "appendix"):
            rs = [schedule_r(ScheduleQuery(scen, Fraction(n, 4), 1), 12) for n in range(4, 20)]
            assert rs == sorted(rs)

    @pytest.mark.parametrize("q, m", [(Fraction(1, 2), 0), (Fraction(1), -1)])
    def test_invalid_query(self, q, m):
        with pytest.raises(ValueError):
            ScheduleQuery("poly3", q, m)

    def test_needs_two_vars(self):
        with pytest.raises(ValueError):
            schedule_r(ScheduleQuery("poly3"), 1)


class TestBounds:
    def test_sixteen(self):
        rep = bound_check(derive_params(16, 2))
        assert rep.v_star_lower == Fraction(256, 272) ** 2
        assert rep.last_layer_upper == Fraction(16, 272) ** 2
        assert rep.last_layer_target == Fraction(1, 256)
        assert rep.v_star_ok and rep.last_layer_ok

    def test_small_v_flags_caveat(self):
        rep = bound_check(derive_params(2, 2))
        assert rep.v_star_lower == Fraction(4, 9)
        assert not rep.v_star_ok

    def test_verification_mode_rejected(self):
        with pytest.raises(ValueError):
            bound_check(InstanceParams(4, 2, 5))

    def test_conditioning_constant(self):
        assert CONDITIONED_SUCCESS == Fraction(7, 8)


class TestDescriptor:
    def test_round_trip_inline(self, worked_formula):
        d = InstanceDescriptor(worked_formula, derive_params(worked_formula, 2), seed=7, extra={"note": "x"})
        text = d.dumps()
        back = InstanceDescriptor.loads(text)
        assert back.formula == worked_formula
        assert back.params == d.params
        assert back.seed == 7 and back.extra == {"note": "x"}
        assert back.dumps() == text

    def test_lines_sorted(self, worked_formula):
        lines = InstanceDescriptor(worked_formula, derive_params(worked_formula, 2)).dumps().splitlines()
        assert lines == sorted(lines)

    def test_formula_path(self, tmp_path, worked_formula):
        (tmp_path / "f.cnf").write_text(emit_dimacs(worked_formula))
        d = InstanceDescriptor(worked_formula, InstanceParams(4, 2, 9), formula_path="f.cnf")
        back = InstanceDescriptor.loads(d.dumps(), str(tmp_path))
        assert back.formula == worked_formula and back.params.horizon == 9

    def test_rejects_foreign_text(self):
        with pytest.raises(ValueError):
            InstanceDescriptor.loads("v = 3\n")

    def test_rejects_mismatched_v(self, tmp_path):
        f = Formula(3, ((1, 2, 3),))
        (tmp_path / "f.cnf").write_text(emit_dimacs(f))
        d = InstanceDescriptor(f, InstanceParams(3, 1, 3), formula_path="f.cnf")
        with pytest.raises(ValueError):
            InstanceDescriptor.loads(d.dumps().replace("v = 3", "v = 4"), str(tmp_path))
