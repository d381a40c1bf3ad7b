from __future__ import annotations

from fractions import Fraction

import pytest

from corpus import WORKED_SOLUTION, worked_example, unique_suite
from hardmdp.cnf import Assignment, Formula
from hardmdp.exact import (
    CapExceeded,
    exact_values,
    greedy_path,
    optimal_policy,
    sequence_value,
    verify_linearity,
    verify_value_law,
    work_cap,
)
from hardmdp.instance import InstanceParams, derive_params
from hardmdp.mdp import HardMDP, State, optimal_value, parse_state_key, root_state

W_WORKED = Assignment.from_signs(WORKED_SOLUTION)
TOY = Formula(2, ((1, 1, 1), (-2, -2, -2)))


def tree_value(mdp: HardMDP, s: State, w_star) -> Fraction:
    """Plain recursion over the unfolded tree: no memo, no state identification."""
    if s.terminal:
        return Fraction(0)
    best = None
    for a in range(1, mdp.num_actions + 1):
        q = mdp.expected_reward(s, w_star) + tree_value(mdp, mdp.transition(s, a), w_star)
        best = q if best is None else max(best, q)
    return best


class TestValues:
    def test_worked_root(self):
        f = worked_example()
        table = exact_values(f, derive_params(f, 2))
        assert table[root_state()] == Fraction(289, 400)

    def test_unsat_all_zero(self):
        f = Formula(3, ((1, 1, 1), (-1, -1, -1), (2, 3, 3)))
        table = exact_values(f, InstanceParams(3, 2, 5))
        assert table.solution is None
        assert all(v == 0 for v in table.values.values())

    def test_satisfying_states(self):
        f = worked_example()
        p = InstanceParams(4, 3, 10)
        table = exact_values(f, p)
        hits = [s for s in table.states() if s.bits == W_WORKED.bits]
        assert hits
        for s in hits:
            assert table[s] == (1 - Fraction(s.depth, 14)) ** 3

    @pytest.mark.parametrize("k, H", [(3, 4), (3, 6), (2, 3), (2, 5)])
    def test_folded_equals_tree(self, k, H):
        for f in [worked_example()] + unique_suite(3, seed=77, v_lo=3, v_hi=4):
            p = InstanceParams(f.num_vars, 2, H, k)
            table = exact_values(f, p)
            mdp = table.mdp
            assert table[root_state()] == tree_value(mdp, root_state(), table.solution)

    def test_cap(self):
        f = worked_example()
        with pytest.raises(CapExceeded):
            exact_values(f, derive_params(f, 2), cap=100)

    def test_cap_env(self, monkeypatch):
        monkeypatch.setenv("HARDMDP_CAP", "5")
        assert work_cap() == 5
        assert work_cap(9) == 9
        with pytest.raises(CapExceeded):
            exact_values(TOY, InstanceParams(2, 1, 2))

    def test_export(self):
        table = exact_values(TOY, InstanceParams(2, 1, 2))
        lines = table.export().splitlines()
        assert lines == sorted(lines)
        for line in lines:
            key, val = line.split()
            assert table[parse_state_key(key)] == Fraction(val)

    def test_q_is_reward_plus_child(self):
        f = worked_example()
        table = exact_values(f, derive_params(f, 2))
        s = State(W_WORKED.bits, 3)
        assert table.q_value(s, 1) == table[s] == Fraction(289, 400)
        assert table.q_value(root_state(), 1) == table[State(0b0001, 1)]


class TestVerifiers:
    @pytest.mark.parametrize("k", [3, 2])
    def test_worked_example(self, k):
        f = worked_example()
        p = derive_params(f, 2, k=k)
        law = verify_value_law(f, p)
        lin = verify_linearity(f, p)
        assert law.ok and law.max_abs_error == 0
        assert lin.ok and lin.d_used <= p.feature_dim
        assert (law.intermediate_checked > 0) == (k == 2)
        if k == 2:
            assert any(len(t) > 2 for t in lin.support)

    def test_worked_three_actions_uses_all_tuples(self):
        f = worked_example()
        lin = verify_linearity(f, derive_params(f, 2))
        assert lin.d_used == 21

    def test_toy(self):
        p = InstanceParams(2, 1, 2)
        lin = verify_linearity(TOY, p)
        assert lin.ok and lin.d_used <= 3

    def test_perturbation_detected(self):
        f = worked_example()
        p = derive_params(f, 2)
        target = State(0b0011, 2)

        def skewed(s, w, params):
            val = optimal_value(s, w, params)
            return val + Fraction(1, 400) if s == target else val

        rep = verify_value_law(f, p, closed_form=skewed)
        assert not rep.ok
        assert rep.counterexample == target.key(4)
        assert rep.max_abs_error == Fraction(1, 400)

    def test_requires_unique(self):
        f = Formula(2, ((1, 1, 1),))
        with pytest.raises(ValueError):
            verify_value_law(f, InstanceParams(2, 1, 2))
        with pytest.raises(ValueError):
            verify_linearity(Formula(1, ((1, 1, 1), (-1, -1, -1))), InstanceParams(1, 1, 2))


class TestPolicy:
    def test_worked_three_actions(self):
        f = worked_example()
        p = derive_params(f, 2)
        acts = optimal_policy(f, p)
        assert acts == [1, 2, 3]
        value, stop = sequence_value(HardMDP(f, p), acts, W_WORKED)
        assert stop.bits == W_WORKED.bits and value == Fraction(289, 400)

    def test_root_already_satisfies(self):
        f = Formula(2, ((-1, -1, -1), (-2, -2, -2)))
        assert optimal_policy(f, InstanceParams(2, 1, 2)) == []

    def test_two_action_path_length(self):
        for f in [worked_example()] + unique_suite(5, seed=5, v_lo=4, v_hi=7):
            p = InstanceParams(f.num_vars, 2, 2 * f.num_vars, 2)
            table = exact_values(f, p)
            acts = optimal_policy(f, p)
            dist = table.solution.bits.bit_count()
            assert len(acts) <= 2 * dist
            assert sequence_value(table.mdp, acts, table.solution)[0] == table[root_state()]

    def test_unsat_rejected(self):
        with pytest.raises(ValueError):
            optimal_policy(Formula(1, ((1, 1, 1), (-1, -1, -1))), InstanceParams(1, 1, 2))

    def test_greedy_path_achieves_dp_value(self):
        for f in unique_suite(6, seed=6, v_lo=5, v_hi=8):
            p = InstanceParams(f.num_vars, 3, f.num_vars + 2)
            table = exact_values(f, p)
            acts = greedy_path(table.mdp, table.solution)
            assert sequence_value(table.mdp, acts, table.solution)[0] == table[root_state()]

    def test_short_sequence_earns_nothing(self):
        f = worked_example()
        mdp = HardMDP(f, derive_params(f, 2))
        assert sequence_value(mdp, [1], W_WORKED)[0] == 0
