from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pivotforge import mdp as D
from pivotforge.lowerbound.mdp_families import gen_mdp_counter
from pivotforge.rules import DANTZIG, PICK_ONE, f_rule, greedy_rule

f1 = f_rule(PICK_ONE)


def det(name, src, dst, r=0):
    return D.Action(name, src, F(r), ((dst, F(1)),))


def _mdp(actions):
    acts = [det("T", "T", "T")] + actions
    states = sorted({a.source for a in acts})
    return D.MarkovDecisionProcess(states, "T", acts, {a.name: i + 1 for i, a in enumerate(acts)})


def test_counter_mdp_is_weak_unichain_and_valid():
    m, p0 = gen_mdp_counter(2)
    assert m.validate() == []
    assert D.is_weak_unichain_policy(m, p0)
    assert len(m.actions) == 11


def test_two_state_loop_is_not_weak_unichain():
    m = _mdp([det("x>y", "x", "y"), det("y>x", "y", "x"), det("x>T", "x", "T")])
    p = D.Policy({"T": "T", "x": "x>y", "y": "y>x"})
    assert not D.is_weak_unichain_policy(m, p)
    with pytest.raises(D.ValuesUndefinedError):
        D.policy_values(m, p)


def test_single_state_value():
    m = _mdp([det("s>T", "s", "T", 5)])
    assert D.policy_values(m, D.Policy({"T": "T", "s": "s>T"}))["s"] == 5


def test_counter_mdp_values_reduced_costs_and_objective():
    m, p0 = gen_mdp_counter(2)
    val = D.policy_values(m, p0)
    # hand forward substitution: alpha chains collect only the top reward L^3 = 8,
    # beta_l collects L^l on its way up: beta2 = 4, beta1 = 2 + 4
    assert [val[f"alpha{i}"] for i in (1, 2, 3)] == [8, 8, 8]
    assert [val[f"beta{i}"] for i in (1, 2, 3)] == [6, 4, 0]
    assert D.objective(m, p0) == 34
    rc = D.reduced_costs(m, val)
    assert rc["beta2->alpha3"] == 4 and rc["beta1->alpha2"] == 2
    assert all(rc[p0[s]] == 0 for s in m.states)
    assert D.improving_switches(m, p0) == ["beta2->alpha3", "beta1->alpha2"]


def test_counter_mdp_l3_has_three_switches():
    m, p0 = gen_mdp_counter(3)
    imp = D.improving_switches(m, p0)
    assert len(imp) == 3 and all(a.startswith("beta") for a in imp)
    # cross-check with enumeration: a policy has no improving switch iff it is optimal
    best, _ = D.brute_force_optimum(gen_mdp_counter(2)[0])
    assert best == D.objective(*_optimal(gen_mdp_counter(2)))


def _optimal(pair):
    m, p0 = pair
    tr = D.policy_iteration(m, p0, f1)
    return m, tr.final


def test_apply_switch_examples():
    m, p0 = gen_mdp_counter(2)
    assert D.apply_switch(p0, m, p0["beta2"]) == p0
    p = D.apply_switch(p0, m, "beta2->alpha3")
    assert [s for s in m.states if p[s] != p0[s]] == ["beta2"]


@pytest.mark.parametrize("L", [2, 5])
def test_policy_iteration_lower_bound(L):
    m, p0 = gen_mdp_counter(L)
    assert D.policy_iteration(m, p0, f1).iterations >= 2 ** L - 2


def test_optimal_start_and_zero_reward():
    m, p0 = gen_mdp_counter(3)
    opt = D.policy_iteration(m, p0, f1).final
    assert D.policy_iteration(m, opt, f1).iterations == 0
    assert D.improving_switches(m, opt) == []
    z = _mdp([det("a", "s", "T"), det("b", "s", "u"), det("c", "u", "T")])
    assert D.brute_force_optimum(z)[0] == 0


def test_optimum_matches_enumeration_on_m2():
    m, p0 = gen_mdp_counter(2)
    tr = D.policy_iteration(m, p0, greedy_rule(DANTZIG))
    best, best_val = D.brute_force_optimum(m)
    assert D.objective(m, tr.final) == best
    assert D.policy_values(m, tr.final) == best_val


def test_cyclic_policy_values_by_linear_solve():
    # x -> y with prob 1/2 and T with 1/2, y -> x surely; val(x) = 2 + val(y)/2, val(y) = 1 + val(x)
    acts = [D.Action("x", "x", F(2), (("y", F(1, 2)), ("T", F(1, 2)))), det("y", "y", "x", 1)]
    m = _mdp(acts)
    val = D.policy_values(m, D.Policy({"T": "T", "x": "x", "y": "y"}))
    assert val["x"] == 5 and val["y"] == 6


@st.composite
def random_mdp(draw):
    n = draw(st.integers(1, 4))
    names = [f"s{i}" for i in range(n)]
    acts = [det("T", "T", "T")]
    for i, s in enumerate(names):
        for j in range(draw(st.integers(1, 3))):
            r = F(draw(st.integers(-4, 6)))
            tgt = draw(st.sampled_from(names + ["T"]))
            q = F(draw(st.integers(1, 3)), 4)
            if tgt == "T" or q == 1:
                tr = ((tgt if tgt != s else "T", F(1)),)
            else:
                tr = ((tgt, q), ("T", 1 - q))
            acts.append(D.Action(f"{s}.{j}", s, r, tr))
        acts.append(det(f"{s}.exit", s, "T", draw(st.integers(-2, 2))))
    m = D.MarkovDecisionProcess(names + ["T"], "T", acts,
                                {a.name: i + 1 for i, a in enumerate(acts)})
    p0 = D.Policy({s: (f"{s}.exit" if s != "T" else "T") for s in names + ["T"]})
    return m, p0


@given(random_mdp())
def test_policy_iteration_is_monotone_and_optimal(mp):
    m, p0 = mp
    tr = D.policy_iteration(m, p0, f1)
    p = p0
    prev = D.policy_values(m, p)
    for s in tr.steps:
        p = D.apply_switch(p, m, s.chosen)
        assert D.is_weak_unichain_policy(m, p)
        cur = D.policy_values(m, p)
        assert all(cur[x] >= prev[x] for x in m.states)
        assert D.objective(m, p, cur) > D.objective(m, p, prev) or cur != prev
        prev = cur
    best, best_val = D.brute_force_optimum(m)
    assert D.objective(m, tr.final) == best
    assert D.policy_values(m, tr.final) == best_val
