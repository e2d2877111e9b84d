from fractions import Fraction as F

import pytest

from pivotforge import mdp as D
from pivotforge.lowerbound.mdp_families import (ConstructionError, acyclic_optimal_values,
                                                canonical_bits, default_epsilon,
                                                delta_initial_policy, find_delta_scale,
                                                gen_mdp_copied, gen_mdp_counter, gen_mdp_delta,
                                                gen_mdp_gamma, is_counter_entry,
                                                reduced_cost_bounds)
from pivotforge.rules import PICK_LAST, PICK_ONE, PICK_SQRT_CEIL, RankPicker, f_rule

f1 = f_rule(PICK_ONE)


@pytest.mark.parametrize("L", [2, 3, 4])
def test_counter_action_count(L):
    m, p0 = gen_mdp_counter(L)
    assert len(m.actions) == 4 * L + 3
    assert m.validate() == []


def test_perturbed_counter_randomizes_alpha_actions_only():
    eps = F(1, 100)
    m, _ = gen_mdp_counter(2, eps)
    for a in m.actions.values():
        if a.source.startswith("alpha") and "->T" not in a.name:
            assert dict(a.transitions)["T"] == eps
        else:
            assert len(a.transitions) == 1
    with pytest.raises(ConstructionError):
        gen_mdp_counter(1)
    with pytest.raises(ConstructionError):
        gen_mdp_counter(2, 1)


def test_default_epsilon_matches_largest_value():
    # one backward pass over the acyclic action graph agrees with enumeration
    m, _ = gen_mdp_counter(2)
    top = max(acyclic_optimal_values(m).values())
    assert default_epsilon(2) == F(1, int(top) * 1024)
    assert top == max(D.brute_force_optimum(m)[1].values())


@pytest.mark.parametrize("L", [2, 3, 4])
def test_f1_visits_every_canonical_policy(L):
    m, p0 = gen_mdp_counter(L, default_epsilon(L))
    tr = D.policy_iteration(m, p0, f1)
    assert tr.iterations >= 2 ** L - 2
    seen = {canonical_bits(m, p0)}
    p = p0
    for s in tr.steps:
        p = D.apply_switch(p, m, s.chosen)
        seen.add(canonical_bits(m, p))
    assert set(range(2 ** L)) <= seen
    assert not tr.flagged("rankings-diverged")


def test_half_epsilon_gives_the_same_trace():
    L = 3
    e = default_epsilon(L)
    a = D.policy_iteration(*gen_mdp_counter(L, e), f1)
    b = D.policy_iteration(*gen_mdp_counter(L, e / 2), f1)
    assert [s.chosen for s in a.steps] == [s.chosen for s in b.steps]


def test_copied_k1_preserves_values():
    base, b0 = gen_mdp_counter(2)
    m, p0 = gen_mdp_copied(base, 1, b0)
    v0, v1 = D.policy_values(base, b0), D.policy_values(m, p0)
    assert all(v1[s] == v0[s] for s in base.states)
    with pytest.raises(ConstructionError):
        gen_mdp_copied(base, 0)


def test_copied_improving_count_is_multiple_of_k():
    base, b0 = gen_mdp_counter(2, default_epsilon(2))
    m, p0 = gen_mdp_copied(base, 3, b0)
    tr = D.policy_iteration(m, p0, f_rule(PICK_SQRT_CEIL))
    assert all(len(s.improving) % 3 == 0 for s in tr.steps)


def test_copied_sqrt_rule_mimics_f1_run_on_base():
    L = 2
    base, b0 = gen_mdp_counter(L, default_epsilon(L))
    ref = D.policy_iteration(base, b0, f1)
    k = 3  # at least the square root of the largest improving count (2L+... <= 9)
    assert max(len(s.improving) for s in ref.steps) <= k * k
    m, p0 = gen_mdp_copied(base, k, b0)
    tr = D.policy_iteration(m, p0, f_rule(PICK_SQRT_CEIL))
    assert [s.chosen.split("#")[0] for s in tr.steps] == [s.chosen for s in ref.steps]
    assert [len(s.improving) for s in tr.steps] == [k * len(s.improving) for s in ref.steps]


def test_delta_gadget_shape():
    m, p0 = gen_mdp_delta(2, 4)
    assert m.validate() == []
    assert D.is_weak_unichain_policy(m, p0)
    probs = [a for a in m.actions.values() if len(a.transitions) > 1]
    assert probs and all(len(a.transitions) == 2 for a in probs)
    # alpha_1's gate has probability 1, so its delta actions are deterministic
    assert all(len(m.actions[a].transitions) == 1 for a in m.actions if a.startswith("da(alpha1,"))
    with pytest.raises(ConstructionError):
        gen_mdp_delta(2, 1)


@pytest.mark.parametrize("L", [2, 3])
def test_delta_advances_and_entry_is_most_preferred(L):
    M, m, p0, tr = find_delta_scale(L, f_rule(PICK_LAST))
    assert sum(1 for s in tr.steps if is_counter_entry(s.chosen)) >= 2 ** L - 2
    for s in tr.steps:
        # when an entry action improves it is the greedy pick under all three rankings
        entries = [a for a in s.improving if is_counter_entry(a)]
        if entries:
            assert s.chosen in entries
            assert all(v[-1] == [s.improving.index(s.chosen)] for v in s.tiers.values())


def test_reduced_cost_bounds():
    m, p0 = gen_mdp_delta(2, 2)
    low, U, method = reduced_cost_bounds(m)
    assert method == "enumeration" and 0 < low < U


def test_gamma_rejects_empty_window():
    with pytest.raises(ConstructionError):
        gen_mdp_gamma(PICK_ONE, 40)


def test_gamma_counts_and_s2_pick():
    f = RankPicker(lambda k: max(1, k - 5), "minus-5")
    m, p0, info = gen_mdp_gamma(f, 40)
    assert m.validate() == []
    S2 = set(info["S2"])
    tr = D.policy_iteration(m, p0, f_rule(f))
    phase = 0
    for s in tr.steps:
        live = [a for a in s.improving if a in S2]
        if not live:
            continue
        phase += 1
        assert len(s.improving) == 40
        assert s.chosen == min(live, key=m.bland.get)
    assert phase > 0
    # each gamma decoy move has reduced cost U + k
    val = D.policy_values(m, p0)
    for k, a in enumerate(info["S1"], start=1):
        assert D.reduced_cost(m, val, a) == info["U_bound"] + k
