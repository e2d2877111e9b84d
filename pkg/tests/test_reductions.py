import pytest

from pivotforge import mdp as D
from pivotforge import simplex as S
from pivotforge.lowerbound.mdp_families import default_epsilon, gen_mdp_counter
from pivotforge.reductions import check_correspondence, lockstep_check, mdp_to_lp
from pivotforge.rules import BLAND, DANTZIG, LARGEST_INCREASE, PICK_ONE, f_rule, greedy_rule


def test_flux_lp_of_m2_has_one_variable_per_non_sink_action():
    m, p0 = gen_mdp_counter(2)
    lp, rmap = mdp_to_lp(m)
    assert lp.n == len(m.actions) - 1 == 10
    assert lp.m == len(m.states) - 1 == 6
    assert set(rmap.actions) == set(m.non_sink_actions())


def test_correspondence_on_every_policy_of_m2():
    m, _ = gen_mdp_counter(2)
    lp, rmap = mdp_to_lp(m, samples=0)
    n = 0
    for p in D.all_policies(m):
        assert check_correspondence(m, lp, rmap, p) == []
        assert rmap.policy(m, rmap.basis(m, p)) == p
        n += 1
    assert n == 16


def test_lp_optimum_equals_mdp_optimum():
    m, _ = gen_mdp_counter(2)
    lp, _ = mdp_to_lp(m)
    assert S.brute_force_optimum(lp) == D.brute_force_optimum(m)[0]


@pytest.mark.parametrize("rule", [greedy_rule(DANTZIG), greedy_rule(BLAND)], ids=["dantzig", "bland"])
def test_lockstep_on_m2(rule):
    m, p0 = gen_mdp_counter(2)
    rep = lockstep_check(m, rule, p0)
    assert rep.ok and rep.first_divergence is None
    assert rep.mdp_iterations == rep.lp_iterations == len(rep.rows)


def test_lockstep_on_perturbed_m3_with_f1():
    m, p0 = gen_mdp_counter(3, default_epsilon(3))
    rep = lockstep_check(m, f_rule(PICK_ONE), p0)
    assert rep.ok and rep.mdp_iterations >= 6
    assert all(r["rc_mdp"] == r["rc_lp"] and r["obj_mdp"] == r["obj_lp"] for r in rep.rows)


def test_lockstep_report_is_json_ready():
    import json
    m, p0 = gen_mdp_counter(2)
    d = lockstep_check(m, greedy_rule(LARGEST_INCREASE), p0).to_dict()
    assert json.loads(json.dumps(d))["ok"] is True
