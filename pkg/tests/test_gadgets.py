import pytest

from pivotforge import parity as P
from pivotforge.audits import (check_controller_lemma, check_delayer_lemma, check_filler_lemma,
                               count_profile)
from pivotforge.lowerbound.counter import gen_counter_game
from pivotforge.lowerbound.gadgets import (GadgetError, GameBuilder, add_controller, add_delayer,
                                           add_filler, gadget_double_filler, gadget_filler,
                                           gadget_multiplier)
from pivotforge.rules import BLAND, greedy_rule

bland = greedy_rule(BLAND)


def test_counter_game_structure():
    g, s0 = gen_counter_game(3)
    for i in range(1, 4):
        assert g.priority[f"a{i}"] == 2 * i + 1 and g.priority[f"b{i}"] == 2 * i + 2
        nxt = f"a{i + 1}" if i < 3 else "T"
        assert g.bland[(f"a{i}", nxt)] == 2 * i - 1
        assert g.bland[(f"a{i}", f"b{i + 1}")] == 2 * i
    assert g.priority["b4"] == 10
    assert dict(s0.items()) == {"a1": "a2", "a2": "a3", "a3": "T"}


@pytest.mark.parametrize("n", range(1, 7))
def test_counter_game_bland_length(n):
    g, s0 = gen_counter_game(n)
    assert P.strategy_improvement(g, s0, bland).iterations == 2 ** n - 1


def _improving_from(g, s, src):
    return [e for e in P.improving_switches(g, s) if e[0] == src]


def test_multiplier():
    g, s0 = gen_counter_game(1)
    g1, s1 = gadget_multiplier(g, s0, ("a1", "b2"), 1)
    assert len(g1.player0_edges) == len(g.player0_edges)
    assert P.strategy_improvement(g1, s1, bland).iterations == 1
    g3, s3 = gadget_multiplier(g, s0, ("a1", "b2"), 3)
    assert len(g3.player0_edges) == len(g.player0_edges) + 2
    # the original switch improves at sigma_0, so all three copies do
    assert len(_improving_from(g3, s3, "a1")) == 3
    # copies take the original edge's slot: (a1, T) keeps 1, the copies get 2..4
    assert g3.bland[("a1", "T")] == 1
    assert sorted(g3.bland[e] for e in g3.player0_edges if e[0] == "a1" and e[1] != "T") == [2, 3, 4]
    # whenever the original edge improves, all copies do (checked on every strategy of G_1)
    for s in P.all_strategies(g):
        orig = ("a1", "b2") in P.improving_switches(g, s)
        s_copy = P.Strategy({"a1": s["a1"] if s["a1"] != "b2" else g3_first(g3)})
        n = len([e for e in _improving_from(g3, s_copy, "a1") if e[1] != "T"])
        assert n == (3 if orig else 0)
    with pytest.raises(GadgetError):
        gadget_multiplier(g, s0, ("b1", "b2"), 2)


def g3_first(g3):
    return min((e for e in g3.player0_edges if e[0] == "a1" and e[1] != "T"), key=g3.bland.get)[1]


def _with_controllers(n):
    g, s0 = gen_counter_game(n)
    b = GameBuilder.from_game(g, s0)
    ctl = [add_controller(b, e) for e in list(g.player0_edges)]
    h, s = b.build()
    return g, h, s, ctl


@pytest.mark.parametrize("n", [2, 3])
def test_controller_lemma_and_constant_count(n):
    g, h, s, ctl = _with_controllers(n)
    assert len(h.player0_edges) == 3 * len(g.player0_edges)
    tr = P.strategy_improvement(h, s, bland)
    assert check_controller_lemma(h, tr, ctl)["pass"]
    prof = count_profile(tr)
    first_a_prime = next(i for i, st in enumerate(tr.steps)
                         if any(st.chosen == c.a_prime for c in ctl))
    assert len(set(prof[:first_a_prime])) == 1
    assert prof[0] == len(g.player0_edges)


def test_controller_precondition():
    g, s0 = gen_counter_game(1)
    b = GameBuilder.from_game(g, s0)
    f = add_filler(b, "F")
    # give filler vertex Y an edge into a priority-1 vertex: a controller there must refuse
    b.add_vertex("low", 1, 1)
    b.add_edge("low", b.sink)
    b.add_edge(f.improving[0], "low")
    with pytest.raises(GadgetError):
        add_controller(b, (f.improving[0], "low"))


def test_filler_contributes_exactly_one():
    g, s0 = gen_counter_game(2)
    g2, s2 = gadget_filler(g, s0, 1, name="F")
    assert len(g2.player0_edges) == len(g.player0_edges) + 3
    assert sorted(g2.bland.values()) == list(range(1, len(g2.bland) + 1))
    assert g2.bland[("F.X", "T")] == 1
    assert g2.bland[("a1", "a2")] == g.bland[("a1", "a2")] + 3
    imp0 = P.improving_switches(g2, s2)
    assert len(imp0) == len(P.improving_switches(g, s0)) + 1
    tr = P.strategy_improvement(g2, s2, bland)
    assert tr.iterations == 2 ** 2 - 1 + 1
    fill = next(iter([e for e in g2.player0_edges if e == ("F.Y", "F.X")]))
    from pivotforge.lowerbound.gadgets import FillerEdges
    fe = FillerEdges(("F.X", "T"), ("F.Y", "T"), fill)
    assert check_filler_lemma(g2, tr, [fe])["pass"]


def _with_delayers(n, k):
    g, s0 = gen_counter_game(n)
    b = GameBuilder.from_game(g, s0)
    ds = []
    for i in range(1, n + 1):
        nxt = f"a{i + 1}" if i < n else "T"
        ds.append(add_delayer(b, f"a{i}", k, nxt, f"b{i + 1}"))
    h, s = b.build()
    return h, s, ds


@pytest.mark.parametrize("k", [1, 2, 3])
def test_delayer_lemma(k):
    h, s, ds = _with_delayers(3, k)
    assert P.is_admissible(h, s)
    # before any outside change nothing inside a delayer improves except its drains
    tr = P.strategy_improvement(h, s, bland)
    rep = check_delayer_lemma(h, tr, ds)
    assert rep["pass"], rep
    # each original switch becomes a drain of k+1 switches
    assert tr.iterations == (k + 1) * (2 ** 3 - 1)
    assert rep["detail"]["drains"] == 2 ** 3 - 1


def test_delayer_rejects_bad_arguments():
    g, s0 = gen_counter_game(1)
    with pytest.raises(GadgetError):
        add_delayer(GameBuilder.from_game(g, s0), "a1", 0, "T", "b2")
    with pytest.raises(GadgetError):
        add_delayer(GameBuilder.from_game(g, s0), "b1", 1, "a2", "b2")


def test_double_filler():
    g, s0 = gen_counter_game(1)
    before = P.improving_switches(g, s0)
    g2, s2 = gadget_double_filler(g, s0, 1, 4, name="D")
    assert len(g2.player0_edges) == len(g.player0_edges) + 6
    assert [g2.bland[e] for e in (("D.x", "T"), ("D.y", "D.x"), ("D.y", "T"))] == [1, 2, 3]
    imp = P.improving_switches(g2, s2)
    assert ("D.x", "T") in imp and ("D.w", "D.x") in imp
    assert len(imp) == len(before) + 2
    # relative Bland order of the original edges is unchanged
    orig = sorted(g.player0_edges, key=lambda e: g.bland[e])
    assert sorted(orig, key=lambda e: g2.bland[e]) == orig
    # after a1 the widget offers a2 in its place, so it consumes one rule output
    s3 = P.apply_switch(s2, ("D.x", "T"))
    imp3 = P.improving_switches(g2, s3)
    assert ("D.y", "D.x") in imp3 and ("D.x", "T") not in imp3
    assert len(imp3) == len(imp)
