"""Flux LP of a sink MDP and a lockstep checker against policy iteration.

The LP has one variable per non-sink action (expected number of times the
action is used) and one unit-inflow constraint per non-sink state:

    sum_{a in A_s} x_a - sum_a P[a, s] x_a = 1.

With objective sum_a rew(a) x_a, the dual of a policy basis is the value
vector, so reduced costs and objectives match the MDP's.  Those three
correspondences are checked on sampled policies after construction.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import mdp as mdp_mod
from . import simplex as sx
from .linalg import SingularMatrixError


class ReductionError(ValueError):
    pass


@dataclass
class ReductionMap:
    actions: tuple            # variable j <-> actions[j]
    states: tuple             # constraint i <-> states[i]
    var_of: dict = field(default_factory=dict)

    def variable(self, action: str) -> int:
        return self.var_of[action]

    def action(self, j: int) -> str:
        return self.actions[j]

    def basis(self, m, policy) -> tuple:
        return tuple(sorted(self.var_of[policy[s]] for s in self.states))

    def policy(self, m, basis):
        choice = {m.sink: m.sink_action()}
        for j in basis:
            a = m.actions[self.actions[j]]
            if a.source in choice:
                raise ReductionError("basis uses two actions of one state")
            choice[a.source] = a.name
        return mdp_mod.Policy(choice)


def mdp_to_lp(m, samples: int = 20, seed: int = 0, extra_policies=()):
    """Return (lp, map); raises ReductionError if a sampled check fails."""
    actions = tuple(m.non_sink_actions())
    states = tuple(s for s in m.states if s != m.sink)
    row = {s: i for i, s in enumerate(states)}
    A = [[Fraction(0)] * len(actions) for _ in states]
    for j, a in enumerate(actions):
        act = m.actions[a]
        A[row[act.source]][j] += 1
        for t, q in act.transitions:
            if t != m.sink:
                A[row[t]][j] -= q
    b = [Fraction(1)] * len(states)
    c = [m.actions[a].reward for a in actions]
    lp = sx.LinearProgram(A, b, c, names=actions, check_rank=False)
    rmap = ReductionMap(actions, states, {a: j for j, a in enumerate(actions)})
    lp.meta = {"source": dict(getattr(m, "meta", {}))}
    rng = random.Random(seed)
    checked = 0
    for p in list(extra_policies) + [_random_policy(m, rng) for _ in range(samples * 5)]:
        if checked >= samples + len(extra_policies):
            break
        if not mdp_mod.is_weak_unichain_policy(m, p):
            continue
        problems = check_correspondence(m, lp, rmap, p)
        if problems:
            raise ReductionError(f"reduction check failed: {problems[0]}")
        checked += 1
    return lp, rmap


def _random_policy(m, rng):
    return mdp_mod.Policy({s: rng.choice(m.available[s]) for s in m.states})


def check_correspondence(m, lp, rmap, p) -> list:
    """The three correspondences for one weak unichain policy."""
    problems = []
    basis = rmap.basis(m, p)
    try:
        x, feasible = sx.bfs_from_basis(lp, basis)
    except SingularMatrixError:
        return ["policy basis is singular"]
    if not feasible or any(x[j] <= 0 for j in basis):
        problems.append("policy basis is infeasible or degenerate")
    val = mdp_mod.policy_values(m, p)
    if sx.objective_value(lp, x) != sum(val.values(), Fraction(0)):
        problems.append("objective differs from the sum of values")
    rc_lp = sx.reduced_costs(lp, basis)
    for j, r in rc_lp.items():
        if r != mdp_mod.reduced_cost(m, val, rmap.action(j)):
            problems.append(f"reduced cost differs for {rmap.action(j)}")
            break
    return problems


@dataclass
class LockstepReport:
    rows: list
    ok: bool
    first_divergence: object
    mdp_iterations: int
    lp_iterations: int

    def to_dict(self) -> dict:
        return {"ok": self.ok, "first_divergence": self.first_divergence,
                "mdp_iterations": self.mdp_iterations, "lp_iterations": self.lp_iterations,
                "rows": self.rows}


def _fmt(q):
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def lockstep_check(m, rule, p0, cap: int = 10 ** 6) -> LockstepReport:
    """Run policy iteration and simplex side by side and compare every step."""
    lp, rmap = mdp_to_lp(m, extra_policies=[p0])

    def mdp_probe(policy, snap):
        return {"rc": {a: snap.rc[a] for a in rmap.actions}, "basis": rmap.basis(m, policy)}

    def lp_probe(basis, snap):
        full = {rmap.action(j): r for j, r in snap.rc.items()}
        for j in basis:
            full[rmap.action(j)] = Fraction(0)
        return {"rc": full, "basis": basis}

    tr_m = mdp_mod.policy_iteration(m, p0, rule, cap=cap, probe=mdp_probe)
    tr_l = sx.simplex(lp, rmap.basis(m, p0), rule, cap=cap, probe=lp_probe)
    rows, first = [], None
    n = max(tr_m.iterations, tr_l.iterations)
    for i in range(n):
        sm = tr_m.steps[i] if i < tr_m.iterations else None
        sl = tr_l.steps[i] if i < tr_l.iterations else None
        row = {"iter": i + 1}
        if sm is None or sl is None:
            row.update(action=sm.chosen if sm else None, variable=sl.chosen_label if sl else None,
                       match=False)
        else:
            rc_eq = sm.extra["rc"] == sl.extra["rc"]
            obj_eq = sm.objective == sl.objective
            same = sm.chosen == rmap.action(sl.chosen)
            basis_eq = tuple(sl.extra["basis"]) == tuple(sm.extra["basis"])
            row.update(action=sm.chosen, variable=sl.chosen_label,
                       rc_mdp=_fmt(sm.extra["rc"][sm.chosen]),
                       rc_lp=_fmt(sl.extra["rc"][rmap.action(sl.chosen)]),
                       obj_mdp=_fmt(sm.objective), obj_lp=_fmt(sl.objective),
                       match=bool(rc_eq and obj_eq and same and basis_eq))
        rows.append(row)
        if not row["match"] and first is None:
            first = i + 1
    final_ok = (tr_m.final_objective == tr_l.final_objective
                and rmap.basis(m, tr_m.final) == tuple(tr_l.final))
    if not final_ok and first is None:
        first = n + 1
    return LockstepReport(rows, first is None, first, tr_m.iterations, tr_l.iterations)

