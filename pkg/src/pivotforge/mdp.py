"""Total-reward MDPs with a sink, exact policy values and policy iteration.

Policy values are computed per strongly connected component of the policy's
transition graph, in reverse topological order, with exact elimination
inside each component.  On acyclic policies this is plain back-substitution.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

import networkx as nx

from . import linalg
from .trace import DEFAULT_CAP, EngineError, RunTrace, run_improvement, state_digest


class ValuesUndefinedError(EngineError):
    pass


@dataclass(frozen=True)
class Action:
    name: str
    source: str
    reward: Fraction
    transitions: tuple          # ((state, probability), ...)

    def targets(self):
        return [s for s, _ in self.transitions]


class MarkovDecisionProcess:
    def __init__(self, states: Iterable[str], sink: str, actions: Iterable[Action],
                 bland: Mapping):
        self.states = tuple(states)
        self.sink = sink
        self.actions = MappingProxyType({a.name: a for a in actions})
        avail = {s: [] for s in self.states}
        for a in self.actions.values():
            if a.source in avail:
                avail[a.source].append(a.name)
        self.bland = MappingProxyType(dict(bland))
        key = lambda name: self.bland.get(name, 0)
        self.available = MappingProxyType({s: tuple(sorted(v, key=key)) for s, v in avail.items()})
        self.action_order = tuple(sorted(self.actions, key=key))
        self.meta = {}

    def sink_action(self) -> str:
        return self.available[self.sink][0]

    def validate(self) -> list:
        problems = []
        sset = set(self.states)
        if len(sset) != len(self.states):
            problems.append("duplicate state")
        if self.sink not in sset:
            problems.append("sink is not a state")
        for s in self.states:
            if not self.available.get(s):
                problems.append(f"state {s} has no action")
        for a in self.actions.values():
            if a.source not in sset:
                problems.append(f"action {a.name} starts at unknown state")
            if any(t not in sset for t, _ in a.transitions):
                problems.append(f"action {a.name} leads to an unknown state")
            if any(p <= 0 for _, p in a.transitions):
                problems.append(f"action {a.name} has a non-positive probability")
            if sum(p for _, p in a.transitions) != 1:
                problems.append(f"action {a.name} probabilities do not sum to 1")
            if len({t for t, _ in a.transitions}) != len(a.transitions):
                problems.append(f"action {a.name} lists a target twice")
        if self.sink in sset:
            sa = self.available.get(self.sink, ())
            if len(sa) != 1:
                problems.append("sink must have exactly one action")
            else:
                a = self.actions[sa[0]]
                if a.reward != 0 or a.transitions != ((self.sink, Fraction(1)),):
                    problems.append("sink action must loop with reward 0")
            # sink reachable from all states through some action sequence
            g = nx.DiGraph()
            g.add_nodes_from(self.states)
            for a in self.actions.values():
                for t, _ in a.transitions:
                    g.add_edge(a.source, t)
            reach = nx.ancestors(g, self.sink) | {self.sink}
            if reach != sset:
                problems.append("sink not reachable from every state")
        nums = sorted(self.bland.get(a) for a in self.actions if self.bland.get(a) is not None)
        if set(self.bland) != set(self.actions) or nums != list(range(1, len(self.actions) + 1)):
            problems.append("bland not bijective")
        return problems

    def non_sink_actions(self) -> list:
        return [a for a in self.action_order if self.actions[a].source != self.sink]


class Policy:
    """Immutable map from every state to one of its available actions."""

    __slots__ = ("choice", "_key")

    def __init__(self, choice: Mapping):
        self.choice = MappingProxyType(dict(choice))
        self._key = tuple(sorted(self.choice.items()))

    def __getitem__(self, s):
        return self.choice[s]

    def __eq__(self, other):
        return isinstance(other, Policy) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return "Policy(" + ", ".join(f"{s}:{a}" for s, a in self._key) + ")"

    def items(self):
        return self._key


def complete_policy(m: MarkovDecisionProcess, choice: Mapping) -> Policy:
    d = dict(choice)
    d.setdefault(m.sink, m.sink_action())
    return Policy(d)


def check_policy(m: MarkovDecisionProcess, p: Policy):
    if set(p.choice) != set(m.states):
        raise ValueError("policy must choose an action at every state")
    for s, a in p.choice.items():
        if a not in m.available[s]:
            raise ValueError(f"action {a} is not available at {s}")


def apply_switch(p: Policy, m: MarkovDecisionProcess, a: str) -> Policy:
    s = m.actions[a].source
    if p.choice[s] == a:
        return p
    d = dict(p.choice)
    d[s] = a
    return Policy(d)


def _chain(m: MarkovDecisionProcess, p: Policy) -> dict:
    return {s: m.actions[p.choice[s]].transitions for s in m.states}


def is_weak_unichain_policy(m: MarkovDecisionProcess, p: Policy) -> bool:
    """The sink is reachable from every state in the induced chain."""
    pred = {s: [] for s in m.states}
    for s, trans in _chain(m, p).items():
        for t, _ in trans:
            pred[t].append(s)
    seen = {m.sink}
    stack = [m.sink]
    while stack:
        t = stack.pop()
        for s in pred[t]:
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return len(seen) == len(m.states)


def _acyclic_order(m, chain):
    """Non-sink states with successors first, or None if the chain has a cycle."""
    indeg = {s: 0 for s in m.states}
    for s, trans in chain.items():
        if s != m.sink:
            for t, _ in trans:
                indeg[t] += 1
    stack = [s for s in m.states if indeg[s] == 0 and s != m.sink]
    out = []
    while stack:
        s = stack.pop()
        out.append(s)
        for t, _ in chain[s]:
            indeg[t] -= 1
            if indeg[t] == 0 and t != m.sink:
                stack.append(t)
    if len(out) != len(m.states) - 1:
        return None
    out.reverse()
    return out


def policy_values(m: MarkovDecisionProcess, p: Policy) -> dict:
    """Exact solution of the Bellman system with val(sink)=0."""
    if not is_weak_unichain_policy(m, p):
        raise ValuesUndefinedError("values undefined: policy is not weak unichain")
    chain = _chain(m, p)
    order = _acyclic_order(m, chain)
    if order is not None:
        val = {m.sink: Fraction(0)}
        for s in order:
            a = m.actions[p.choice[s]]
            val[s] = a.reward + sum((q * val[t] for t, q in a.transitions), Fraction(0))
        return val
    g = nx.DiGraph()
    g.add_nodes_from(m.states)
    for s, trans in chain.items():
        if s == m.sink:
            continue
        for t, _ in trans:
            g.add_edge(s, t)
    cond = nx.condensation(g)
    comp_members = {}
    for s in m.states:
        if s != m.sink:
            comp_members.setdefault(cond.graph["mapping"][s], []).append(s)
    val = {m.sink: Fraction(0)}
    for c in reversed(list(nx.topological_sort(cond))):
        members = comp_members.get(c, [])
        if not members:
            continue
        if len(members) == 1 and not g.has_edge(members[0], members[0]):
            s = members[0]
            a = m.actions[p.choice[s]]
            val[s] = a.reward + sum((q * val[t] for t, q in a.transitions), Fraction(0))
            continue
        pos = {s: i for i, s in enumerate(members)}
        k = len(members)
        mat = [[Fraction(0)] * k for _ in range(k)]
        rhs = [Fraction(0)] * k
        for s in members:
            i = pos[s]
            a = m.actions[p.choice[s]]
            mat[i][i] += 1
            rhs[i] = a.reward
            for t, q in a.transitions:
                if t in pos:
                    mat[i][pos[t]] -= q
                else:
                    rhs[i] += q * val[t]
        sol = linalg.solve(mat, rhs)
        for s in members:
            val[s] = sol[pos[s]]
    return val


def reduced_cost(m: MarkovDecisionProcess, val: Mapping, a: str) -> Fraction:
    act = m.actions[a]
    return act.reward + sum((q * val[t] for t, q in act.transitions), Fraction(0)) - val[act.source]


def reduced_costs(m: MarkovDecisionProcess, val: Mapping) -> dict:
    return {a: reduced_cost(m, val, a) for a in m.action_order}


def improving_switches(m: MarkovDecisionProcess, p: Policy, val: Optional[Mapping] = None) -> list:
    if val is None:
        val = policy_values(m, p)
    return [a for a in m.action_order if reduced_cost(m, val, a) > 0]


def objective(m: MarkovDecisionProcess, p: Policy, val: Optional[Mapping] = None) -> Fraction:
    if val is None:
        val = policy_values(m, p)
    return sum(val.values(), Fraction(0))


class _MDPContext:
    def __init__(self, snap):
        self._snap = snap
        self.elements = snap.improving
        self.n = len(snap.mdp.actions)

    def index(self, a):
        return self._snap.mdp.bland[a]

    def reduced_cost(self, a):
        return self._snap.rc[a]

    def objective_after(self, a):
        snap = self._snap
        q = apply_switch(snap.policy, snap.mdp, a)
        return objective(snap.mdp, q)


class _MDPSnapshot:
    def __init__(self, mdp, policy):
        self.mdp = mdp
        self.policy = policy
        self.val = policy_values(mdp, policy)
        self.rc = reduced_costs(mdp, self.val)
        for s in mdp.states:
            if self.rc[policy.choice[s]] != 0:
                raise EngineError(f"active action at {s} has non-zero reduced cost")
        self.improving = [a for a in mdp.action_order if self.rc[a] > 0]
        self.objective = sum(self.val.values(), Fraction(0))

    def index(self, a):
        return self.mdp.bland[a]

    def context(self):
        return _MDPContext(self)


class MDPEngine:
    name = "mdp"

    def __init__(self, mdp: MarkovDecisionProcess, checks: bool = True):
        self.mdp = mdp
        self.n_elements = len(mdp.actions)
        self.checks = checks
        self._last = None

    def snapshot(self, p):
        snap = _MDPSnapshot(self.mdp, p)
        if self.checks and self._last is not None:
            prev = self._last
            if not snap.objective > prev.objective:
                raise EngineError("objective did not increase")
            for s, x in snap.val.items():
                if x < prev.val[s]:
                    raise EngineError(f"value of {s} decreased")
        self._last = snap
        return snap

    def apply(self, p, a):
        return apply_switch(p, self.mdp, a)

    def state_key(self, p):
        return state_digest(p.items())

    def label(self, a):
        return a


def policy_iteration(m: MarkovDecisionProcess, p0: Policy, rule, cap: int = DEFAULT_CAP,
                     probe=None, checks: bool = True) -> RunTrace:
    check_policy(m, p0)
    if not is_weak_unichain_policy(m, p0):
        raise ValuesUndefinedError("initial policy is not weak unichain")
    return run_improvement(MDPEngine(m, checks), p0, rule, cap, probe)


def all_policies(m: MarkovDecisionProcess, limit: int = 2 ** 12):
    total = 1
    for s in m.states:
        total *= len(m.available[s])
    if total > limit:
        raise ValueError(f"{total} policies exceed the enumeration limit {limit}")
    for combo in itertools.product(*(m.available[s] for s in m.states)):
        yield Policy(dict(zip(m.states, combo)))


def brute_force_optimum(m: MarkovDecisionProcess, limit: int = 2 ** 12):
    """(best objective, pointwise-best values) over all weak unichain policies."""
    best_obj, best_val = None, None
    for p in all_policies(m, limit):
        if not is_weak_unichain_policy(m, p):
            continue
        val = policy_values(m, p)
        obj = sum(val.values(), Fraction(0))
        if best_obj is None or obj > best_obj:
            best_obj = obj
        if best_val is None:
            best_val = dict(val)
        else:
            for s, x in val.items():
                best_val[s] = max(best_val[s], x)
    if best_obj is None:
        raise ValueError("no weak unichain policy")
    return best_obj, best_val
