"""Sink parity games and single-switch strategy improvement.

Vertices are strings.  The game keeps an ordered vertex list; that order is
the "vertex id" order used for deterministic tie-breaking.  Valuations are
stored as exact integers ``sum((-t) ** p)`` along the play path, and the
multisets themselves are rebuilt on demand by following the play.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

import networkx as nx

from .ordering import BOTTOM, ValuationMultiset
from .trace import DEFAULT_CAP, EngineError, RunTrace, run_improvement, state_digest


class NotAdmissibleError(EngineError):
    pass


class SinkParityGame:
    """Two-player game graph with priorities and Bland numbers on player-0 edges."""

    def __init__(self, player0: Iterable[str], player1: Iterable[str], sink: str,
                 edges: Iterable, priority: Mapping, bland: Mapping,
                 vertices: Optional[Iterable[str]] = None):
        self.player0 = frozenset(player0)
        self.player1 = frozenset(player1)
        self.sink = sink
        self.edges = tuple((u, v) for u, v in edges)
        self.priority = MappingProxyType(dict(priority))
        self.bland = MappingProxyType({tuple(e): int(n) for e, n in bland.items()})
        if vertices is None:
            vertices = sorted(self.player0 | self.player1) + [sink]
        self.vertices = tuple(vertices)
        self.order = {v: i for i, v in enumerate(self.vertices)}
        succ = {v: [] for v in self.vertices}
        for u, v in self.edges:
            if u in succ:
                succ[u].append(v)
        self.succ = {v: tuple(ws) for v, ws in succ.items()}
        self.player0_edges = tuple(sorted((e for e in self.edges if e[0] in self.player0),
                                          key=lambda e: self.bland.get(e, 0)))

    @property
    def t(self) -> int:
        """Base of the valuation order: the number of non-sink vertices."""
        return len(self.player0 | self.player1)

    def pi(self, v):
        return self.priority[v]

    def weight(self, v) -> int:
        p = self.priority[v]
        return 0 if p is BOTTOM else (-self.t) ** p

    def validate(self) -> list:
        """Return the list of violated structural invariants (empty if valid)."""
        problems = []
        if self.player0 & self.player1:
            problems.append("player sets overlap")
        if self.sink in self.player0 | self.player1:
            problems.append("sink listed as a player vertex")
        all_v = self.player0 | self.player1 | {self.sink}
        if set(self.vertices) != all_v or len(self.vertices) != len(all_v):
            problems.append("vertex order does not list every vertex once")
        if len(set(self.edges)) != len(self.edges):
            problems.append("duplicate edge")
        for u, v in self.edges:
            if u not in all_v or v not in all_v:
                problems.append(f"edge ({u},{v}) uses an unknown vertex")
        for v in all_v:
            if not self.succ.get(v):
                problems.append(f"vertex {v} has no outgoing edge")
        if self.succ.get(self.sink) != (self.sink,):
            problems.append("sink self-loop missing")
        for v in all_v:
            if v not in self.priority:
                problems.append(f"vertex {v} has no priority")
            elif (self.priority[v] is BOTTOM) != (v == self.sink):
                problems.append(f"vertex {v}: bottom priority must belong to the sink alone")
            elif v != self.sink and (isinstance(self.priority[v], bool)
                                     or not isinstance(self.priority[v], int)):
                problems.append(f"vertex {v}: priority is not an integer")
        p0_edges = [e for e in self.edges if e[0] in self.player0]
        nums = [self.bland.get(e) for e in p0_edges]
        if set(self.bland) != set(p0_edges) or sorted(n for n in nums if n is not None) != list(
                range(1, len(p0_edges) + 1)):
            problems.append("bland not bijective")
        return problems

    def edge_label(self, e) -> str:
        return f"{e[0]}->{e[1]}"

    def renumbered(self, bland: Mapping) -> "SinkParityGame":
        return SinkParityGame(self.player0, self.player1, self.sink, self.edges,
                              self.priority, bland, self.vertices)

    def with_priorities(self, priority: Mapping) -> "SinkParityGame":
        return SinkParityGame(self.player0, self.player1, self.sink, self.edges,
                              priority, self.bland, self.vertices)


def validate_game(g: SinkParityGame):
    problems = g.validate()
    return "ok" if not problems else problems


class Strategy:
    """Immutable positional player-0 strategy."""

    __slots__ = ("choice", "_key")

    def __init__(self, choice: Mapping):
        self.choice = MappingProxyType(dict(choice))
        self._key = tuple(sorted(self.choice.items()))

    def __getitem__(self, v):
        return self.choice[v]

    def __eq__(self, other):
        return isinstance(other, Strategy) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return "Strategy(" + ", ".join(f"{u}->{w}" for u, w in self._key) + ")"

    def items(self):
        return self._key


def apply_switch(s: Strategy, e) -> Strategy:
    v, w = e
    if v not in s.choice:
        raise ValueError(f"{v} is not a player-0 vertex of this strategy")
    if s.choice[v] == w:
        return s
    d = dict(s.choice)
    d[v] = w
    return Strategy(d)


def check_strategy(g: SinkParityGame, s: Strategy):
    if set(s.choice) != set(g.player0):
        raise ValueError("strategy must choose at every player-0 vertex")
    for v, w in s.choice.items():
        if w not in g.succ[v]:
            raise ValueError(f"strategy picks non-edge {v}->{w}")


def policy_graph(g: SinkParityGame, s: Strategy) -> nx.DiGraph:
    """The graph E_sigma with the sink self-loop dropped."""
    d = nx.DiGraph()
    d.add_nodes_from(g.vertices)
    for v in g.player0:
        d.add_edge(v, s.choice[v])
    for v in g.player1:
        for w in g.succ[v]:
            d.add_edge(v, w)
    if d.has_edge(g.sink, g.sink):
        d.remove_edge(g.sink, g.sink)
    return d


def is_admissible(g: SinkParityGame, s: Strategy) -> bool:
    """True iff every non-sink cycle of E_sigma has an even maximal priority.

    For each odd priority p, a cycle with maximum p exists iff some vertex of
    priority p lies on a cycle of the subgraph of priorities <= p.
    """
    if _acyclic_order(g, s) is not None:
        return True
    d = policy_graph(g, s)
    d.remove_node(g.sink)
    for comp in nx.strongly_connected_components(d):
        if len(comp) == 1 and not any(d.has_edge(v, v) for v in comp):
            continue
        cd = d.subgraph(comp)
        for p in sorted({g.priority[v] for v in comp if g.priority[v] % 2}):
            sub = cd.subgraph([v for v in comp if g.priority[v] <= p])
            for c in nx.strongly_connected_components(sub):
                cyclic = len(c) > 1 or any(sub.has_edge(v, v) for v in c)
                if cyclic and any(g.priority[v] == p for v in c):
                    return False
    return True


@dataclass
class ValuationMap:
    """Exact valuations of every vertex plus the player-1 best response."""

    game: SinkParityGame
    strategy: Strategy
    value: dict                     # vertex -> int, sum of (-t)^p along the play
    counter: dict                   # player-1 vertex -> chosen successor
    _cache: dict = field(default_factory=dict, repr=False)

    def next(self, v):
        if v == self.game.sink:
            return None
        if v in self.game.player0:
            return self.strategy.choice[v]
        return self.counter[v]

    def play(self, v) -> list:
        path = []
        while v != self.game.sink:
            path.append(v)
            v = self.next(v)
            if len(path) > len(self.game.vertices):
                raise EngineError("play does not reach the sink")
        return path

    def multiset(self, v) -> ValuationMultiset:
        if v not in self._cache:
            self._cache[v] = ValuationMultiset(self.game.priority[u] for u in self.play(v))
        return self._cache[v]

    def __getitem__(self, v) -> ValuationMultiset:
        return self.multiset(v)


def _acyclic_order(g: SinkParityGame, s: Strategy):
    """Reverse topological order of E_sigma (minus the sink loop), or None."""
    indeg = {v: 0 for v in g.vertices}
    succ = {}
    for v in g.vertices:
        if v == g.sink:
            succ[v] = ()
        elif v in g.player0:
            succ[v] = (s.choice[v],)
        else:
            succ[v] = g.succ[v]
        for w in succ[v]:
            indeg[w] += 1
    # Kahn from the sources; reversed result processes successors first
    stack = [v for v in reversed(g.vertices) if indeg[v] == 0]
    out = []
    while stack:
        v = stack.pop()
        out.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(w)
    if len(out) != len(g.vertices):
        return None
    out.reverse()
    return out, succ


def valuations(g: SinkParityGame, s: Strategy) -> ValuationMap:
    """Valuations under ``s`` and player 1's shortest-path best response.

    Player 1 minimizes; ties go to the successor earliest in vertex order.
    """
    order = g.order
    value = {g.sink: 0}
    counter = {}
    acyc = _acyclic_order(g, s)
    if acyc is not None:
        seq, succ = acyc
        for v in seq:
            if v == g.sink:
                continue
            if v in g.player0:
                value[v] = g.weight(v) + value[s.choice[v]]
            else:
                best = min(succ[v], key=lambda w: (value[w], order[w]))
                counter[v] = best
                value[v] = g.weight(v) + value[best]
        return ValuationMap(g, s, value, counter)

    # Bellman-Ford rounds; undefined values are absent from ``value``
    vs = [v for v in g.vertices if v != g.sink]
    for _ in range(len(g.vertices) + 1):
        changed = False
        for v in vs:
            if v in g.player0:
                w = s.choice[v]
                if w not in value:
                    continue
                cand, pick = g.weight(v) + value[w], None
            else:
                opts = [w for w in g.succ[v] if w in value]
                if not opts:
                    continue
                pick = min(opts, key=lambda w: (value[w], order[w]))
                cand = g.weight(v) + value[pick]
            if value.get(v) != cand or (pick is not None and counter.get(v) != pick):
                value[v] = cand
                if pick is not None:
                    counter[v] = pick
                changed = True
        if not changed:
            break
    else:
        raise NotAdmissibleError("valuation relaxation did not converge")
    missing = [v for v in vs if v not in value]
    if missing:
        raise NotAdmissibleError(f"valuations undefined at {missing[:5]}")
    vm = ValuationMap(g, s, value, counter)
    for v in vs:
        vm.play(v)  # raises if the best-response play cycles
    return vm


def improving_switches(g: SinkParityGame, s: Strategy, vals: Optional[ValuationMap] = None) -> list:
    """Player-0 edges whose target beats the current choice, by Bland number."""
    if vals is None:
        vals = valuations(g, s)
    value = vals.value
    out = []
    for e in g.player0_edges:
        v, w = e
        if value[w] > value[s.choice[v]]:
            out.append(e)
    return out


def objective(vals: ValuationMap) -> int:
    """Sum of all vertex valuations; strictly increases with each switch."""
    return sum(vals.value.values())


class _ParityContext:
    def __init__(self, snap):
        self._snap = snap
        self.elements = snap.improving
        self.n = len(snap.game.player0_edges)

    def index(self, e):
        return self._snap.game.bland[e]

    def reduced_cost(self, e):
        value = self._snap.vals.value
        return value[e[1]] - value[self._snap.strategy.choice[e[0]]]

    def objective_after(self, e):
        g = self._snap.game
        return objective(valuations(g, apply_switch(self._snap.strategy, e)))


class _ParitySnapshot:
    def __init__(self, game, strategy):
        self.game = game
        self.strategy = strategy
        self.vals = valuations(game, strategy)
        self.improving = improving_switches(game, strategy, self.vals)
        self.objective = objective(self.vals)

    def index(self, e):
        return self.game.bland[e]

    def context(self):
        return _ParityContext(self)


class ParityEngine:
    name = "parity"

    def __init__(self, game: SinkParityGame, checks: bool = True):
        self.game = game
        self.n_elements = len(game.player0_edges)
        self.checks = checks
        self._last = None

    def snapshot(self, s):
        snap = _ParitySnapshot(self.game, s)
        if self.checks:
            if not is_admissible(self.game, s):
                raise NotAdmissibleError("visited a non-admissible strategy")
            if self._last is not None:
                prev, switched = self._last
                for v, x in snap.vals.value.items():
                    if x < prev.vals.value[v]:
                        raise EngineError(f"valuation of {v} decreased")
                if switched is not None and not (
                        snap.vals.value[switched] > prev.vals.value[switched]):
                    raise EngineError(f"switched vertex {switched} did not improve")
            self._last = (snap, None)
        return snap

    def apply(self, s, e):
        if self.checks and self._last is not None:
            self._last = (self._last[0], e[0])
        return apply_switch(s, e)

    def state_key(self, s):
        return state_digest(s.items())

    def label(self, e):
        return self.game.edge_label(e)


def strategy_improvement(g: SinkParityGame, s0: Strategy, rule, cap: int = DEFAULT_CAP,
                         probe=None, checks: bool = True) -> RunTrace:
    """Single-switch strategy improvement driven by ``rule``."""
    check_strategy(g, s0)
    if not is_admissible(g, s0):
        raise NotAdmissibleError("initial strategy is not admissible")
    return run_improvement(ParityEngine(g, checks), s0, rule, cap, probe)


def standard_transformation(g: SinkParityGame) -> SinkParityGame:
    """Make priorities unique while keeping their order and parities.

    While some priority p is shared, the vertex earliest in vertex order keeps
    p and every other vertex with priority >= p moves up by 2.
    """
    pr = {v: p for v, p in g.priority.items()}
    movable = [v for v in g.vertices if v != g.sink]
    while True:
        seen = {}
        dup = None
        for v in movable:
            p = pr[v]
            if p in seen:
                if dup is None or p < dup:
                    dup = p
            else:
                seen[p] = v
        if dup is None:
            break
        keeper = seen[dup]
        for v in movable:
            if v != keeper and pr[v] >= dup:
                pr[v] += 2
    return g.with_priorities(pr)


def all_strategies(g: SinkParityGame, limit: int = 2 ** 12):
    """Every player-0 strategy, in a fixed order; refuses more than ``limit``."""
    import itertools

    p0 = [v for v in g.vertices if v in g.player0]
    total = 1
    for v in p0:
        total *= len(g.succ[v])
    if total > limit:
        raise ValueError(f"{total} strategies exceed the enumeration limit {limit}")
    for combo in itertools.product(*(g.succ[v] for v in p0)):
        yield Strategy(dict(zip(p0, combo)))


def brute_force_optimum(g: SinkParityGame, limit: int = 2 ** 12):
    """Pointwise-best admissible valuations by exhaustive enumeration."""
    best = None
    for s in all_strategies(g, limit):
        if not is_admissible(g, s):
            continue
        val = valuations(g, s).value
        if best is None:
            best = dict(val)
        else:
            for v, x in val.items():
                if x > best[v]:
                    best[v] = x
    if best is None:
        raise ValueError("no admissible strategy")
    return best
