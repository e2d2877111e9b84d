"""Neighbor rankings and pivot rules.

A pivot rule has two halves.  The information half is a tuple of neighbor
rankings, each turning the improving elements of the current state into a
total preorder.  The decision half sees only those preorders, expressed as
tiers of positions, plus the improving count ``k``, the element count ``n``
and a memory state ``h``.  Raw element ids never reach the decision
function, so two situations with matching rank tuples get matching choices.

Positions enumerate the improving elements in ascending global index.  Tiers
are listed least preferred first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .trace import RuleContractError


# ---------------------------------------------------------------- preorders

@dataclass(frozen=True)
class TotalPreorder:
    """Tiers of improving elements, least preferred first."""

    tiers: tuple

    @classmethod
    def from_keys(cls, keyed: Iterable) -> "TotalPreorder":
        """Build from (element, key) pairs; a larger key is more preferred."""
        groups = {}
        for e, key in keyed:
            groups.setdefault(key, []).append(e)
        return cls(tuple(frozenset(groups[k]) for k in sorted(groups)))

    def flatten(self, order_key=None) -> list:
        out = []
        for tier in self.tiers:
            out.extend(sorted(tier, key=order_key))
        return out

    def top(self) -> frozenset:
        return self.tiers[-1]

    def __len__(self) -> int:
        return sum(len(t) for t in self.tiers)


@dataclass(frozen=True)
class NeighborRanking:
    """A named preference key; ``key(ctx, e)`` larger means more preferred."""

    name: str
    key: Callable

    def preorder(self, ctx) -> TotalPreorder:
        if not ctx.elements:
            raise ValueError("ranking needs a nonempty improving set")
        return TotalPreorder.from_keys((e, self.key(ctx, e)) for e in ctx.elements)


def _bland_key(ctx, e):
    return -ctx.index(e)


def _dantzig_key(ctx, e):
    return ctx.reduced_cost(e)


def _largest_increase_key(ctx, e):
    return ctx.objective_after(e)


def _steepest_key(ctx, e):
    # (c.d)^2 / |d|^2 with the sign of c.d; monotone in c.d / |d|
    delta = ctx.direction(e)
    norm2 = sum(Fraction(x) * x for x in delta)
    if norm2 == 0:
        raise ValueError("zero-length edge direction")
    gain = sum(Fraction(ci) * di for ci, di in zip(ctx.objective_vector, delta))
    sign = (gain > 0) - (gain < 0)
    return sign * gain * gain / norm2


BLAND = NeighborRanking("bland", _bland_key)
DANTZIG = NeighborRanking("dantzig", _dantzig_key)
LARGEST_INCREASE = NeighborRanking("largest-increase", _largest_increase_key)
STEEPEST_EDGE = NeighborRanking("steepest-edge", _steepest_key)


def shadow_vertex_ranking(d: Sequence) -> NeighborRanking:
    """Prefer edges losing the least of the fixed auxiliary objective ``d``
    per unit of gain in the true objective."""
    d = tuple(Fraction(x) for x in d)

    def key(ctx, e):
        delta = ctx.direction(e)
        gain = sum(Fraction(ci) * di for ci, di in zip(ctx.objective_vector, delta))
        if gain == 0:
            raise ValueError("zero-gain edge in shadow-vertex ranking")
        return sum(di * xi for di, xi in zip(d, delta)) / gain

    return NeighborRanking("shadow-vertex", key)


class _IndexContext:
    def __init__(self, indices):
        self.elements = sorted(indices)

    def index(self, e):
        return e


def rank_bland(ctx_or_indices) -> TotalPreorder:
    """Strict order, smallest global index in the most preferred tier."""
    ctx = ctx_or_indices
    if not hasattr(ctx, "elements"):
        ctx = _IndexContext(list(ctx_or_indices))
    return BLAND.preorder(ctx)


def rank_dantzig(ctx) -> TotalPreorder:
    return DANTZIG.preorder(ctx)


def rank_largest_increase(ctx) -> TotalPreorder:
    return LARGEST_INCREASE.preorder(ctx)


def rank_steepest_edge(ctx) -> TotalPreorder:
    return STEEPEST_EDGE.preorder(ctx)


def rank_shadow_vertex(ctx, d) -> TotalPreorder:
    return shadow_vertex_ranking(d).preorder(ctx)


RANKINGS = {r.name: r for r in (BLAND, DANTZIG, LARGEST_INCREASE, STEEPEST_EDGE)}


def rankings_agree(preorders: Sequence[TotalPreorder]) -> bool:
    if not preorders:
        raise ValueError("need at least one preorder")
    first = preorders[0].tiers
    return all(p.tiers == first for p in preorders[1:])


# ------------------------------------------------------------------- rules

@dataclass
class Choice:
    element: object
    memory: int
    tiers: dict
    flags: tuple = ()


def _positional(pre: TotalPreorder, position_of: dict) -> tuple:
    return tuple(tuple(sorted(position_of[e] for e in tier)) for tier in pre.tiers)


@dataclass(frozen=True)
class PivotRule:
    """Information function (``rankings``) plus decision function.

    ``decision(views, k, n, h)`` receives one tuple of position tiers per
    ranking and returns ``(position, next_memory, flags)``.
    """

    name: str
    rankings: tuple
    decision: Callable
    memory_bound: int = 1
    initial_memory: int = 1

    def choose(self, ctx, h: int) -> Choice:
        elements = list(ctx.elements)
        k = len(elements)
        if k == 0:
            raise ValueError("no improving element to choose from")
        position_of = {e: i for i, e in enumerate(elements)}
        views = tuple(_positional(r.preorder(ctx), position_of) for r in self.rankings)
        pos, h2, flags = self.decision(views, k, ctx.n, h)
        if not isinstance(pos, int) or not 0 <= pos < k:
            raise RuleContractError("rule returned non-improving element")
        if not 1 <= h2 <= self.memory_bound:
            raise RuleContractError(f"memory state {h2} outside 1..{self.memory_bound}")
        tiers = {r.name: [list(t) for t in v] for r, v in zip(self.rankings, views)}
        return Choice(elements[pos], h2, tiers, tuple(flags))


def greedy_rule(ranking: NeighborRanking) -> PivotRule:
    """Pick from the most preferred tier; ties go to the smallest position."""

    def decision(views, k, n, h):
        return min(views[0][-1]), h, ()

    return PivotRule(f"greedy-{ranking.name}", (ranking,), decision)


@dataclass(frozen=True)
class IndexSelector:
    """``select(k, n, h) -> (rank, h')`` with 1 <= rank <= k."""

    select: Callable
    memory_bound: int = 1
    name: str = "selector"

    def __call__(self, k: int, n: int, h: int):
        return self.select(k, n, h)


def constant_selector(rank: int = 1) -> IndexSelector:
    return IndexSelector(lambda k, n, h: (rank, 1), 1, f"constant-{rank}")


def table_selector(transitions: dict, memory: int, name: str = "table") -> IndexSelector:
    """Selector from a finite table keyed by (k, n, h); ``None`` in k or n
    acts as a wildcard."""
    table = dict(transitions)

    def select(k, n, h):
        for key in ((k, n, h), (k, None, h), (None, n, h), (None, None, h)):
            if key in table:
                return table[key]
        raise RuleContractError(f"selector has no transition for k={k}, n={n}, h={h}")

    return IndexSelector(select, memory, name)


def cyclic_selector(ranks: Sequence, reentry: int = 1, name: str = "cyclic") -> IndexSelector:
    """Walk through ``ranks`` (one memory state each), then jump back to
    memory state ``reentry``.  Ranks may be callables of k or ints, which
    are capped at k so the selector is total."""
    ranks = list(ranks)
    L = len(ranks)

    def select(k, n, h):
        r = ranks[h - 1]
        r = r(k) if callable(r) else min(r, k)
        return r, (h + 1 if h < L else reentry)

    return IndexSelector(select, L, name)


def index_based_rule(p: IndexSelector) -> PivotRule:
    """Rule over the Bland ranking alone: pick the rank-th smallest index."""

    def decision(views, k, n, h):
        rank, h2 = p(k, n, h)
        if not isinstance(rank, int) or not 1 <= rank <= k:
            raise RuleContractError(f"selector returned rank {rank} outside 1..{k}")
        ascending = [t[0] for t in reversed(views[0])]
        return ascending[rank - 1], h2, ()

    return PivotRule(f"index-{p.name}", (BLAND,), decision, p.memory_bound)


@dataclass(frozen=True)
class RankPicker:
    f: Callable
    name: str = "f"

    def __call__(self, k: int) -> int:
        return self.f(k)


PICK_ONE = RankPicker(lambda k: 1, "one")
PICK_LAST = RankPicker(lambda k: k, "identity")
PICK_SQRT_CEIL = RankPicker(lambda k: math.isqrt(k - 1) + 1 if k > 0 else 0, "sqrt-ceil")
PICKERS = {p.name: p for p in (PICK_ONE, PICK_LAST, PICK_SQRT_CEIL)}


def f_rule(f: RankPicker) -> PivotRule:
    """Pick the f(k)-th least preferred element of the common order of the
    Bland, Dantzig and largest-increase rankings.  When the three disagree,
    use the Bland order instead and flag the step."""

    def decision(views, k, n, h):
        r = f(k)
        if not isinstance(r, int) or not 1 <= r <= k:
            raise RuleContractError(f"rank picker returned {r} outside 1..{k}")
        flags = ()
        if not all(v == views[0] for v in views[1:]):
            flags = ("rankings-diverged",)
        order = [pos for tier in views[0] for pos in tier]
        return order[r - 1], h, flags

    return PivotRule(f"f-{f.name}", (BLAND, DANTZIG, LARGEST_INCREASE), decision)


def index_rule_from_trace(trace, memory_bound: Optional[int] = None) -> IndexSelector:
    """Selector that replays the Bland ranks chosen along ``trace``."""
    ranks = [s.chosen_rank for s in trace.steps]
    states = max(1, len(ranks))
    if memory_bound is not None and states > memory_bound:
        raise ValueError(f"trace needs {states} memory states, bound is {memory_bound}")
    if not ranks:
        return IndexSelector(lambda k, n, h: (1, 1), 1, "replay-empty")

    def select(k, n, h):
        return ranks[h - 1], min(h + 1, states)

    return IndexSelector(select, states, f"replay-{len(ranks)}")


# ----------------------------------------------------- rule config language

def _picker_from_spec(spec: dict) -> RankPicker:
    table = {int(k): int(v) for k, v in spec.get("table", {}).items()}
    default = spec.get("default", "one")
    if default not in PICKERS:
        raise ValueError(f"unknown rank picker default {default!r}")
    base = PICKERS[default]
    if not table:
        return base
    name = "table-" + base.name
    return RankPicker(lambda k: table.get(k, base(k)), name)


def rule_from_spec(spec: dict) -> PivotRule:
    """Parse the rule mini-language used in experiment configs."""
    kind = spec.get("kind")
    if kind == "greedy":
        name = spec.get("ranking", "bland")
        if name == "shadow-vertex":
            return greedy_rule(shadow_vertex_ranking(spec["d"]))
        if name not in RANKINGS:
            raise ValueError(f"unknown ranking {name!r}")
        return greedy_rule(RANKINGS[name])
    if kind == "f":
        return f_rule(_picker_from_spec(spec))
    if kind in ("index-selector", "cyclic", "constant"):
        return index_based_rule(selector_from_spec(spec))
    raise ValueError(f"unknown rule kind {kind!r}")


def _rank_term(r):
    if r == "k":
        return lambda k: k
    return int(r)


def selector_from_spec(spec: dict) -> IndexSelector:
    """IndexSelector for the "index-selector", "cyclic" and "constant" kinds.

    Cyclic ranks may use the string "k" for the last (largest) rank.
    """
    kind = spec.get("kind")
    if kind == "constant":
        return constant_selector(int(spec.get("rank", 1)))
    if kind == "index-selector":
        memory = int(spec.get("memory", 1))
        table = {}
        for row in spec.get("transitions", []):
            k, n, h, rank, h2 = row
            k = None if k in (None, "*") else int(k)
            n = None if n in (None, "*") else int(n)
            table[(k, n, int(h))] = (int(rank), int(h2))
        return table_selector(table, memory, spec.get("name", "table"))
    if kind == "cyclic":
        ranks = [_rank_term(r) for r in spec["ranks"]]
        label = "-".join(str(r) for r in spec["ranks"])
        return cyclic_selector(ranks, int(spec.get("reentry", 1)),
                               spec.get("name", f"cyclic[{label}]"))
    raise ValueError(f"rule kind {kind!r} is not an index selector")


def rule_label(spec: dict) -> str:
    return rule_from_spec(spec).name
