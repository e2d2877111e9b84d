"""Parity-game gadgets: multiplier, controller, filler, delayer, double filler.

All gadgets are applied to a mutable ``GameBuilder`` that keeps the Bland
order as a list of player-0 edges; the public ``gadget_*`` functions wrap
the builder and take/return ``(game, strategy)`` pairs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..ordering import BOTTOM
from ..parity import SinkParityGame, Strategy


class GadgetError(ValueError):
    pass


class GameBuilder:
    """Mutable game under construction with an explicit Bland list."""

    def __init__(self, sink: str = "T"):
        self.sink = sink
        self.p0, self.p1 = set(), set()
        self.order = []            # vertex order, sink excluded
        self.pr = {sink: BOTTOM}
        self.succ = {sink: [sink]}
        self.bland = []            # player-0 edges, lowest Bland number first
        self.init = {}

    @classmethod
    def from_game(cls, g: SinkParityGame, s: Strategy) -> "GameBuilder":
        b = cls(g.sink)
        for v in g.vertices:
            if v == g.sink:
                continue
            b.add_vertex(v, 0 if v in g.player0 else 1, g.priority[v])
        for u, v in g.edges:
            if u != g.sink:
                b.succ[u].append(v)
        b.bland = list(g.player0_edges)
        b.init = dict(s.choice)
        return b

    # -- vertices and edges
    def add_vertex(self, v, player: int, priority, before=None, after=None):
        if v in self.pr:
            raise GadgetError(f"vertex {v} already exists")
        (self.p0 if player == 0 else self.p1).add(v)
        self.pr[v] = priority
        self.succ[v] = []
        if before is not None:
            self.order.insert(self.order.index(before), v)
        elif after is not None:
            self.order.insert(self.order.index(after) + 1, v)
        else:
            self.order.append(v)

    def add_edge(self, u, v):
        if v in self.succ[u]:
            raise GadgetError(f"edge {u}->{v} already exists")
        self.succ[u].append(v)

    def remove_edge(self, u, v):
        self.succ[u].remove(v)
        if (u, v) in self.bland:
            self.bland.remove((u, v))

    def make_player1(self, v):
        self.p0.discard(v)
        self.p1.add(v)
        self.init.pop(v, None)

    def edges(self):
        out = [(u, w) for u in self.order for w in self.succ[u]]
        return out + [(self.sink, self.sink)]

    def p0_edge_count(self) -> int:
        return sum(len(self.succ[v]) for v in self.p0)

    def build(self):
        listed = set(self.bland)
        p0_edges = [(u, w) for u in self.order if u in self.p0 for w in self.succ[u]]
        if len(listed) != len(self.bland) or listed != set(p0_edges):
            raise GadgetError("Bland list does not match the player-0 edges")
        bland = {e: i + 1 for i, e in enumerate(self.bland)}
        g = SinkParityGame(self.p0, self.p1, self.sink, self.edges(), self.pr, bland,
                           self.order + [self.sink])
        return g, Strategy({v: self.init[v] for v in self.order if v in self.p0})


def reachable_priorities(b: GameBuilder, x) -> set:
    seen, stack = {x}, [x]
    while stack:
        u = stack.pop()
        for w in b.succ[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return {b.pr[v] for v in seen if v != b.sink}


# ---------------------------------------------------------------- gadgets

def add_multiplier(b: GameBuilder, edge, copies: int, tag: str = "") -> list:
    """Replace ``edge`` by ``copies`` two-hop routes through priority-0
    player-1 vertices.  Returns the new player-0 edges in Bland order."""
    s1, s2 = edge
    if s1 not in b.p0 or s2 not in b.succ[s1]:
        raise GadgetError(f"{s1}->{s2} is not a player-0 edge")
    if copies < 1:
        raise GadgetError("copies must be >= 1")
    slot = b.bland.index(edge)
    b.succ[s1].remove(s2)
    b.bland.pop(slot)
    new = []
    prev = None
    for j in range(1, copies + 1):
        h = f"mul[{s1}->{s2}#{j}{tag}]"
        # later copies go earlier in vertex order, so once priorities are
        # made unique the copy with the lowest Bland number is the best one
        b.add_vertex(h, 1, 0, before=prev)
        prev = h
        b.add_edge(h, s2)
        b.add_edge(s1, h)
        new.append((s1, h))
    b.bland[slot:slot] = new
    if b.init.get(s1) == s2:
        b.init[s1] = new[0][1]
    return new


@dataclass
class ControllerEdges:
    original: tuple
    a: tuple
    a_prime: tuple


def add_controller(b: GameBuilder, edge, strict: bool = True, append: bool = True) -> ControllerEdges:
    """Attach the controller widget to player-0 edge (x, y).

    A fresh player-0 vertex c gets edge a (initial) into a player-1 chain
    z (priority of x) -> w (priority 1) -> y, and edge a' back to x.  With
    ``append`` the two new edges get the highest Bland numbers.  ``strict``
    enforces that every priority reachable from x is at least 2.
    """
    x, y = edge
    if x not in b.p0 or y not in b.succ[x]:
        raise GadgetError(f"{x}->{y} is not a player-0 edge")
    if strict:
        low = [p for p in reachable_priorities(b, x) if p < 2]
        if low:
            raise GadgetError(f"controller precondition: priority {min(low)} reachable from {x}")
    tag = f"{x}->{y}"
    c, z, w = f"ctl[{tag}]", f"ctlz[{tag}]", f"ctlw[{tag}]"
    px = b.pr[x]
    # unique-priority rewrite keeps vertex order inside ties, so place z
    # below x for even priorities and above it for odd ones
    if px % 2 == 0:
        b.add_vertex(z, 1, px, before=x)
    else:
        b.add_vertex(z, 1, px, after=x)
    b.add_vertex(w, 1, 1, after=z)
    # c has no incoming edges, so its own priority never reaches another valuation
    b.add_vertex(c, 0, 2, after=w)
    b.add_edge(z, w)
    b.add_edge(w, y)
    b.add_edge(c, z)
    b.add_edge(c, x)
    b.init[c] = z
    out = ControllerEdges(edge, (c, z), (c, x))
    if append:
        b.bland += [out.a, out.a_prime]
    return out


@dataclass
class FillerEdges:
    x_sink: tuple
    y_sink: tuple
    improving: tuple

    def all(self):
        return [self.x_sink, self.y_sink, self.improving]


def add_filler(b: GameBuilder, name: str, position=None) -> FillerEdges:
    """Two player-0 vertices X (priority 2) and Y (priority 3), both moving
    to the sink, plus the single improving edge Y -> X."""
    X, Y = f"{name}.X", f"{name}.Y"
    b.add_vertex(X, 0, 2)
    b.add_vertex(Y, 0, 3)
    b.add_edge(X, b.sink)
    b.add_edge(Y, b.sink)
    b.add_edge(Y, X)
    b.init[X] = b.sink
    b.init[Y] = b.sink
    out = FillerEdges((X, b.sink), (Y, b.sink), (Y, X))
    if position is not None:
        b.bland[position:position] = out.all()
    return out


@dataclass
class DelayerEdges:
    vertex: str
    k: int
    z: list
    left: str
    right: str
    l: list
    r: list

    def all(self):
        return list(self.l) + list(self.r)

    def drain(self, toward: str) -> list:
        return list(self.l if toward == "x" else self.r)


def add_delayer(b: GameBuilder, v, k: int, x, y, pending=None, replace_slot: bool = True) -> DelayerEdges:
    """Replace the two edges of player-0 vertex ``v`` by the delayer chain.

    z_1..z_{k+1} have priority 1; l_0: z_1 -> left exit, l_i: z_{i+1} -> z_i,
    r_0: z_{k+1} -> right exit, r_i: z_{k+1-i} -> z_{k+2-i}.  The exits have
    priority 2; the left one leads to x or back to z_{k+1}, the right one to
    y or back to z_1.  ``v`` becomes a player-1 vertex with the single edge
    v -> z_1.  The initial state is all-l if v chose x, all-r if it chose y;
    ``pending=(toward, u)`` instead sets a drain toward x ("x") or y ("y")
    with u switches left.
    """
    if v not in b.p0 or set(b.succ[v]) != {x, y} or x == y:
        raise GadgetError(f"{v} must be a player-0 vertex with successors {x} and {y}")
    if k < 1:
        raise GadgetError("k must be >= 1")
    chose = b.init.get(v)
    slot = min(b.bland.index((v, x)), b.bland.index((v, y)))
    for w in (x, y):
        b.remove_edge(v, w)
    b.make_player1(v)
    z = [None] + [f"{v}.z{i}" for i in range(1, k + 2)]
    left, right = f"{v}.L", f"{v}.R"
    anchor = v
    for i in range(1, k + 2):
        b.add_vertex(z[i], 0, 1, after=anchor)
        anchor = z[i]
    b.add_vertex(left, 1, 2, after=anchor)
    b.add_vertex(right, 1, 2, after=left)
    b.add_edge(v, z[1])
    l = [(z[1], left)] + [(z[i + 1], z[i]) for i in range(1, k + 1)]
    r = [(z[k + 1], right)] + [(z[k + 1 - i], z[k + 2 - i]) for i in range(1, k + 1)]
    for e in l + r:
        b.add_edge(*e)
    b.add_edge(left, z[k + 1])
    b.add_edge(left, x)
    b.add_edge(right, z[1])
    b.add_edge(right, y)
    out = DelayerEdges(v, k, z, left, right, l, r)
    if pending is None:
        toward, u = ("x", 0) if chose == x else ("y", 0)
    else:
        toward, u = pending
        if toward not in ("x", "y") or not 0 <= u <= k + 1:
            raise GadgetError("pending must be ('x'|'y', 0..k+1)")
    done, rest = (l, r) if toward == "x" else (r, l)
    # the drain switches done[0], done[1], ...; the first k+1-u are taken
    for e in done[:k + 1 - u]:
        b.init[e[0]] = e[1]
    for e in rest[:u]:
        b.init[e[0]] = e[1]
    if replace_slot:
        b.bland[slot:slot] = out.all()
    return out


@dataclass
class DoubleFillerEdges:
    a1: tuple
    a2: tuple
    a3: tuple
    b1: tuple
    b2: tuple
    b3: tuple


def add_double_filler(b: GameBuilder, name: str) -> DoubleFillerEdges:
    """Widget with player-0 vertices x (priority 2), y and w (priority 1)
    and player-1 vertex z (priority 3).  Initially y -> sink, x -> z and
    w -> z; a1 = x -> sink and b2 = w -> x are improving, and switching a1
    makes a2 = y -> x improving instead.  Bland numbers are left to the
    caller."""
    x, y, z, w = (f"{name}.{s}" for s in "xyzw")
    b.add_vertex(y, 0, 1)
    b.add_vertex(w, 0, 1)
    b.add_vertex(x, 0, 2)
    b.add_vertex(z, 1, 3)
    T = b.sink
    out = DoubleFillerEdges(a1=(x, T), a2=(y, x), a3=(y, T), b1=(x, z), b2=(w, x), b3=(w, z))
    for e in (out.a1, out.a2, out.a3, out.b1, out.b2, out.b3):
        b.add_edge(*e)
    b.add_edge(z, T)
    b.init.update({y: T, x: z, w: z})
    return out


# ------------------------------------------------------- public wrappers

def gadget_multiplier(game, strategy, edge, copies: int):
    b = GameBuilder.from_game(game, strategy)
    add_multiplier(b, tuple(edge), copies)
    return b.build()


def gadget_controller(game, strategy, edge, strict: bool = True):
    b = GameBuilder.from_game(game, strategy)
    add_controller(b, tuple(edge), strict=strict)
    return b.build()


def gadget_filler(game, strategy, bland_position: int, name: str = None):
    """Insert a filler whose three edges take Bland numbers starting at
    ``bland_position`` (1-based); later numbers shift up by 3."""
    b = GameBuilder.from_game(game, strategy)
    if not 1 <= bland_position <= len(b.bland) + 1:
        raise GadgetError("bland_position out of range")
    name = name or f"fill{len(b.order)}"
    add_filler(b, name, bland_position - 1)
    return b.build()


def gadget_delayer(game, strategy, vertex, k: int, x, y, pending=None):
    b = GameBuilder.from_game(game, strategy)
    add_delayer(b, vertex, k, x, y, pending)
    return b.build()


def gadget_double_filler(game, strategy, a_position: int, b_position: int, name: str = None):
    """Insert a double filler; a1..a3 take consecutive Bland numbers from
    ``a_position`` and b1..b3 from ``b_position`` (1-based, final numbering)."""
    bld = GameBuilder.from_game(game, strategy)
    total = len(bld.bland) + 6
    ra = range(a_position, a_position + 3)
    rb = range(b_position, b_position + 3)
    if min(a_position, b_position) < 1 or max(ra[-1], rb[-1]) > total or set(ra) & set(rb):
        raise GadgetError("double filler positions overlap or fall outside 1..N+6")
    name = name or f"dfill{len(bld.order)}"
    d = add_double_filler(bld, name)
    old = iter(bld.bland)
    fixed = {a_position + i: e for i, e in enumerate((d.a1, d.a2, d.a3))}
    fixed.update({b_position + i: e for i, e in enumerate((d.b1, d.b2, d.b3))})
    bld.bland = [fixed[i] if i in fixed else next(old) for i in range(1, total + 1)]
    return bld.build()
