"""Parity games on which a given index-selector rule needs many iterations.

The selector is first run at a fixed improving count m/3 to get its output
cycle.  The cycle is decomposed into a clustered or dispersed certificate
over the rank slots 1..m/3, and every slot range becomes a block of
player-0 edges whose improving moves occupy exactly those ranks:

* clustered interval: a binary counter with multiplied edges, so any pick
  among the first (or last) few ranks of the block is a Bland step;
* dispersed main interval: one binary counter with delayers, driven by the
  single rank the selector uses there;
* dispersed side interval: a decoy wired to a_1/b_1 that absorbs the
  selector's other outputs once per counter step;
* uncovered slot: a filler.

Every counter and decoy edge gets a controller, which keeps the number of
improving moves at m/3.  One-time prefix outputs of the selector are
absorbed by double fillers.
"""
from __future__ import annotations

from ..parity import improving_switches, standard_transformation, valuations
from ..rules import IndexSelector
from .counter import gen_counter_game
from .decompose import ClusteredCertificate, cycle_sequence, decompose
from .gadgets import (GameBuilder, add_controller, add_delayer, add_double_filler, add_filler,
                      add_multiplier)


class ConstructionError(ValueError):
    pass


def iteration_bound(m_i: int, ell_i: int) -> float:
    return 2.0 ** (m_i / (12 * ell_i) - 1)


def meets_iteration_bound(iterations: int, m_i: int, ell_i: int) -> bool:
    """Exact test of iterations >= 2^(m_i/(12 ell_i) - 1)."""
    e = 12 * ell_i
    return iterations ** e >= 2 ** (m_i - e)


def _add_counter(b: GameBuilder, M: int, prefix: str) -> list:
    g, s0 = gen_counter_game(M, prefix=prefix, sink=b.sink)
    for v in g.vertices:
        if v != g.sink:
            b.add_vertex(v, 0 if v in g.player0 else 1, g.priority[v])
    for u, v in g.edges:
        if u != g.sink:
            b.add_edge(u, v)
    b.init.update(s0.choice)
    edges = list(g.player0_edges)
    b.bland += edges
    return edges


class _Layout:
    def __init__(self, n):
        self.n = n
        self.b = GameBuilder()
        self.segments = {}          # first slot -> Bland segment
        self.bookkeeping = set()    # edges whose switch ends the counting phase
        self.controllers = []
        self.fillers = []

    def open(self):
        return len(self.b.bland)

    def close(self, slot, start, width):
        seg = self.b.bland[start:]
        del self.b.bland[start:]
        if len(seg) != 3 * width:
            raise ConstructionError(f"block at slot {slot} has {len(seg)} edges, expected {3 * width}")
        self.segments[slot] = seg

    def control(self, edges):
        out = [add_controller(self.b, e, strict=False) for e in edges]
        self.controllers += out
        self.bookkeeping.update(c.a_prime for c in out)
        return out

    def fill(self, name, count):
        out = []
        for j in range(count):
            f = add_filler(self.b, f"{name}{j}", position=len(self.b.bland))
            self.bookkeeping.add(f.improving)
            out.append(f)
        self.fillers += out
        return out


def _clustered_block(lay, j, p, q, K, d, M):
    start = lay.open()
    if not K:
        lay.fill(f"B{j}.f", q + 1)
        lay.close(p, start, q + 1)
        return None
    copies = (q + 1) // d
    near_start = d * (max(K) - p + 1) <= q + 1
    edges = _add_counter(lay.b, M, f"B{j}.")
    for e in edges:
        add_multiplier(lay.b, e, copies)
    counter = lay.b.bland[start:]
    lay.control(counter)
    lay.fill(f"B{j}.f", q + 1 - len(counter))
    if not near_start:
        lay.b.bland[start:] = lay.b.bland[start:][::-1]
    lay.close(p, start, q + 1)
    return {"slots": [p, p + q], "copies": copies, "reversed": not near_start,
            "counter_edges": len(counter)}


def _main_block(lay, psi, xi, K, Q, M):
    start = lay.open()
    _add_counter(lay.b, M, "C.")
    if Q > 1:
        for i in range(M, 0, -1):
            y = lay.b.sink if i == M else f"C.a{i + 1}"
            add_delayer(lay.b, f"C.a{i}", Q - 1, f"C.b{i + 1}", y)
    counter = lay.b.bland[start:]
    lay.control(counter)
    lay.fill("C.f", xi + 1 - len(counter))
    rev = K == psi + xi and xi > 0
    if rev:
        lay.b.bland[start:] = lay.b.bland[start:][::-1]
    lay.close(psi, start, xi + 1)
    return {"slots": [psi, psi + xi], "Q": Q, "reversed": rev, "counter_edges": len(counter)}


def _decoy_block(lay, j, p, q, cyc, phi):
    b = lay.b
    lam = len(cyc)
    inside = lambda c: p <= cyc[c - 1] <= p + q
    order = list(range(phi + 1, lam + 1)) + list(range(1, phi + 1))
    h = [cyc[c - 1] for c in order if inside(c)]
    Qj = len(h)
    u = sum(1 for c in range(1, phi) if inside(c))
    start = lay.open()
    if Qj == 0:
        lay.fill(f"D{j}.f", q + 1)
        lay.close(p, start, q + 1)
        return None
    a1, b1 = "C.a1", "C.b1"
    v = f"D{j}.v"
    b.add_vertex(v, 0, 2)
    b.add_edge(v, b1)
    b.add_edge(v, a1)
    b.bland += [(v, b1), (v, a1)]
    if Qj == 1:
        b.init[v] = a1 if u == 1 else b1
        target = {(v, b1): h[0], (v, a1): h[0]}
        drain = [(v, b1), (v, a1)]
    else:
        b.init[v] = b1
        dl = add_delayer(b, v, Qj - 1, b1, a1, pending=("x", u))
        target = {}
        for s in range(Qj):
            target[dl.l[s]] = h[s]
            target[dl.r[s]] = h[s]
        drain = dl.all()
    ctl = {c.original: c for c in lay.control(drain)}
    fills = lay.fill(f"D{j}.f", q + 1 - 2 * Qj)
    # static improving moves of the block; each drain edge is placed so that
    # exactly (target rank - 1) of them, other than its own a', precede it
    static = [ctl[e].a_prime for e in drain] + [f.improving for f in fills]
    gaps = {g: [] for g in range(len(static) + 1)}
    for e in drain:
        rho = target[e] - p + 1
        count, g = 0, 0
        while count < rho - 1:
            if static[g] != ctl[e].a_prime:
                count += 1
            g += 1
        gaps[g].append(e)
    seg = []
    for g in range(len(static) + 1):
        seg += gaps[g]
        if g < len(static):
            seg.append(static[g])
    seg += [ctl[e].a for e in drain]
    for f in fills:
        seg += [f.x_sink, f.y_sink]
    if sorted(seg) != sorted(b.bland[start:]):
        raise ConstructionError("decoy block reordering lost an edge")
    b.bland[start:] = seg
    lay.close(p, start, q + 1)
    return {"slots": [p, p + q], "Q": Qj, "pending": u, "targets": h}


def build_adversarial_parity(p: IndexSelector, m_i: int, ell_i: int,
                             unique_priorities: bool = True):
    """Return (game, sigma_0, info) with exactly m_i player-0 edges.

    ``info["bookkeeping"]`` lists the edges whose first switch ends the
    counting phase (controller back edges and filler/double-filler moves).
    """
    if m_i % 3:
        raise ConstructionError("m_i must be divisible by 3")
    if ell_i < 1 or m_i < 12 * ell_i:
        raise ConstructionError(f"need m_i >= 12*ell_i (m_i={m_i}, ell_i={ell_i})")
    if p.memory_bound > ell_i:
        raise ConstructionError(f"selector uses {p.memory_bound} memory states, budget is {ell_i}")
    n = m_i // 3
    cs = cycle_sequence(p, m_i)
    cyc = list(cs.cycle)
    cert = decompose(cyc, n, ell_i)
    d = n // (2 * ell_i)
    M = d // 2
    lay = _Layout(n)
    blocks = []
    covered = set()
    if isinstance(cert, ClusteredCertificate):
        case = "clustered"
        for j, (pp, q) in enumerate(cert.intervals, 1):
            K = [g for g in cyc if pp <= g <= pp + q]
            blocks.append(_clustered_block(lay, j, pp, q, K, d, M))
            covered.update(range(pp, pp + q + 1))
    else:
        case = "dispersed"
        psi, xi = cert.psi, cert.xi
        K = next(g for g in cyc if psi <= g <= psi + xi)
        Q = sum(1 for g in cyc if g == K)
        blocks.append(_main_block(lay, psi, xi, K, Q, M))
        covered.update(range(psi, psi + xi + 1))
        phi = max(c for c in range(1, len(cyc) + 1) if cyc[c - 1] == K)
        for j, (pp, q) in enumerate(cert.intervals, 1):
            blocks.append(_decoy_block(lay, j, pp, q, cyc, phi))
            covered.update(range(pp, pp + q + 1))
    free = [s for s in range(1, n + 1) if s not in covered]
    prefix = list(cs.prefix)
    if 2 * len(prefix) > len(free):
        raise ConstructionError("not enough free slots for the prefix widgets")
    b = lay.b
    dfs = []
    for j in range(1, len(prefix) + 1):
        df = add_double_filler(b, f"DF{j}")
        sa, sb = free.pop(), free.pop()
        lay.segments[sa] = [df.a2, df.a3, df.b1]
        lay.segments[sb] = [df.b2, df.b3]
        lay.bookkeeping.update((df.a2, df.b2))
        dfs.append(df)
    for s in free:
        start = lay.open()
        lay.fill(f"F{s}.", 1)
        lay.close(s, start, 1)
    b.bland = [e for s in sorted(lay.segments) for e in lay.segments[s]] + [df.a1 for df in dfs]

    g0, s0 = b.build()
    vals = valuations(g0, s0)
    I0 = improving_switches(g0, s0, vals)
    if len(I0) != n:
        raise ConstructionError(f"initial improving count {len(I0)} != {n}")
    if case == "dispersed" and not vals.value["C.b1"] > vals.value["C.a1"]:
        raise ConstructionError("initial valuation of b_1 does not beat a_1")
    # place a1 of each double filler so it is the prefix output's rank
    a1s = [df.a1 for df in dfs]
    base = [e for e in I0 if e not in set(a1s)]
    for j in range(len(dfs), 0, -1):
        b.bland.remove(a1s[j - 1])
        live = set(base) | {dfs[i].a2 for i in range(j - 1)} | set(a1s[j:])
        E = [e for e in b.bland if e in live]
        r = prefix[j - 1]
        if r <= len(E):
            b.bland.insert(b.bland.index(E[r - 1]), a1s[j - 1])
        else:
            b.bland.insert(b.bland.index(E[-1]) + 1, a1s[j - 1])
    g, s0 = b.build()
    if unique_priorities:
        g = standard_transformation(g)
    problems = g.validate()
    if problems:
        raise ConstructionError(f"generated game is invalid: {problems[:3]}")
    if len(g.player0_edges) != m_i:
        raise ConstructionError(f"{len(g.player0_edges)} player-0 edges, expected {m_i}")
    if len(improving_switches(g, s0)) != n:
        raise ConstructionError("improving count at sigma_0 differs from m_i/3")
    info = {
        "family": "adversarial-parity", "m_i": m_i, "ell_i": ell_i, "selector": p.name,
        "improving_target": n, "case": case, "certificate": cert.to_dict(),
        "cycle": cs.to_dict(), "d": d, "M": M, "blocks": [x for x in blocks if x],
        "prefix_widgets": len(dfs), "unique_priorities": unique_priorities,
        "bound": iteration_bound(m_i, ell_i),
        "expected_phase": len(prefix) + (2 ** M - 1) * (blocks[0]["Q"] if case == "dispersed" else 1),
        "bookkeeping": sorted(lay.bookkeeping),
    }
    return g, s0, info


def counting_phase(trace, info) -> int:
    """Number of steps before the first bookkeeping switch."""
    book = {f"{u}->{v}" for u, v in info["bookkeeping"]}
    for i, st in enumerate(trace.steps):
        if st.chosen_label in book:
            return i
    return trace.iterations


def check_adversarial_run(trace, info) -> dict:
    """Counting-phase report for a run of the selector's rule on the game.

    ``placement_ok`` is the post-hoc check that the planned ranks were hit:
    a mis-ranked drain or prefix move would hand the selector a bookkeeping
    edge and end the phase before ``expected_phase``.
    """
    phase = counting_phase(trace, info)
    counts = [len(st.improving) for st in trace.steps[:phase]]
    target = info["improving_target"]
    off = next((i + 1 for i, c in enumerate(counts) if c != target), None)
    m_i, ell_i = info["m_i"], info["ell_i"]
    return {
        "iterations": trace.iterations,
        "phase": phase,
        "expected_phase": info["expected_phase"],
        "placement_ok": phase >= info["expected_phase"],
        "count_constant": off is None,
        "first_count_deviation": off,
        "counts_seen": sorted(set(counts)),
        "bound": info["bound"],
        "run_meets_bound": meets_iteration_bound(trace.iterations, m_i, ell_i),
        "phase_meets_bound": meets_iteration_bound(phase, m_i, ell_i),
    }
