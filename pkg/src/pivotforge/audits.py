"""Checks of structural claims along improvement runs.

Trace audits work on the JSON form of a run (``RunTrace.to_dict()`` plus
the per-step ``extra`` data collected by :func:`make_probe`), so the same
code serves in-process tests and ``pivotforge audit`` on a saved file.
Each audit returns ``{"pass": bool, "first_failure": iteration or None,
"detail": ...}``.

Gadget checks replay a parity run and test the local lemmas of the
controller, delayer and filler widgets at every visited strategy.
"""
from __future__ import annotations

from . import parity
from .ordering import Ordering, compare_valuations
from .rules import BLAND, DANTZIG, LARGEST_INCREASE

TRACE_AUDITS = ("alternation", "agreement", "constant-improving-count", "lockstep",
                "canonical-ladder")


class AuditError(ValueError):
    pass


def _result(ok, first=None, **detail):
    return {"pass": bool(ok), "first_failure": first, "detail": detail}


# ------------------------------------------------------------ data capture

def make_probe(kind: str, model, meta: dict, audits) -> callable:
    """Probe for the engines' ``run`` loop that records what ``audits`` need."""
    audits = set(audits)
    parts = []
    if "alternation" in audits:
        if kind != "parity":
            raise AuditError("alternation needs a parity game")
        u, w = meta.get("alternation_pair", ("a1", "b1"))

        def alt(state, snap):
            return {"alt": _compare(model, parity.valuations(model, state), u, w)}

        parts.append(alt)
    if "agreement" in audits:
        def agree(state, snap):
            if not snap.improving:
                return {"rankings": {}}
            ctx = snap.context()
            out = {}
            for r in (BLAND, DANTZIG, LARGEST_INCREASE):
                out[r.name] = [sorted(snap.index(e) for e in tier) for tier in r.preorder(ctx).tiers]
            return {"rankings": out}

        parts.append(agree)
    if "constant-improving-count" in audits and "S2" in meta:
        s2 = set(meta["S2"])
        bland = model.bland

        def s2top(state, snap):
            cand = [a for a in snap.improving if a in s2]
            return {"s2_top": min(cand, key=lambda a: bland[a]) if cand else None}

        parts.append(s2top)
    if "canonical-ladder" in audits:
        if kind != "mdp" or meta.get("family") != "mdp-counter":
            raise AuditError("canonical-ladder needs an mdp-counter instance")
        from .lowerbound.mdp_families import canonical_bits

        def ladder(state, snap):
            return {"canonical": canonical_bits(model, state)}

        parts.append(ladder)

    def probe(state, snap):
        out = {}
        for p in parts:
            out.update(p(state, snap))
        return out

    return probe if parts else None


def _compare(g, vals, u, w) -> str:
    o = compare_valuations(vals.multiset(u), vals.multiset(w), g.t)
    return {Ordering.LESS: "<", Ordering.GREATER: ">", Ordering.EQUAL: "="}[o]


# ------------------------------------------------------------ trace audits

def audit_alternation(tr: dict, meta: dict = None) -> dict:
    """The order of the two tracked valuations flips at every iteration."""
    seq = [s.get("extra", {}).get("alt") for s in tr["steps"]]
    seq.append(tr.get("final_extra", {}).get("alt"))
    if any(o is None for o in seq):
        return _result(False, None, reason="trace has no alternation data")
    for i in range(1, len(seq)):
        if seq[i] == "=" or seq[i] == seq[i - 1]:
            return _result(False, i, orders=seq[max(0, i - 1):i + 1])
    return _result(True, None, orders=len(seq))


def audit_agreement(tr: dict, meta: dict = None) -> dict:
    """Bland, Dantzig and largest increase give the same preorder at every
    step, and no step carries the divergence flag."""
    for s in tr["steps"]:
        if "rankings-diverged" in s.get("flags", ()):
            return _result(False, s["iter"], reason="divergence flag")
        rk = s.get("extra", {}).get("rankings")
        if rk is None:
            tiers = s.get("tiers", {})
            if len(tiers) < 3:
                return _result(False, None, reason="trace has no ranking data")
            rk = tiers
        views = list(rk.values())
        if any(v != views[0] for v in views[1:]):
            return _result(False, s["iter"], reason="rankings differ")
    return _result(True, None, steps=len(tr["steps"]))


def audit_constant_count(tr: dict, meta: dict) -> dict:
    """Improving count equals the target over the audited phase.

    Adversarial parity games: target ``improving_target``, phase = steps
    before the first bookkeeping switch.  Gamma MDPs: target ``m_i``, phase
    = steps at which some embedded-counter action improves, and the pick
    must be the most preferred of those.  Otherwise the whole run with
    ``improving_target``.
    """
    steps = tr["steps"]
    if "S2" in meta:
        target = int(meta["m_i"])
        phase = [s for s in steps if s.get("extra", {}).get("s2_top") is not None]
        for s in phase:
            if s["k"] != target:
                return _result(False, s["iter"], k=s["k"], target=target)
            if s["chosen"] != s["extra"]["s2_top"]:
                return _result(False, s["iter"], chosen=s["chosen"], expected=s["extra"]["s2_top"])
        return _result(bool(phase), None if phase else 1, phase=len(phase), target=target)
    if "improving_target" not in meta:
        return _result(False, None, reason="instance has no improving-count target")
    target = int(meta["improving_target"])
    book = {f"{u}->{v}" for u, v in meta.get("bookkeeping", [])}
    phase = 0
    for s in steps:
        if s["chosen"] in book:
            break
        phase += 1
        if s["k"] != target:
            return _result(False, s["iter"], k=s["k"], target=target, phase_so_far=phase - 1)
    return _result(True, None, phase=phase, target=target)


def audit_canonical_ladder(tr: dict, meta: dict) -> dict:
    L = int(meta["L"])
    seen = [s.get("extra", {}).get("canonical") for s in tr["steps"]]
    seen.append(tr.get("final_extra", {}).get("canonical"))
    got = {b for b in seen if b is not None}
    missing = sorted(set(range(2 ** L)) - got)
    return _result(not missing, None, missing=missing[:10], covered=len(got))


def audit_lockstep(tr: dict, meta: dict) -> dict:
    rep = tr.get("lockstep")
    if rep is None:
        return _result(False, None, reason="trace has no lockstep report")
    return _result(rep["ok"], rep["first_divergence"], mdp_iterations=rep["mdp_iterations"],
                   lp_iterations=rep["lp_iterations"])


AUDITS = {
    "alternation": audit_alternation,
    "agreement": audit_agreement,
    "constant-improving-count": audit_constant_count,
    "lockstep": audit_lockstep,
    "canonical-ladder": audit_canonical_ladder,
}


def run_audits(tr: dict, names, meta: dict) -> dict:
    out = {}
    for n in names:
        if n not in AUDITS:
            raise AuditError(f"unknown audit {n!r}; choose from {', '.join(TRACE_AUDITS)}")
        out[n] = AUDITS[n](tr, meta)
    return out


# ----------------------------------------------------------- gadget lemmas

def _strategies(trace):
    s = trace.initial
    yield 0, s
    for st in trace.steps:
        s = parity.apply_switch(s, st.chosen)
        yield st.iteration, s


def _improving_sets(g, trace):
    for it, s in _strategies(trace):
        yield it, s, set(parity.improving_switches(g, s))


def check_controller_lemma(g, trace, controllers) -> dict:
    """For each controller on (x, y): until a' is taken, a' improves exactly
    when (x, y) does not, and a, a' never improve together."""
    active = {id(c): True for c in controllers}
    for it, s, imp in _improving_sets(g, trace):
        for c in controllers:
            if not active[id(c)]:
                continue
            if s[c.a_prime[0]] == c.a_prime[1]:
                active[id(c)] = False
                continue
            if (c.a_prime in imp) == (c.original in imp):
                return _result(False, it, controller=list(c.original))
            if c.a in imp and c.a_prime in imp:
                return _result(False, it, controller=list(c.original))
    return _result(True, None, controllers=len(controllers), states=trace.iterations + 1)


def check_delayer_lemma(g, trace, delayers) -> dict:
    """Per delayer: every drain takes exactly k+1 internal switches of one
    edge family, with exactly one internal improving switch per strategy
    while it runs, and none otherwise."""
    chosen = {st.iteration: st.chosen for st in trace.steps}
    drains = {id(d): [] for d in delayers}
    state = {id(d): None for d in delayers}     # None or list of internal switches
    for it, s, imp in _improving_sets(g, trace):
        nxt = chosen.get(it + 1)
        for d in delayers:
            inner = set(d.all())
            live = imp & inner
            cur = state[id(d)]
            if len(live) > 1:
                return _result(False, it, vertex=d.vertex, reason="several internal switches improve")
            if live and cur is None:
                cur = state[id(d)] = []
            if not live and cur is not None:
                if len(cur) != d.k + 1:
                    return _result(False, it, vertex=d.vertex, switches=len(cur), k=d.k)
                fam = {"l" if e in d.l else "r" for e in cur}
                if len(fam) != 1:
                    return _result(False, it, vertex=d.vertex, reason="drain mixes l and r edges")
                drains[id(d)].append(len(cur))
                cur = state[id(d)] = None
            if cur is not None and nxt in inner:
                cur.append(nxt)
    for d in delayers:
        if state[id(d)] is not None:
            return _result(False, trace.iterations, vertex=d.vertex, reason="run ended mid-drain")
    total = sum(len(v) for v in drains.values())
    return _result(True, None, drains=total,
                   per_vertex={d.vertex: len(drains[id(d)]) for d in delayers})


def check_filler_lemma(g, trace, fillers) -> dict:
    """Each filler contributes exactly its Y -> X move to the improving set
    until that move is taken, and nothing afterwards."""
    for it, s, imp in _improving_sets(g, trace):
        for f in fillers:
            taken = s[f.improving[0]] == f.improving[1]
            want = set() if taken else {f.improving}
            if imp & set(f.all()) != want:
                return _result(False, it, filler=list(f.improving), taken=taken)
    return _result(True, None, fillers=len(fillers))


def count_profile(trace) -> list:
    return [len(st.improving) for st in trace.steps]
