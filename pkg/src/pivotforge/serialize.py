"""JSON round-trips for games, MDPs and LPs.

Rationals are written as "num/den" strings and the bottom priority as
"-inf".  Every document carries a "kind" tag, a "meta" block and an optional
starting point ("initial").
"""
from __future__ import annotations

import json
from fractions import Fraction

from .mdp import Action, MarkovDecisionProcess, Policy
from .ordering import BOTTOM, format_rational, parse_rational
from .parity import SinkParityGame, Strategy
from .simplex import LinearProgram


class SchemaError(ValueError):
    pass


def _meta(meta: dict) -> dict:
    out = {}
    for k, v in meta.items():
        if isinstance(v, Fraction):
            v = format_rational(v)
        elif isinstance(v, dict):
            v = _meta(v)
        elif isinstance(v, (list, tuple)):
            v = [format_rational(x) if isinstance(x, Fraction) else x for x in v]
        out[str(k)] = v
    return out


# ------------------------------------------------------------------ parity

def game_to_dict(g: SinkParityGame, s0: Strategy = None, meta: dict = None) -> dict:
    d = {
        "kind": "parity",
        "player0": sorted(g.player0),
        "player1": sorted(g.player1),
        "sink": g.sink,
        "vertices": list(g.vertices),
        "priorities": {v: ("-inf" if g.priority[v] is BOTTOM else g.priority[v]) for v in g.vertices},
        "edges": [list(e) for e in g.edges],
        "bland": {f"{u},{v}": n for (u, v), n in sorted(g.bland.items(), key=lambda x: x[1])},
        "meta": _meta(meta or {}),
    }
    if s0 is not None:
        d["initial"] = dict(s0.items())
    return d


def game_from_dict(d: dict):
    """Return (game, strategy or None, meta)."""
    try:
        pr = {v: (BOTTOM if p == "-inf" else int(p)) for v, p in d["priorities"].items()}
        bland = {}
        for key, n in d["bland"].items():
            u, v = key.split(",")
            bland[(u, v)] = int(n)
        g = SinkParityGame(d["player0"], d["player1"], d["sink"], [tuple(e) for e in d["edges"]],
                           pr, bland, d.get("vertices"))
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"bad parity game document: {exc}") from exc
    problems = g.validate()
    if problems:
        raise SchemaError(f"invalid game: {problems[0]}")
    s0 = Strategy(d["initial"]) if "initial" in d else None
    return g, s0, d.get("meta", {})


# --------------------------------------------------------------------- MDP

def mdp_to_dict(m: MarkovDecisionProcess, p0: Policy = None, meta: dict = None) -> dict:
    d = {
        "kind": "mdp",
        "states": list(m.states),
        "sink": m.sink,
        "actions": [
            {"name": a, "source": m.actions[a].source,
             "reward": format_rational(m.actions[a].reward),
             "transitions": [[t, format_rational(q)] for t, q in m.actions[a].transitions]}
            for a in m.action_order
        ],
        "bland": {a: m.bland[a] for a in m.action_order},
        "meta": _meta(meta if meta is not None else getattr(m, "meta", {})),
    }
    if p0 is not None:
        d["initial"] = dict(p0.items())
    return d


def mdp_from_dict(d: dict):
    """Return (mdp, policy or None, meta)."""
    try:
        acts = [Action(a["name"], a["source"], parse_rational(a["reward"]),
                       tuple((t, parse_rational(q)) for t, q in a["transitions"]))
                for a in d["actions"]]
        m = MarkovDecisionProcess(d["states"], d["sink"], acts, {k: int(v) for k, v in d["bland"].items()})
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"bad MDP document: {exc}") from exc
    problems = m.validate()
    if problems:
        raise SchemaError(f"invalid MDP: {problems[0]}")
    m.meta = dict(d.get("meta", {}))
    p0 = Policy(d["initial"]) if "initial" in d else None
    return m, p0, m.meta


# ---------------------------------------------------------------------- LP

def lp_to_dict(lp: LinearProgram, basis0=None, meta: dict = None) -> dict:
    d = {
        "kind": "lp",
        "names": list(lp.names),
        "A": [[format_rational(x) for x in row] for row in lp.A],
        "b": [format_rational(x) for x in lp.b],
        "c": [format_rational(x) for x in lp.c],
        "meta": _meta(meta or {}),
    }
    if basis0 is not None:
        d["initial"] = [lp.names[j] for j in sorted(basis0)]
    return d


def lp_from_dict(d: dict):
    """Return (lp, basis or None, meta)."""
    try:
        lp = LinearProgram([[parse_rational(x) for x in row] for row in d["A"]],
                           [parse_rational(x) for x in d["b"]],
                           [parse_rational(x) for x in d["c"]], names=d.get("names"))
        basis = None
        if "initial" in d:
            idx = {n: j for j, n in enumerate(lp.names)}
            basis = tuple(sorted(idx[n] for n in d["initial"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"bad LP document: {exc}") from exc
    return lp, basis, d.get("meta", {})


def lp_listing(lp: LinearProgram) -> str:
    """Plain-text equality-form listing."""
    lines = ["max " + " + ".join(f"{format_rational(c)} {n}" for c, n in zip(lp.c, lp.names))]
    for row, b in zip(lp.A, lp.b):
        terms = [f"{format_rational(a)} {n}" for a, n in zip(row, lp.names) if a != 0]
        lines.append(" + ".join(terms) + f" = {format_rational(b)}")
    lines.append(", ".join(lp.names) + " >= 0")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ files

def load_instance(path: str):
    """Return (kind, model, start, meta) for a JSON instance file."""
    with open(path) as fh:
        d = json.load(fh)
    kind = d.get("kind")
    if kind == "parity":
        return (kind,) + game_from_dict(d)
    if kind == "mdp":
        return (kind,) + mdp_from_dict(d)
    if kind == "lp":
        return (kind,) + lp_from_dict(d)
    raise SchemaError(f"unknown instance kind {kind!r}")


def dump(doc: dict, path: str = None) -> str:
    text = json.dumps(doc, indent=1, sort_keys=False) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text
