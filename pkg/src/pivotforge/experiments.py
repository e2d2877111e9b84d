"""Instance families, experiment specs and single runs for the command line.

An experiment spec is a dict::

    {"instance": {"family": "counter-parity", "params": {"n": 4}}
                 | {"file": "path.json"},
     "rule": {...rule config...} | "bland" | ...,   # optional
     "cap": 1000000,                                  # optional
     "audits": ["alternation", ...],                 # optional
     "valuations": false}                             # optional: store exact values per step
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import audits as audit_mod
from . import mdp as mdp_mod
from . import parity
from . import rules
from . import serialize
from . import simplex as sx
from .lowerbound import adversarial, mdp_families
from .lowerbound.counter import gen_counter_game
from .reductions import lockstep_check, mdp_to_lp
from .trace import DEFAULT_CAP

ORACLE_LIMIT = 2 ** 12


class SpecError(ValueError):
    """Malformed experiment spec or parameters (a usage problem)."""


@dataclass
class Instance:
    kind: str                 # parity | mdp | lp
    family: str
    params: dict
    model: object
    start: object
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        if self.kind == "parity":
            return len([e for e in self.model.edges if e[0] in self.model.player0])
        if self.kind == "mdp":
            return len(self.model.actions)
        return self.model.n

    def to_dict(self) -> dict:
        if self.kind == "parity":
            return serialize.game_to_dict(self.model, self.start, self.meta)
        if self.kind == "mdp":
            return serialize.mdp_to_dict(self.model, self.start, self.meta)
        return serialize.lp_to_dict(self.model, self.start, self.meta)


# ----------------------------------------------------------------- params

def _int(params, key, default=None):
    v = params.get(key, default)
    if v is None:
        raise SpecError(f"missing parameter {key!r}")
    try:
        return int(v)
    except (TypeError, ValueError):
        raise SpecError(f"parameter {key!r} must be an integer, got {v!r}") from None


def _json_param(params, key):
    v = params.get(key)
    if v is None:
        raise SpecError(f"missing parameter {key!r}")
    if isinstance(v, str):
        try:
            v = json.loads(v)
        except json.JSONDecodeError as exc:
            raise SpecError(f"parameter {key!r} is not valid JSON: {exc}") from None
    return v


def picker_from_name(name: str) -> rules.RankPicker:
    """"one", "identity", "sqrt-ceil" or "minus-c" (max(1, k - c))."""
    if name in rules.PICKERS:
        return rules.PICKERS[name]
    if name.startswith("minus-"):
        c = int(name[len("minus-"):])
        return rules.RankPicker(lambda k: max(1, k - c), name)
    raise SpecError(f"unknown rank picker {name!r}")


def _eps(params, L):
    v = params.get("eps", 0)
    if v == "auto":
        return mdp_families.default_epsilon(L)
    try:
        return Fraction(str(v))
    except ValueError:
        raise SpecError(f"eps must be a rational or 'auto', got {v!r}") from None


# ---------------------------------------------------------------- families

def _counter_parity(p):
    n = _int(p, "n")
    g, s0 = gen_counter_game(n)
    return Instance("parity", "counter-parity", {"n": n}, g, s0,
                    {"family": "counter-parity", "n": n, "alternation_pair": ["a1", "b1"]})


def _adversarial_parity(p):
    sel_spec = _json_param(p, "selector")
    m_i, ell = _int(p, "m"), _int(p, "ell")
    unique = str(p.get("unique", "true")).lower() not in ("0", "false", "no")
    try:
        sel = rules.selector_from_spec(sel_spec)
    except (KeyError, ValueError) as exc:
        raise SpecError(f"bad selector: {exc}") from None
    g, s0, info = adversarial.build_adversarial_parity(sel, m_i, ell, unique_priorities=unique)
    meta = {k: v for k, v in info.items() if k != "selector"}
    meta.update(selector=sel_spec, family="adversarial-parity",
                bookkeeping=[list(e) for e in info["bookkeeping"]])
    return Instance("parity", "adversarial-parity",
                    {"selector": sel_spec, "m": m_i, "ell": ell, "unique": unique}, g, s0, meta)


def _mdp_counter(p):
    L = _int(p, "L")
    eps = _eps(p, L)
    m, p0 = mdp_families.gen_mdp_counter(L, eps)
    return Instance("mdp", "mdp-counter", {"L": L, "eps": str(eps)}, m, p0, dict(m.meta))


def _mdp_copied(p):
    L, k = _int(p, "L"), _int(p, "k")
    eps = _eps(p, L)
    base, b0 = mdp_families.gen_mdp_counter(L, eps)
    m, p0 = mdp_families.gen_mdp_copied(base, k, b0)
    return Instance("mdp", "mdp-copied", {"L": L, "k": k, "eps": str(eps)}, m, p0, dict(m.meta))


def _mdp_delta(p):
    L = _int(p, "L")
    M = p.get("M", "auto")
    if M == "auto":
        M, m, p0, _ = mdp_families.find_delta_scale(L, rules.f_rule(rules.PICK_LAST))
    else:
        m, p0 = mdp_families.gen_mdp_delta(L, _int(p, "M"))
    return Instance("mdp", "mdp-delta", {"L": L, "M": int(M)}, m, p0, dict(m.meta))


def _mdp_gamma(p):
    m_i = _int(p, "m")
    f = picker_from_name(str(p.get("f", "identity")))
    L = p.get("L")
    m, p0, info = mdp_families.gen_mdp_gamma(f, m_i, L=None if L is None else _int(p, "L"))
    meta = dict(info, f=f.name)
    return Instance("mdp", "mdp-gamma", {"m": m_i, "f": f.name, "L": info["L"]}, m, p0, meta)


def _random_lp(p):
    m, n, seed = _int(p, "m", 3), _int(p, "n", 6), _int(p, "seed", 0)
    if not 1 <= m <= n:
        raise SpecError("need 1 <= m <= n")
    lp, basis = sx.random_nondegenerate_lp(random.Random(seed), m, n)
    return Instance("lp", "random-lp", {"m": m, "n": n, "seed": seed}, lp, basis,
                    {"family": "random-lp", "m": m, "n": n, "seed": seed})


def _flux_lp(p):
    L = _int(p, "L")
    m, p0 = mdp_families.gen_mdp_counter(L, _eps(p, L))
    lp, rmap = mdp_to_lp(m, extra_policies=[p0])
    return Instance("lp", "flux-lp", {"L": L}, lp, rmap.basis(m, p0),
                    {"family": "flux-lp", "L": L, "source": "mdp-counter"})


FAMILIES = {
    "counter-parity": _counter_parity,
    "adversarial-parity": _adversarial_parity,
    "mdp-counter": _mdp_counter,
    "mdp-copied": _mdp_copied,
    "mdp-delta": _mdp_delta,
    "mdp-gamma": _mdp_gamma,
    "random-lp": _random_lp,
    "flux-lp": _flux_lp,
}


def generate(family: str, params: dict) -> Instance:
    if family not in FAMILIES:
        raise SpecError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    return FAMILIES[family](dict(params))


def load(path: str) -> Instance:
    kind, model, start, meta = serialize.load_instance(path)
    if start is None:
        raise SpecError(f"{path} has no initial strategy/policy/basis")
    meta = dict(meta)
    fam = meta.get("family", "file")
    return Instance(kind, fam, {"file": path}, model, start, meta)


def instance_from_spec(src: dict) -> Instance:
    if "file" in src:
        return load(src["file"])
    if "family" not in src:
        raise SpecError("instance needs 'family' or 'file'")
    return generate(src["family"], src.get("params", {}))


# -------------------------------------------------------------------- rules

SHORT_RULES = {
    "bland": {"kind": "greedy", "ranking": "bland"},
    "dantzig": {"kind": "greedy", "ranking": "dantzig"},
    "largest-increase": {"kind": "greedy", "ranking": "largest-increase"},
    "steepest-edge": {"kind": "greedy", "ranking": "steepest-edge"},
    "f1": {"kind": "f", "default": "one"},
    "f-identity": {"kind": "f", "default": "identity"},
    "f-sqrt-ceil": {"kind": "f", "default": "sqrt-ceil"},
}


def rule_for(inst: Instance, spec) -> tuple:
    """Return (rule, label).  ``None`` picks the instance's natural rule."""
    if spec is None:
        if inst.family == "adversarial-parity":
            spec = inst.meta["selector"]
        elif inst.family == "mdp-gamma":
            f = picker_from_name(inst.meta["f"])
            return rules.f_rule(f), f"f-{f.name}"
        else:
            spec = "bland"
    if isinstance(spec, str):
        if spec.lstrip().startswith("{"):
            spec = json.loads(spec)
        elif spec in SHORT_RULES:
            spec = SHORT_RULES[spec]
        else:
            raise SpecError(f"unknown rule {spec!r}")
    try:
        r = rules.rule_from_spec(spec)
    except (KeyError, ValueError, TypeError) as exc:
        raise SpecError(f"bad rule spec: {exc}") from None
    return r, r.name


# --------------------------------------------------------------------- runs

def _oracle_optimal(inst: Instance, final) -> object:
    """True/False against exhaustive enumeration, or None when too large."""
    try:
        if inst.kind == "parity":
            best = parity.brute_force_optimum(inst.model, ORACLE_LIMIT)
            got = parity.valuations(inst.model, final).value
            return all(got[v] == best[v] for v in best)
        if inst.kind == "mdp":
            obj, best = mdp_mod.brute_force_optimum(inst.model, ORACLE_LIMIT)
            val = mdp_mod.policy_values(inst.model, final)
            return all(val[s] == best[s] for s in best)
        if inst.model.n > 16:
            return None
        x, _ = sx.bfs_from_basis(inst.model, final)
        return sx.objective_value(inst.model, x) == sx.brute_force_optimum(inst.model)
    except ValueError:
        return None


def run_instance(inst: Instance, rule, cap: int = DEFAULT_CAP, probe=None):
    if inst.kind == "parity":
        return parity.strategy_improvement(inst.model, inst.start, rule, cap, probe)
    if inst.kind == "mdp":
        return mdp_mod.policy_iteration(inst.model, inst.start, rule, cap, probe)
    return sx.simplex(inst.model, inst.start, rule, cap, probe)


@dataclass
class RunResult:
    row: dict
    trace_doc: dict
    capped: bool
    audits_ok: bool


def n_or_L(inst: Instance):
    p = inst.params
    if inst.family == "adversarial-parity":
        return int(inst.meta["m_i"]) // 3
    for k in ("n", "L"):
        if k in p:
            return p[k]
    meta = inst.meta
    for key in ("n", "L"):
        if key in meta:
            return meta[key]
    return meta.get("base", {}).get("L", "")


def state_values(inst: Instance, state) -> dict:
    """Exact values at ``state`` as JSON-ready strings."""
    if inst.kind == "parity":
        return {v: str(x) for v, x in parity.valuations(inst.model, state).value.items()}
    if inst.kind == "mdp":
        return {s: serialize.format_rational(x)
                for s, x in mdp_mod.policy_values(inst.model, state).items()}
    x, _ = sx.bfs_from_basis(inst.model, state)
    return {n: serialize.format_rational(v) for n, v in zip(inst.model.names, x)}


def _with_values(inst, probe):
    def both(state, snap):
        out = dict(probe(state, snap)) if probe else {}
        out["values"] = state_values(inst, state)
        return out

    return both


def run_experiment(spec: dict) -> RunResult:
    inst = instance_from_spec(spec.get("instance", {}))
    rule, label = rule_for(inst, spec.get("rule"))
    cap = int(spec.get("cap", DEFAULT_CAP))
    names = list(spec.get("audits", []))
    for a in names:
        if a not in audit_mod.AUDITS:
            raise SpecError(f"unknown audit {a!r}; choose from {', '.join(audit_mod.TRACE_AUDITS)}")
    probe = audit_mod.make_probe(inst.kind, inst.model, inst.meta, names)
    if spec.get("valuations"):
        probe = _with_values(inst, probe)
    tr = run_instance(inst, rule, cap, probe)
    doc = {
        "instance": {"family": inst.family, "params": inst.params,
                     "meta": serialize._meta(inst.meta)},
        "rule": label,
        "cap": cap,
        "trace": tr.to_dict(),
    }
    if "lockstep" in names:
        if inst.kind != "mdp":
            raise SpecError("lockstep needs an MDP instance")
        doc["trace"]["lockstep"] = lockstep_check(inst.model, rule, inst.start, cap).to_dict()
    report = audit_mod.run_audits(doc["trace"], names, doc["instance"]["meta"])
    doc["audits"] = report
    capped = not tr.complete
    optimal = False if capped else _oracle_optimal(inst, tr.final)
    ok = all(r["pass"] for r in report.values())
    row = {
        "family": inst.family,
        "params": ";".join(f"{k}={_short(v)}" for k, v in inst.params.items()),
        "rule": label,
        "n_or_L": n_or_L(inst),
        "edges_or_actions": inst.size,
        "iterations": tr.iterations,
        "optimal": "capped" if capped else ("unchecked" if optimal is None else str(optimal).lower()),
        "audits": ";".join(f"{n}={'pass' if r['pass'] else 'FAIL'}" for n, r in report.items()) or "-",
    }
    return RunResult(row, doc, capped, ok)


def _short(v):
    if isinstance(v, (dict, list)):
        return json.dumps(v, separators=(",", ":"), sort_keys=True)
    return v


CSV_COLUMNS = ("family", "params", "rule", "n_or_L", "edges_or_actions", "iterations",
               "optimal", "audits")
