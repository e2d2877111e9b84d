"""MDP lower-bound families: the two-chain counter, its action-copied and
delta-gadget variants, and the gamma-padded wrapper for large f."""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Optional

from ..mdp import (Action, MarkovDecisionProcess, Policy, all_policies, apply_switch,
                   is_weak_unichain_policy, policy_values, reduced_costs)
from ..trace import EngineError

SINK = "T"


class ConstructionError(ValueError):
    pass


def _alpha(l):
    return f"alpha{l}"


def _beta(l):
    return f"beta{l}"


def _sink_action():
    return Action("T->T", SINK, Fraction(0), ((SINK, Fraction(1)),))


def _det(name, src, dst, reward=0):
    return Action(name, src, Fraction(reward), ((dst, Fraction(1)),))


def _counter_pairs(L):
    """The four (x, y) pairs of each level, with their rewards."""
    for l in range(1, L + 1):
        for x in (_alpha(l), _beta(l)):
            yield l, x, _alpha(l + 1), 0
            yield l, x, _beta(l + 1), L ** l


# ------------------------------------------------------------------ M_L

def gen_mdp_counter(L: int, eps=0):
    """Two-chain binary counter with L+1 levels.

    Returns (mdp, sigma_0).  With ``eps > 0`` every alpha action reaches its
    target with probability 1-eps and the sink with probability eps.  Bland
    numbers grow towards the low levels, so the least preferred improving
    action (largest number) is in the lowest level, alpha before beta.
    """
    if L < 2:
        raise ConstructionError("L must be >= 2")
    eps = Fraction(eps)
    if eps < 0 or eps >= 1:
        raise ConstructionError("eps must lie in [0, 1)")
    states = []
    for l in range(1, L + 2):
        states += [_alpha(l), _beta(l)]
    states.append(SINK)
    acts = {}
    for l, x, y, r in _counter_pairs(L):
        name = f"{x}->{y}"
        if eps and x.startswith("alpha"):
            acts[name] = Action(name, x, Fraction(r), ((y, 1 - eps), (SINK, eps)))
        else:
            acts[name] = _det(name, x, y, r)
    acts[f"{_alpha(L + 1)}->T"] = _det(f"{_alpha(L + 1)}->T", _alpha(L + 1), SINK, L ** (L + 1))
    acts[f"{_beta(L + 1)}->T"] = _det(f"{_beta(L + 1)}->T", _beta(L + 1), SINK, 0)
    acts["T->T"] = _sink_action()
    order = ["T->T", f"{_beta(L + 1)}->T", f"{_alpha(L + 1)}->T"]
    for l in range(L, 0, -1):
        for x in (_beta(l), _alpha(l)):
            order += [f"{x}->{_alpha(l + 1)}", f"{x}->{_beta(l + 1)}"]
    bland = {a: i + 1 for i, a in enumerate(order)}
    m = MarkovDecisionProcess(states, SINK, acts.values(), bland)
    m.meta = {"family": "mdp-counter", "L": L, "eps": eps}
    choice = {SINK: "T->T", _alpha(L + 1): f"{_alpha(L + 1)}->T", _beta(L + 1): f"{_beta(L + 1)}->T"}
    for l in range(1, L + 1):
        choice[_alpha(l)] = f"{_alpha(l)}->{_alpha(l + 1)}"
        choice[_beta(l)] = f"{_beta(l)}->{_beta(l + 1)}"
    return m, Policy(choice)


def acyclic_optimal_values(m: MarkovDecisionProcess) -> dict:
    """Optimal values of an MDP whose action graph is acyclic (one backward pass)."""
    import networkx as nx

    g = nx.DiGraph()
    g.add_nodes_from(m.states)
    for a in m.actions.values():
        if a.source != m.sink:
            for t, _ in a.transitions:
                g.add_edge(a.source, t)
    if not nx.is_directed_acyclic_graph(g):
        raise ValueError("action graph has a cycle")
    val = {}
    for s in reversed(list(nx.topological_sort(g))):
        if s == m.sink:
            val[s] = Fraction(0)
            continue
        val[s] = max(m.actions[a].reward + sum(q * val[t] for t, q in m.actions[a].transitions)
                     for a in m.available[s])
    return val


def default_epsilon(L: int) -> Fraction:
    """1 / (largest value reachable in the unperturbed counter * 2^10).

    Values only grow along a run and the instance has non-negative rewards, so
    the optimal value of the best state bounds every value the run visits.
    """
    m, _ = gen_mdp_counter(L, 0)
    top = max(abs(v) for v in acyclic_optimal_values(m).values())
    return Fraction(1, int(top) * 2 ** 10)


def option_target(m: MarkovDecisionProcess, a: str) -> str:
    """Main (non-sink) target of a counter action."""
    trans = m.actions[a].transitions
    return trans[0][0]


def canonical_bits(m: MarkovDecisionProcess, p: Policy, val: Optional[dict] = None):
    """Return b if ``p`` is canonical for b on the counter ``m``, else None.

    Canonical for b: alpha_l and beta_l share a target iff bit l of b is set,
    and alpha_l's target attains max(val(alpha_{l+1}), L^l + val(beta_{l+1})).
    """
    L = m.meta["L"]
    if val is None:
        val = policy_values(m, p)
    b = 0
    for l in range(1, L + 1):
        ta = option_target(m, p[_alpha(l)])
        tb = option_target(m, p[_beta(l)])
        if ta == tb:
            b |= 1 << (l - 1)
        options = {_alpha(l + 1): val[_alpha(l + 1)], _beta(l + 1): L ** l + val[_beta(l + 1)]}
        if options[ta] != max(options.values()):
            return None
    return b


# ------------------------------------------------------------ copied M_L

def gen_mdp_copied(base: MarkovDecisionProcess, k: int, base_policy: Optional[Policy] = None):
    """Replace each non-sink action by k two-hop copies through fresh states.

    The copy ``a#j`` moves to the fresh state ``c[a#j]`` collecting a's
    reward; that state then follows a's transitions.  Copies of one action
    get consecutive Bland numbers in a's position.
    """
    if k < 1:
        raise ConstructionError("k must be >= 1")
    states = list(base.states)
    acts = []
    order = []
    for a in base.action_order:
        act = base.actions[a]
        if act.source == base.sink:
            acts.append(act)
            order.append(a)
            continue
        for j in range(1, k + 1):
            mid = f"c[{a}#{j}]"
            states.insert(len(states) - 1, mid)
            acts.append(_det(f"{a}#{j}", act.source, mid, act.reward))
            acts.append(Action(f"{mid}->", mid, Fraction(0), act.transitions))
            order.append(f"{a}#{j}")
    rest = [x.name for x in acts if x.name not in set(order)]
    bland = {a: i + 1 for i, a in enumerate(order + rest)}
    m = MarkovDecisionProcess(states, base.sink, acts, bland)
    m.meta = {"family": "mdp-copied", "k": k, "base": dict(base.meta)}
    if base_policy is None:
        return m
    choice = {}
    for s in m.states:
        if s in base_policy.choice:
            a = base_policy[s]
            choice[s] = a if s == base.sink else f"{a}#1"
        else:
            choice[s] = m.available[s][0]
    return m, Policy(choice)


# ------------------------------------------------------------ delta family

def _dstate(x, y):
    return f"d({x},{y})"


def _estate(x, y):
    return f"e({x},{y})"


def gen_mdp_delta(L: int, M: int):
    """Counter with every level action (x, y) replaced by the delta gadget.

    Gate probabilities are p_{alpha_l} = M^(2-2l) and p_{beta_l} = M^(1-2l).
    Bland numbers are smallest for actions incident to alpha_1, then beta_1,
    alpha_2, ..., so greedy Bland prefers the lowest level.
    """
    if L < 2:
        raise ConstructionError("L must be >= 2")
    if M < 2:
        raise ConstructionError("M must be >= 2")
    gate = {}
    for l in range(1, L + 1):
        gate[_alpha(l)] = Fraction(1, M ** (2 * l - 2))
        gate[_beta(l)] = Fraction(1, M ** (2 * l - 1))
    states = []
    for l in range(1, L + 2):
        states += [_alpha(l), _beta(l)]
    acts = {}
    groups = {}
    tails = []
    for l, x, y, r in _counter_pairs(L):
        d, e = _dstate(x, y), _estate(x, y)
        states += [d, e]
        p = gate[x]
        acts[f"{x}->{d}"] = _det(f"{x}->{d}", x, d)
        acts[f"{d}->{x}"] = _det(f"{d}->{x}", d, x)
        trans = ((e, p), (x, 1 - p)) if p < 1 else ((e, Fraction(1)),)
        acts[f"da({x},{y})"] = Action(f"da({x},{y})", d, Fraction(0), trans)
        acts[f"{e}->{y}"] = _det(f"{e}->{y}", e, y, r)
        groups.setdefault(x, []).extend([f"{x}->{d}", f"{d}->{x}", f"da({x},{y})"])
        tails.append(f"{e}->{y}")
    states.append(SINK)
    acts[f"{_alpha(L + 1)}->T"] = _det(f"{_alpha(L + 1)}->T", _alpha(L + 1), SINK, L ** (L + 1))
    acts[f"{_beta(L + 1)}->T"] = _det(f"{_beta(L + 1)}->T", _beta(L + 1), SINK, 0)
    acts["T->T"] = _sink_action()
    order = []
    for l in range(1, L + 1):
        for x in (_alpha(l), _beta(l)):
            order += sorted(groups[x], key=lambda a: (0 if a.startswith(x) else
                                                       1 if a.endswith(f"->{x}") else 2, a))
    order += tails + [f"{_alpha(L + 1)}->T", f"{_beta(L + 1)}->T", "T->T"]
    bland = {a: i + 1 for i, a in enumerate(order)}
    m = MarkovDecisionProcess(states, SINK, acts.values(), bland)
    m.meta = {"family": "mdp-delta", "L": L, "M": M}
    return m, delta_initial_policy(m, L)


def delta_initial_policy(m: MarkovDecisionProcess, L: int) -> Policy:
    choice = {SINK: "T->T", _alpha(L + 1): f"{_alpha(L + 1)}->T",
              _beta(L + 1): f"{_beta(L + 1)}->T"}
    for l, x, y, r in _counter_pairs(L):
        d, e = _dstate(x, y), _estate(x, y)
        chosen = y == _alpha(l + 1) if x.startswith("alpha") else y == _beta(l + 1)
        if chosen:
            choice[x] = f"{x}->{d}"
            choice[d] = f"da({x},{y})"
        else:
            choice[d] = f"{d}->{x}"
        choice[e] = f"{e}->{y}"
    return Policy(choice)


def is_counter_entry(a: str) -> bool:
    """True for the actions x -> d(x, y) that move the embedded counter."""
    return "->d(" in a and not a.startswith("d(")


def find_delta_scale(L: int, rule, start: int = 2, limit: int = 2 ** 16):
    """Smallest M = start * 2^j whose run raises no divergence flag.

    Returns (M, mdp, policy, trace).
    """
    from ..mdp import policy_iteration

    M = start
    while M <= limit:
        m, p0 = gen_mdp_delta(L, M)
        tr = policy_iteration(m, p0, rule)
        if not tr.flagged("rankings-diverged"):
            m.meta["M"] = M
            return M, m, p0, tr
        M *= 2
    raise ConstructionError(f"no scale M <= {limit} gives agreeing rankings")


# ------------------------------------------------------------ gamma family

def _wrap_names(a):
    return f"wrap:{a}", f"body:{a}", f"stay:{a}", f"ua:{a}", f"v[{a}]", f"u[{a}]"


def reduced_cost_bounds(m: MarkovDecisionProcess, trace=None, limit: int = 2 ** 12):
    """(L_bound, U_bound, method) for the embedded counter ``m``.

    L_bound is the smallest positive reduced cost over all weak unichain
    policies when there are at most ``limit`` of them, else over the policies
    visited by ``trace``.  U_bound bounds the absolute objective change of any
    switch: every value lies in [-R, R] with R the total absolute reward, so
    a switch moves the objective by at most 2 R |S|.
    """
    R = sum(abs(a.reward) for a in m.actions.values())
    U = 2 * R * len(m.states)
    low = None
    total = 1
    for s in m.states:
        total *= len(m.available[s])
    if total <= limit:
        method = "enumeration"
        for p in all_policies(m, limit):
            if not is_weak_unichain_policy(m, p):
                continue
            rcs = reduced_costs(m, policy_values(m, p))
            for x in rcs.values():
                if x > 0 and (low is None or x < low):
                    low = x
    else:
        if trace is None:
            raise ConstructionError("too many policies to enumerate and no run given")
        method = "run-minimum"
        for x in _trace_min_rc(m, trace):
            if low is None or x < low:
                low = x
    if low is None:
        raise ConstructionError("no positive reduced cost found")
    return Fraction(low), Fraction(U), method


def _trace_min_rc(m, trace):
    """Positive reduced costs of every policy visited by ``trace``."""
    p = trace.initial
    yield from (x for x in reduced_costs(m, policy_values(m, p)).values() if x > 0)
    for step in trace.steps:
        p = apply_switch(p, m, step.chosen)
        yield from (x for x in reduced_costs(m, policy_values(m, p)).values() if x > 0)


def gen_mdp_gamma(f: Callable, m_i: int, L: Optional[int] = None, M_delta: Optional[int] = None,
                  M: Optional[int] = None):
    """Gamma-padded wrapper around the delta counter.

    ``f`` maps the improving count to the rank the rule picks.  The embedded
    delta counter has at most f(m_i)+1 actions (largest such L unless given),
    is padded with single-action states to exactly f(m_i)+1 actions, and each
    non-sink action is wrapped in the u/v gadget.  States gamma_1..gamma_c
    with c = m_i - f(m_i) add decoy switches of reward U+k.

    Returns (mdp, policy, info).
    """
    from ..mdp import policy_iteration
    from ..rules import PICK_LAST, f_rule

    fm = f(m_i)
    if not isinstance(fm, int) or not 1 <= fm <= m_i:
        raise ConstructionError(f"f(m_i) = {fm} outside 1..{m_i}")
    if L is None:
        L = (fm + 1 - 3) // 16
    if L < 2 or 16 * L + 3 > fm + 1:
        raise ConstructionError(f"f(m_i)+1 = {fm + 1} cannot hold a delta counter with L >= 2 "
                                f"(needs 16L+3 actions)")
    greedy = f_rule(PICK_LAST)
    if M_delta is None:
        M_delta, base, base_p0, base_trace = find_delta_scale(L, greedy)
    else:
        base, base_p0 = gen_mdp_delta(L, M_delta)
        base_trace = policy_iteration(base, base_p0, greedy)
    low, U, method = reduced_cost_bounds(base, base_trace)

    # pad to exactly f(m_i)+1 actions
    pads = fm + 1 - len(base.actions)
    states = [s for s in base.states if s != SINK]
    inner = [base.actions[a] for a in base.action_order if a != "T->T"]
    for j in range(1, pads + 1):
        states.append(f"pad{j}")
        inner.append(_det(f"pad{j}->T", f"pad{j}", SINK))

    p1 = low / (2 * (low + U))
    q1 = p1 * low / 2
    if M is None:
        # u_a reduced costs for rank k lie in M^(1-k) [q1, q1 + p1 U]
        bound = 1 + p1 * U / q1
        M = 2
        while M <= bound:
            M *= 2

    acts = [_sink_action()]
    s2, s3, rest = [], [], []
    for k, a in enumerate(inner, start=1):
        wrap, body, stay, ua, v, u = _wrap_names(a.name)
        states += [v, u]
        scale = Fraction(1, M ** (k - 1))
        p, q = p1 * scale, q1 * scale
        acts.append(_det(wrap, a.source, v))
        acts.append(Action(body, v, a.reward, a.transitions))
        acts.append(_det(stay, u, v))
        acts.append(Action(ua, u, q, ((a.source, p), (v, 1 - p))))
        (s2 if a.name in base.actions else rest).append(wrap)
        s3.append(ua)
        rest += [body, stay]
    c = m_i - fm
    states.append("gamma0")
    acts.append(_det("gamma0->T", "gamma0", SINK))
    s1 = []
    for k in range(1, c + 1):
        g = f"gamma{k}"
        states.append(g)
        acts.append(_det(f"{g}->T", g, SINK))
        acts.append(_det(f"{g}->gamma0", g, "gamma0", U + k))
        s1.append(f"{g}->gamma0")
        rest.append(f"{g}->T")
    rest += ["gamma0->T", "T->T"]
    states.append(SINK)
    # S2 follows the embedded counter's Bland order; inner is already in it
    order = list(reversed(s1)) + s2 + s3 + rest
    bland = {a: i + 1 for i, a in enumerate(order)}
    mdp = MarkovDecisionProcess(states, SINK, acts, bland)
    info = {"family": "mdp-gamma", "m_i": m_i, "f_m_i": fm, "L": L, "M_delta": M_delta,
            "M": M, "L_bound": low, "U_bound": U, "bound_method": method, "pads": pads,
            "S1": s1, "S2": s2, "S3": s3}
    mdp.meta = dict(info)
    choice = {SINK: "T->T", "gamma0": "gamma0->T"}
    for k in range(1, c + 1):
        choice[f"gamma{k}"] = f"gamma{k}->T"
    for a in inner:
        wrap, body, stay, ua, v, u = _wrap_names(a.name)
        choice[v] = body
        choice[u] = stay
    for s, a in base_p0.items():
        if s != SINK:
            choice[s] = f"wrap:{a}"
    for j in range(1, pads + 1):
        choice[f"pad{j}"] = f"wrap:pad{j}->T"
    return mdp, Policy(choice), info
