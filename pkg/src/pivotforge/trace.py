"""Run traces and the engine-independent improvement loop.

Strategy improvement, policy iteration and the simplex method all share the
same shape: compute the improving elements of the current state, let the
pivot rule pick one, apply it, repeat.  Each engine supplies a snapshot
object; this module owns the loop and the per-iteration records.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

DEFAULT_CAP = 2 ** 40


class RuleContractError(RuntimeError):
    """A pivot rule returned something other than an improving element."""


class EngineError(RuntimeError):
    """Base class for engine-level failures (bad input, undefined values)."""


@dataclass
class StepRecord:
    iteration: int
    state_key: str
    improving: list          # element labels, ascending global index
    indices: list            # global (Bland) indices aligned with improving
    tiers: dict              # ranking name -> tiers of positions, least preferred first
    chosen: Any              # raw element
    chosen_label: str
    chosen_rank: int         # 1-based position among improving by global index
    memory: int
    next_memory: int
    objective: Any = None
    flags: tuple = ()
    extra: dict = field(default_factory=dict)

    def to_dict(self, with_objective: bool = True) -> dict:
        out = {
            "iter": self.iteration,
            "state": self.state_key,
            "k": len(self.improving),
            "improving_bland": list(self.indices),
            "tiers": {name: [list(t) for t in tiers] for name, tiers in self.tiers.items()},
            "chosen": self.chosen_label,
            "chosen_rank": self.chosen_rank,
            "memory": self.memory,
            "next_memory": self.next_memory,
            "flags": list(self.flags),
        }
        if with_objective and self.objective is not None:
            out["objective"] = _jsonable(self.objective)
        if self.extra:
            out["extra"] = {k: _jsonable(v) for k, v in sorted(self.extra.items())}
        return out


def _jsonable(v):
    from fractions import Fraction

    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v) if abs(v) >= 2 ** 53 else v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return str(v)


@dataclass
class RunTrace:
    engine: str
    rule: str
    steps: list
    final: Any
    status: str                   # "optimal" or "capped"
    initial_objective: Any = None
    final_objective: Any = None
    final_extra: dict = field(default_factory=dict)
    initial: Any = None

    @property
    def iterations(self) -> int:
        return len(self.steps)

    @property
    def complete(self) -> bool:
        return self.status == "optimal"

    def flagged(self, flag: str) -> list:
        return [s.iteration for s in self.steps if flag in s.flags]

    def to_dict(self, with_objective: bool = True) -> dict:
        return {
            "engine": self.engine,
            "rule": self.rule,
            "status": self.status,
            "iterations": self.iterations,
            "initial_objective": _jsonable(self.initial_objective),
            "final_objective": _jsonable(self.final_objective),
            "final_extra": {k: _jsonable(v) for k, v in sorted(self.final_extra.items())},
            "steps": [s.to_dict(with_objective) for s in self.steps],
        }


def state_digest(parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x00")
    return h.hexdigest()[:16]


def run_improvement(engine, start, rule, cap: int = DEFAULT_CAP,
                    probe: Optional[Callable] = None) -> RunTrace:
    """Apply single improving switches chosen by ``rule`` until none is left.

    ``engine`` must provide ``snapshot(state)``, ``apply(state, e)``,
    ``state_key(state)``, ``label(e)`` and the attributes ``name`` and
    ``n_elements``.  A snapshot exposes ``improving`` (sorted by global
    index), ``index(e)``, ``objective`` and ``context()``.
    """
    if cap < 0:
        raise ValueError("cap must be non-negative")
    h = rule.initial_memory
    state = start
    steps = []
    snap = engine.snapshot(state)
    initial_objective = snap.objective
    status = "optimal"
    while True:
        improving = snap.improving
        if not improving:
            break
        if len(steps) >= cap:
            status = "capped"
            break
        ctx = snap.context()
        choice = rule.choose(ctx, h)
        if choice.element not in improving:
            raise RuleContractError("rule returned non-improving element")
        pos = improving.index(choice.element)
        rec = StepRecord(
            iteration=len(steps) + 1,
            state_key=engine.state_key(state),
            improving=[engine.label(e) for e in improving],
            indices=[snap.index(e) for e in improving],
            tiers=choice.tiers,
            chosen=choice.element,
            chosen_label=engine.label(choice.element),
            chosen_rank=pos + 1,
            memory=h,
            next_memory=choice.memory,
            objective=snap.objective,
            flags=tuple(choice.flags),
        )
        if probe is not None:
            rec.extra = dict(probe(state, snap))
        steps.append(rec)
        state = engine.apply(state, choice.element)
        h = choice.memory
        snap = engine.snapshot(state)
    final_extra = dict(probe(state, snap)) if probe is not None else {}
    return RunTrace(engine=engine.name, rule=rule.name, steps=steps, final=state,
                    status=status, initial_objective=initial_objective,
                    final_objective=snap.objective, final_extra=final_extra,
                    initial=start)
