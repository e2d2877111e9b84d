"""Priorities, valuation multisets and the signed-power order on them.

A valuation is a multiset of integer priorities.  Two valuations are compared
by evaluating ``sum((-t) ** p)`` exactly with Python integers, where ``t`` is
the number of non-sink vertices of the game.
"""
from __future__ import annotations

import enum
from collections import Counter
from fractions import Fraction
from typing import Iterable, Mapping, Union

Rational = Fraction


class _Bottom:
    """The bottom priority (minus infinity).  Singleton."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BOTTOM"

    def __lt__(self, other) -> bool:
        return other is not self

    def __le__(self, other) -> bool:
        return True

    def __gt__(self, other) -> bool:
        return False

    def __ge__(self, other) -> bool:
        return other is self

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()
Priority = Union[int, _Bottom]


class Ordering(enum.Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1

    @classmethod
    def of(cls, a, b) -> "Ordering":
        if a < b:
            return cls.LESS
        if a > b:
            return cls.GREATER
        return cls.EQUAL


def power_term(p: Priority, t: int) -> int:
    """(-t)**p, with the bottom priority contributing 0."""
    if p is BOTTOM:
        return 0
    return (-t) ** p


class ValuationMultiset:
    """Immutable multiset of integer priorities.

    The bottom priority is never stored.
    """

    __slots__ = ("_counts", "_hash")

    def __init__(self, items: Iterable[Priority] | Mapping[int, int] = ()):
        if isinstance(items, Mapping):
            counts = {int(p): int(c) for p, c in items.items() if c > 0}
        else:
            counts = Counter(p for p in items if p is not BOTTOM)
        for p in counts:
            if isinstance(p, bool) or not isinstance(p, int):
                raise TypeError(f"priority must be an int, got {p!r}")
        self._counts = dict(sorted(counts.items()))
        self._hash = None

    @property
    def counts(self) -> dict:
        return dict(self._counts)

    def elements(self) -> list:
        out = []
        for p, c in self._counts.items():
            out.extend([p] * c)
        return out

    def __len__(self) -> int:
        return sum(self._counts.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, ValuationMultiset) and self._counts == other._counts

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._counts.items()))
        return self._hash

    def __repr__(self) -> str:
        return "{" + ",".join(str(p) for p in self.elements()) + "}"


def eval_multiset(s: ValuationMultiset, t: int) -> int:
    """Exact value of sum over s of (-t)**p."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return sum(c * (-t) ** p for p, c in s._counts.items())


def compare_valuations(s1: ValuationMultiset, s2: ValuationMultiset, t: int) -> Ordering:
    return Ordering.of(eval_multiset(s1, t), eval_multiset(s2, t))


def multiset_insert(s: ValuationMultiset, p: Priority) -> ValuationMultiset:
    if p is BOTTOM:
        return s
    counts = dict(s._counts)
    counts[p] = counts.get(p, 0) + 1
    return ValuationMultiset(counts)


def parse_rational(value) -> Fraction:
    """Accept ints, Fractions and "num/den" strings."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as an exact rational")


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"
