from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pivotforge.ordering import (BOTTOM, Ordering, ValuationMultiset, compare_valuations,
                                 eval_multiset, format_rational, multiset_insert,
                                 parse_rational, power_term)

M = ValuationMultiset


def test_eval_examples():
    assert eval_multiset(M(), 4) == 0
    assert eval_multiset(M([3]), 4) == -64
    assert eval_multiset(M([3, 6]), 4) == -64 + 4096 == 4032


def test_eval_rejects_bad_base():
    with pytest.raises(ValueError):
        eval_multiset(M([1]), 0)


def test_compare_counter_game_examples():
    # val(a1) = {3} below val(b1) = {4}; after the switch {3,6} is above {4}
    assert compare_valuations(M([3]), M([4]), 4) is Ordering.LESS
    assert compare_valuations(M([3, 6]), M([4]), 4) is Ordering.GREATER
    assert compare_valuations(M([5]), M([5]), 9) is Ordering.EQUAL


def test_insert_examples():
    assert multiset_insert(M(), 3) == M([3])
    assert multiset_insert(M([3]), 3) == M([3, 3])
    assert multiset_insert(M([4]), BOTTOM) == M([4])


def test_bottom_never_stored_and_below_everything():
    assert len(M([BOTTOM, 2, BOTTOM])) == 1
    assert power_term(BOTTOM, 7) == 0
    assert BOTTOM < -10 ** 9 and not BOTTOM > 0


def test_rationals_round_trip():
    assert parse_rational("6/4") == Fraction(3, 2)
    assert format_rational(Fraction(-3, 6)) == "-1/2"
    with pytest.raises(TypeError):
        parse_rational(True)


priorities = st.lists(st.integers(0, 12), max_size=8)


@given(priorities, priorities, st.integers(1, 9))
def test_compare_matches_evaluation(a, b, t):
    s1, s2 = M(a), M(b)
    # oracle: direct signed-power sums, computed independently
    e1 = sum((-t) ** p for p in a)
    e2 = sum((-t) ** p for p in b)
    assert compare_valuations(s1, s2, t) is Ordering.of(e1, e2)


@given(priorities, st.one_of(st.integers(0, 12), st.just(BOTTOM)), st.integers(1, 9))
def test_insert_adds_one_term(a, p, t):
    s = M(a)
    assert eval_multiset(multiset_insert(s, p), t) == eval_multiset(s, t) + power_term(p, t)


@given(priorities, priorities, st.integers(1, 9))
def test_order_is_antisymmetric(a, b, t):
    o1 = compare_valuations(M(a), M(b), t)
    o2 = compare_valuations(M(b), M(a), t)
    assert o1.value == -o2.value
