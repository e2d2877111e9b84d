import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pivotforge.lowerbound.decompose import (ClusteredCertificate, DecomposeError,
                                              DispersedCertificate, cycle_sequence, decompose,
                                              double_intervals, verify, verify_clustered,
                                              verify_dispersed)
from pivotforge.rules import constant_selector, cyclic_selector

from oracles import _disjoint_cover, _span, oracle, oracle_dispersed


def test_single_element_examples():
    c = decompose([1], 8, 2)
    assert isinstance(c, DispersedCertificate) and (c.psi, c.psi + c.xi) == (1, 2)
    c = decompose([3], 8, 2)
    assert isinstance(c, DispersedCertificate) and (c.psi, c.psi + c.xi) == (2, 3)


def test_verifier_rejections():
    assert not verify_clustered(ClusteredCertificate(((1, 3), (3, 2))), [1, 4], 16, 2)
    assert not verify_dispersed(DispersedCertificate(1, 3, ()), [1, 4], 16, 2)
    assert not oracle_dispersed(1, 3, (), [1, 4], 16, 2)


def test_preconditions():
    with pytest.raises(DecomposeError):
        decompose([1], 7, 2)
    with pytest.raises(DecomposeError):
        decompose([1, 2, 3], 16, 2)
    with pytest.raises(DecomposeError):
        decompose([17], 16, 2)


@pytest.mark.parametrize("m,ell", [(8, 2), (12, 3), (16, 3)])
def test_exhaustive_round_trip(m, ell):
    for n in range(1, ell + 1):
        for seq in itertools.product(range(1, m + 1), repeat=n):
            cert = decompose(list(seq), m, ell)
            assert verify(cert, seq, m, ell)
            assert oracle(cert, seq, m, ell), (seq, cert)


@given(st.data())
def test_decompose_round_trip_larger(data):
    ell = data.draw(st.integers(1, 6))
    m = data.draw(st.integers(4 * ell, 80))
    seq = data.draw(st.lists(st.integers(1, m), min_size=1, max_size=ell))
    cert = decompose(seq, m, ell)
    assert oracle(cert, seq, m, ell)


@given(st.lists(st.integers(1, 30), min_size=1, max_size=6))
def test_double_intervals(seq):
    ivs = double_intervals(seq, 1, 40)
    spans = [_span(p, q) for p, q in ivs]
    assert _disjoint_cover(spans, set(seq), 40)
    for p, q in ivs:
        assert q + 1 == 2 * sum(1 for i in seq if p <= i <= p + q)


def test_cycle_sequence_examples():
    cs = cycle_sequence(constant_selector(1), 36)
    assert (cs.g, cs.ell_prime, cs.ell_dprime) == ((1,), 1, 1)
    cs = cycle_sequence(cyclic_selector([1, lambda k: k]), 48)
    assert (cs.g, cs.ell_prime, cs.ell_dprime) == ((1, 16), 2, 1)
    cs = cycle_sequence(cyclic_selector([lambda k: k, 1, 2], reentry=2), 72)
    assert cs.prefix == (24,) and cs.cycle == (1, 2) and cs.ell_dprime == 2
    with pytest.raises(DecomposeError):
        cycle_sequence(constant_selector(1), 35)


def test_random_five_state_selector_visits_unique_states():
    sel = cyclic_selector([3, 7, 1, 5, 2], reentry=3)
    cs = cycle_sequence(sel, 72)
    # direct simulation
    h, seen = 1, []
    while h not in seen:
        seen.append(h)
        h = sel(24, 72, h)[1]
    assert list(cs.h) == seen and len(set(cs.h)) == len(cs.h)
    assert cs.ell_dprime == seen.index(h) + 1 == 3
