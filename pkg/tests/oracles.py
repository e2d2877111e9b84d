"""Independent oracles shared by the unit and acceptance tests."""
from pivotforge.lowerbound.decompose import ClusteredCertificate


# Oracle: the two definitions written over explicit position sets.

def _span(p, q):
    return set(range(p, p + q + 1))


def _disjoint_cover(spans, I, m):
    union = set()
    for sp in spans:
        if not sp or min(sp) < 1 or max(sp) > m or union & sp:
            return False
        union |= sp
    return I <= union


def oracle_clustered(ivs, seq, m, ell):
    I, d = set(seq), m // (2 * ell)
    if not ivs or not _disjoint_cover([_span(p, q) for p, q in ivs], I, m):
        return False
    for p, q in ivs:
        K = _span(p, q) & I
        if not K or q + 1 < d * min(max(K) - p + 1, p + q - min(K) + 1):
            return False
    return sum(q + 1 for _, q in ivs) + 2 * (ell - len(seq)) <= m


def oracle_dispersed(psi, xi, ivs, seq, m, ell):
    I, d = set(seq), m // (2 * ell)
    if xi < 0 or not _disjoint_cover([_span(psi, xi)] + [_span(p, q) for p, q in ivs], I, m):
        return False
    for p, q in ivs:
        if q < 2 * sum(1 for i in seq if p <= i <= p + q) - 1:
            return False
    K = _span(psi, xi) & I
    if K not in ({psi}, {psi + xi}):
        return False
    if xi < d * sum(1 for i in seq if i in K) - 1:
        return False
    return (xi + 1) + sum(q + 1 for _, q in ivs) + 2 * (ell - len(seq)) <= m


def oracle(cert, seq, m, ell):
    if isinstance(cert, ClusteredCertificate):
        return oracle_clustered(cert.intervals, seq, m, ell)
    return oracle_dispersed(cert.psi, cert.xi, cert.intervals, seq, m, ell)
