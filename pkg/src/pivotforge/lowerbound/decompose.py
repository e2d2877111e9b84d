"""Clustered/dispersed certificates for selector output sequences.

Positions are 1-based integers in [1, m].  An interval is stored as (p, q)
and covers p..p+q.  ``decompose`` follows the inductive construction
(single element, one-sided cases, and the fixed-point split); the two
verifiers check the definitions directly and share no code with it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..rules import IndexSelector


class DecomposeError(ValueError):
    pass


@dataclass(frozen=True)
class ClusteredCertificate:
    intervals: tuple                 # ((p, q), ...)
    kind: str = "clustered"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "intervals": [list(iv) for iv in self.intervals]}


@dataclass(frozen=True)
class DispersedCertificate:
    psi: int
    xi: int
    intervals: tuple
    kind: str = "dispersed"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "psi": self.psi, "xi": self.xi,
                "intervals": [list(iv) for iv in self.intervals]}


# -------------------------------------------------------------- verifiers

def _members(seq, p, q):
    return [i for i in seq if p <= i <= p + q]


def _disjoint_inside(intervals, m) -> bool:
    spans = sorted(intervals)
    for p, q in spans:
        if not (isinstance(p, int) and isinstance(q, int)) or q < 0 or p < 1 or p + q > m:
            return False
    return all(spans[j][0] + spans[j][1] < spans[j + 1][0] for j in range(len(spans) - 1))


def _covers(intervals, seq) -> bool:
    return all(any(p <= i <= p + q for p, q in intervals) for i in seq)


def _basic_ok(seq, m, ell) -> bool:
    return m >= 4 * ell and len(seq) <= ell and all(1 <= i <= m for i in seq)


def verify_clustered(cert, seq, m: int, ell: int) -> bool:
    seq = list(seq)
    if not isinstance(cert, ClusteredCertificate) or not _basic_ok(seq, m, ell):
        return False
    ivs = list(cert.intervals)
    # (i)
    if not ivs or not _disjoint_inside(ivs, m) or not _covers(ivs, seq):
        return False
    # (ii)
    d = m // (2 * ell)
    for p, q in ivs:
        K = set(_members(seq, p, q))
        if not K:
            return False
        if q + 1 < d * min(max(K) - p + 1, p + q - min(K) + 1):
            return False
    # (iii)
    return sum(q + 1 for _, q in ivs) + 2 * (ell - len(seq)) <= m


def verify_dispersed(cert, seq, m: int, ell: int) -> bool:
    seq = list(seq)
    if not isinstance(cert, DispersedCertificate) or not _basic_ok(seq, m, ell):
        return False
    psi, xi, ivs = cert.psi, cert.xi, list(cert.intervals)
    if not isinstance(xi, int) or xi < 1:
        return False
    # (i)
    if not _disjoint_inside(ivs + [(psi, xi)], m) or not _covers(ivs + [(psi, xi)], seq):
        return False
    # (ii)
    for p, q in ivs:
        if q < 2 * len(_members(seq, p, q)) - 1:
            return False
    # (iii)
    K = set(_members(seq, psi, xi))
    if K != {psi} and K != {psi + xi}:
        return False
    # (iv)
    d = m // (2 * ell)
    if xi < d * len([i for i in seq if i in K]) - 1:
        return False
    # (v)
    return (xi + 1) + sum(q + 1 for _, q in ivs) + 2 * (ell - len(seq)) <= m


def verify(cert, seq, m: int, ell: int) -> bool:
    if isinstance(cert, ClusteredCertificate):
        return verify_clustered(cert, seq, m, ell)
    return verify_dispersed(cert, seq, m, ell)


# ------------------------------------------------------------ construction

def double_intervals(seq, lo: int, hi: int) -> list:
    """Disjoint intervals inside [lo, hi] covering ``seq`` where each
    interval is exactly twice as long as the number of entries it holds."""
    counts = {}
    for i in seq:
        counts[i] = counts.get(i, 0) + 1
    if 2 * len(seq) > hi - lo + 1:
        raise DecomposeError("region too short for doubled intervals")
    blocks = [[v, 2 * c] for v, c in sorted(counts.items())]   # [start, length]
    while True:
        changed = False
        out = []
        for start, length in blocks:
            if out and out[-1][0] + out[-1][1] > start:
                out[-1][1] += length
                changed = True
            else:
                out.append([start, length])
        for blk in out:
            if blk[0] + blk[1] - 1 > hi:
                blk[0] = hi - blk[1] + 1
                changed = True
        blocks = out
        if not changed:
            break
    return [(s, n - 1) for s, n in blocks]


def decompose(seq, m: int, ell: int):
    """Return a certificate showing ``seq`` is (m, ell)-clustered or -dispersed."""
    seq = list(seq)
    if m < 4 * ell:
        raise DecomposeError(f"need m >= 4*ell (m={m}, ell={ell})")
    if not 1 <= len(seq) <= ell:
        raise DecomposeError(f"sequence length must be in 1..{ell}")
    if any(not isinstance(i, int) or not 1 <= i <= m for i in seq):
        raise DecomposeError(f"sequence entries must lie in 1..{m}")
    cert = _decompose(seq, 1, m, ell)
    if not verify(cert, seq, m, ell):
        raise DecomposeError(f"internal error: certificate {cert} fails verification")
    return cert


def _shift(cert, off):
    if isinstance(cert, ClusteredCertificate):
        return ClusteredCertificate(tuple((p + off, q) for p, q in cert.intervals))
    return DispersedCertificate(cert.psi + off, cert.xi,
                                tuple((p + off, q) for p, q in cert.intervals))


def _decompose(seq, lo, hi, ell):
    """Certificate for ``seq`` inside [lo, hi] with budget ``ell``."""
    m = hi - lo + 1
    d = m // (2 * ell)
    loc = [i - lo + 1 for i in seq]
    n = len(loc)
    if n == 1:
        i1 = loc[0]
        psi = i1 if i1 <= d else i1 - d + 1
        return _shift(DispersedCertificate(psi, d - 1, ()), lo - 1)
    lo_i, hi_i = min(loc), max(loc)
    lam, lam2 = loc.count(lo_i), loc.count(hi_i)
    if hi_i <= 2 * n:
        return ClusteredCertificate(((lo, 2 * d * n - 1),))
    if lo_i >= m - 2 * n + 1:
        return ClusteredCertificate(((hi - 2 * d * n + 1, 2 * d * n - 1),))
    if lam * d < lo_i:
        rest = [i for i in seq if i != lo + lo_i - 1]
        ivs = double_intervals(rest, lo + lo_i, hi) if rest else []
        return DispersedCertificate(lo + lo_i - lam * d, lam * d - 1, tuple(ivs))
    if hi_i < m - lam2 * d + 1:
        rest = [i for i in seq if i != lo + hi_i - 1]
        ivs = double_intervals(rest, lo, lo + hi_i - 2) if rest else []
        return DispersedCertificate(lo + hi_i - 1, lam2 * d - 1, tuple(ivs))
    # split at a fixed point of eta -> |{c : i_c <= 2 d eta}|
    eta = next((e for e in range(lam, n - lam2 + 1)
                if sum(1 for i in loc if i <= 2 * d * e) == e), None)
    if eta is None:
        raise DecomposeError("no fixed point for the split (should not happen)")
    cut = lo + 2 * d * eta - 1
    left = [i for i in seq if i <= cut]
    right = [i for i in seq if i > cut]
    c1 = _decompose(left, lo, cut, eta)
    c2 = _decompose(right, cut + 1, hi, ell - eta)
    if isinstance(c1, DispersedCertificate):
        ivs = list(c1.intervals) + double_intervals(right, cut + 1, hi)
        return DispersedCertificate(c1.psi, c1.xi, tuple(ivs))
    if isinstance(c2, DispersedCertificate):
        ivs = double_intervals(left, lo, cut) + list(c2.intervals)
        return DispersedCertificate(c2.psi, c2.xi, tuple(ivs))
    return ClusteredCertificate(tuple(c1.intervals) + tuple(c2.intervals))


# ------------------------------------------------------------- selector cycles

@dataclass(frozen=True)
class CycleSequence:
    """Outputs g_1..g_{l'} and memory states h_1..h_{l'} of a selector held
    at a fixed improving count; state h_{l'} leads back to h_{l''}."""

    g: tuple
    h: tuple
    ell_prime: int
    ell_dprime: int

    @property
    def prefix(self) -> tuple:
        return self.g[:self.ell_dprime - 1]

    @property
    def cycle(self) -> tuple:
        return self.g[self.ell_dprime - 1:]

    def to_dict(self) -> dict:
        return {"g": list(self.g), "h": list(self.h), "ell_prime": self.ell_prime,
                "ell_dprime": self.ell_dprime}


def cycle_sequence(p: IndexSelector, m_i: int, initial_memory: int = 1) -> CycleSequence:
    if m_i % 3:
        raise DecomposeError("m_i must be divisible by 3")
    k = m_i // 3
    g, h = [], [initial_memory]
    seen = {initial_memory: 1}
    while True:
        rank, nxt = p(k, m_i, h[-1])
        if not isinstance(rank, int) or not 1 <= rank <= k:
            raise DecomposeError(f"selector returned rank {rank} outside 1..{k}")
        g.append(rank)
        if nxt in seen:
            return CycleSequence(tuple(g), tuple(h), len(h), seen[nxt])
        seen[nxt] = len(h) + 1
        h.append(nxt)
