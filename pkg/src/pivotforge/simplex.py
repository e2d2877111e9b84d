"""Exact-rational primal simplex in equality form, max c^T x s.t. Ax = b, x >= 0.

Variables are numbered 0..n-1 internally; their global (Bland) index is the
position plus one.  Degenerate pivots are rejected rather than resolved.
"""
from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Optional, Sequence

from . import linalg
from .trace import DEFAULT_CAP, EngineError, RunTrace, run_improvement, state_digest


class DegenerateStepError(EngineError):
    pass


class UnboundedError(EngineError):
    pass


class InfeasibleBasisError(EngineError):
    pass


class LinearProgram:
    def __init__(self, A: Sequence[Sequence], b: Sequence, c: Sequence,
                 names: Optional[Sequence[str]] = None, check_rank: bool = True):
        self.A = tuple(tuple(Fraction(x) for x in row) for row in A)
        self.b = tuple(Fraction(x) for x in b)
        self.c = tuple(Fraction(x) for x in c)
        self.m = len(self.A)
        self.n = len(self.c)
        if len(self.b) != self.m or any(len(row) != self.n for row in self.A):
            raise ValueError("inconsistent LP dimensions")
        if self.m > self.n:
            raise ValueError("need m <= n")
        self.names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(self.n))
        if check_rank and linalg.rank(self.A) != self.m:
            raise ValueError("A must have full row rank")
        self.meta = {}

    def column(self, j: int) -> list:
        return [row[j] for row in self.A]

    def basis_matrix(self, basis: Sequence[int]) -> list:
        return [[row[j] for j in basis] for row in self.A]


def _basis(lp, basis) -> tuple:
    basis = tuple(sorted(basis))
    if len(basis) != lp.m or len(set(basis)) != lp.m or not all(0 <= j < lp.n for j in basis):
        raise ValueError(f"basis must be {lp.m} distinct indices in 0..{lp.n - 1}")
    return basis


def bfs_from_basis(lp: LinearProgram, basis) -> tuple:
    """(x, feasible) for the basic solution of ``basis``."""
    basis = _basis(lp, basis)
    try:
        xb = linalg.solve(lp.basis_matrix(basis), lp.b)
    except linalg.SingularMatrixError as exc:
        raise linalg.SingularMatrixError("basis columns are singular") from exc
    x = [Fraction(0)] * lp.n
    for j, v in zip(basis, xb):
        x[j] = v
    return x, all(v >= 0 for v in xb)


def _duals(lp, basis):
    return linalg.solve_transpose(lp.basis_matrix(basis), [lp.c[j] for j in basis])


def reduced_costs(lp: LinearProgram, basis) -> dict:
    """Reduced cost of every non-basic variable."""
    basis = _basis(lp, basis)
    y = _duals(lp, basis)
    bset = set(basis)
    return {j: lp.c[j] - linalg.dot(y, lp.column(j)) for j in range(lp.n) if j not in bset}


def improving_indices(lp: LinearProgram, basis) -> list:
    return sorted(j for j, r in reduced_costs(lp, basis).items() if r > 0)


def edge_direction(lp: LinearProgram, basis, entering: int) -> list:
    """Full-length direction (x_B moves by -A_B^{-1} a_j, x_j by +1)."""
    basis = _basis(lp, basis)
    d = linalg.solve(lp.basis_matrix(basis), lp.column(entering))
    eta = [Fraction(0)] * lp.n
    for j, v in zip(basis, d):
        eta[j] = -v
    eta[entering] = Fraction(1)
    return eta


def _ratio_test(lp, basis, x, entering):
    eta = edge_direction(lp, basis, entering)
    best, leave, tie = None, None, False
    for j in basis:
        if eta[j] < 0:
            r = x[j] / -eta[j]
            if best is None or r < best:
                best, leave, tie = r, j, False
            elif r == best:
                tie = True
    if best is None:
        raise UnboundedError(f"LP is unbounded along variable {lp.names[entering]}")
    if best == 0 or tie:
        raise DegenerateStepError("degenerate step")
    return leave, best, eta


def pivot(lp: LinearProgram, basis, entering: int) -> tuple:
    """Basis after ``entering`` enters; requires a positive reduced cost."""
    basis = _basis(lp, basis)
    rc = reduced_costs(lp, basis)
    if entering not in rc or rc[entering] <= 0:
        raise ValueError(f"variable {lp.names[entering] if 0 <= entering < lp.n else entering} "
                         f"is not improving")
    x, feasible = bfs_from_basis(lp, basis)
    if not feasible:
        raise InfeasibleBasisError("pivot needs a feasible basis")
    leave, _, _ = _ratio_test(lp, basis, x, entering)
    return tuple(sorted((set(basis) - {leave}) | {entering}))


def objective_value(lp: LinearProgram, x) -> Fraction:
    return linalg.dot(lp.c, x)


class _LPContext:
    def __init__(self, snap):
        self._snap = snap
        self.elements = snap.improving
        self.n = snap.lp.n
        self.objective_vector = snap.lp.c

    def index(self, j):
        return j + 1

    def reduced_cost(self, j):
        return self._snap.rc[j]

    def direction(self, j):
        return self._snap.direction(j)

    def objective_after(self, j):
        snap = self._snap
        _, step, eta = _ratio_test(snap.lp, snap.basis, snap.x, j)
        return snap.objective + step * snap.rc[j]


class _LPSnapshot:
    def __init__(self, lp, basis):
        self.lp = lp
        self.basis = basis
        self.x, feasible = bfs_from_basis(lp, basis)
        if not feasible:
            raise InfeasibleBasisError("visited an infeasible basis")
        self.rc = reduced_costs(lp, basis)
        self.improving = sorted(j for j, r in self.rc.items() if r > 0)
        self.objective = objective_value(lp, self.x)
        self._dirs = {}

    def index(self, j):
        return j + 1

    def direction(self, j):
        if j not in self._dirs:
            self._dirs[j] = edge_direction(self.lp, self.basis, j)
        return self._dirs[j]

    def context(self):
        return _LPContext(self)


class SimplexEngine:
    name = "simplex"

    def __init__(self, lp: LinearProgram, checks: bool = True):
        self.lp = lp
        self.n_elements = lp.n
        self.checks = checks
        self._last = None

    def snapshot(self, basis):
        snap = _LPSnapshot(self.lp, basis)
        if self.checks:
            y = _duals(self.lp, basis)
            for j in basis:
                if self.lp.c[j] - linalg.dot(y, self.lp.column(j)) != 0:
                    raise EngineError("basic variable with non-zero reduced cost")
            if self._last is not None:
                if not snap.objective > self._last.objective:
                    raise EngineError("objective did not increase")
                if len(set(basis) ^ set(self._last.basis)) != 2:
                    raise EngineError("pivot did not swap exactly one variable")
            self._last = snap
        return snap

    def apply(self, basis, j):
        return pivot(self.lp, basis, j)

    def state_key(self, basis):
        return state_digest(basis)

    def label(self, j):
        return self.lp.names[j]


def simplex(lp: LinearProgram, basis0, rule, cap: int = DEFAULT_CAP, probe=None,
            checks: bool = True) -> RunTrace:
    basis0 = _basis(lp, basis0)
    _, feasible = bfs_from_basis(lp, basis0)
    if not feasible:
        raise InfeasibleBasisError("initial basis is infeasible")
    return run_improvement(SimplexEngine(lp, checks), basis0, rule, cap, probe)


def feasible_bases(lp: LinearProgram, limit_n: int = 24):
    if lp.n > limit_n:
        raise ValueError(f"n = {lp.n} too large for enumeration (limit {limit_n})")
    for basis in itertools.combinations(range(lp.n), lp.m):
        try:
            x, ok = bfs_from_basis(lp, basis)
        except linalg.SingularMatrixError:
            continue
        if ok:
            yield basis, x


def brute_force_optimum(lp: LinearProgram, limit_n: int = 24) -> Fraction:
    """Best objective over all feasible bases."""
    best = None
    for _, x in feasible_bases(lp, limit_n):
        v = objective_value(lp, x)
        if best is None or v > best:
            best = v
    if best is None:
        raise InfeasibleBasisError("LP has no feasible basis")
    return best


def is_nondegenerate(lp: LinearProgram) -> bool:
    """Every feasible basis has a strictly positive basic part."""
    for basis, x in feasible_bases(lp):
        if any(x[j] == 0 for j in basis):
            return False
    return True


def random_nondegenerate_lp(rng: random.Random, m: int, n: int, coef: int = 6, tries: int = 200):
    """Random bounded non-degenerate LP with a known feasible starting basis.

    Row 0 has positive coefficients, which bounds the feasible region.
    Returns (lp, basis0).
    """
    for _ in range(tries):
        A = [[rng.randint(1, coef) for _ in range(n)]]
        for _ in range(m - 1):
            A.append([rng.randint(-coef, coef) for _ in range(n)])
        basis0 = tuple(sorted(rng.sample(range(n), m)))
        x0 = [0] * n
        for j in basis0:
            x0[j] = rng.randint(1, coef)
        b = [sum(a * x for a, x in zip(row, x0)) for row in A]
        c = [rng.randint(-coef, coef) for _ in range(n)]
        if linalg.rank(A) != m or linalg.rank([[row[j] for j in basis0] for row in A]) != m:
            continue
        lp = LinearProgram(A, b, c)
        if is_nondegenerate(lp):
            return lp, basis0
    raise RuntimeError("could not draw a non-degenerate LP")
