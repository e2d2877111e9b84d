"""Exact Gaussian elimination over the rationals."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class SingularMatrixError(ValueError):
    pass


def _to_rows(a: Sequence[Sequence]) -> list:
    return [[Fraction(x) for x in row] for row in a]


def _pivot_row(rows: list, col: int, start: int):
    # partial pivoting by exact magnitude; ties go to the lowest row
    best, best_abs = None, Fraction(0)
    for r in range(start, len(rows)):
        v = abs(rows[r][col])
        if v > best_abs:
            best, best_abs = r, v
    return best


def rank(a: Sequence[Sequence]) -> int:
    rows = _to_rows(a)
    if not rows:
        return 0
    ncols = len(rows[0])
    r = 0
    for col in range(ncols):
        p = _pivot_row(rows, col, r)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        piv = rows[r][col]
        for i in range(r + 1, len(rows)):
            f = rows[i][col]
            if f:
                f /= piv
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        r += 1
        if r == len(rows):
            break
    return r


def solve(a: Sequence[Sequence], b: Sequence) -> list:
    """Solve the square system a x = b exactly."""
    n = len(a)
    rows = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(a, b)]
    if any(len(row) != n + 1 for row in rows) or len(rows) != n:
        raise ValueError("solve needs a square system")
    for col in range(n):
        p = _pivot_row(rows, col, col)
        if p is None:
            raise SingularMatrixError("matrix is singular")
        rows[col], rows[p] = rows[p], rows[col]
        piv = rows[col][col]
        prow = rows[col]
        for i in range(col + 1, n):
            f = rows[i][col]
            if f:
                f /= piv
                ri = rows[i]
                for j in range(col, n + 1):
                    if prow[j]:
                        ri[j] -= f * prow[j]
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = rows[i][n]
        for j in range(i + 1, n):
            if rows[i][j]:
                s -= rows[i][j] * x[j]
        x[i] = s / rows[i][i]
    return x


def solve_transpose(a: Sequence[Sequence], b: Sequence) -> list:
    """Solve y^T a = b^T, i.e. a^T y = b."""
    n = len(a)
    at = [[a[i][j] for i in range(n)] for j in range(n)]
    return solve(at, b)


def inverse(a: Sequence[Sequence]) -> list:
    n = len(a)
    cols = []
    for j in range(n):
        e = [Fraction(int(i == j)) for i in range(n)]
        cols.append(solve(a, e))
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def mat_vec(a: Sequence[Sequence], x: Sequence) -> list:
    return [sum((Fraction(aij) * xj for aij, xj in zip(row, x)), Fraction(0)) for row in a]


def dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(u, v)), Fraction(0))
