"""Exact rational simplex for the tie-sensitive minmax programs.

Same two-phase Bland's-rule tableau as the float kernels but over
``fractions.Fraction``; there are no tolerances.  Used where golden values
must come out as exact rationals (minmax values, cell optimisation).
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from . import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, LPResult


def _pivot(T, d, basis, r, j):
    piv = T[r][j]
    T[r] = [v / piv for v in T[r]]
    for k in range(len(T)):
        if k != r and T[k][j] != 0:
            f = T[k][j]
            T[k] = [a - f * b for a, b in zip(T[k], T[r])]
    if d[j] != 0:
        f = d[j]
        d[:] = [a - f * b for a, b in zip(d, T[r])]
    basis[r] = j


def _run(T, d, basis, allowed, max_iter):
    for _ in range(max_iter):
        j = next((k for k in range(len(d) - 1) if allowed[k] and d[k] > 0), None)
        if j is None:
            return OPTIMAL
        best = None
        for r in range(len(T)):
            if T[r][j] > 0:
                ratio = T[r][-1] / T[r][j]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[r] < basis[best[1]]):
                    best = (ratio, r)
        if best is None:
            return UNBOUNDED
        _pivot(T, d, basis, best[1], j)
    return ITERATION_LIMIT


def solve_standard_exact(A, b, c, n_ub, max_iter=100000):
    """Maximise ``c x`` s.t. first ``n_ub`` rows ``<=``, remaining rows ``==``, ``x >= 0``."""
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    c = [Fraction(v) for v in c]
    m, n = len(b), len(c)
    needs_art = [r >= n_ub or b[r] < 0 for r in range(m)]
    n_art = sum(needs_art)
    width = n + n_ub + n_art + 1
    T, basis = [], []
    art = n + n_ub
    for r in range(m):
        row = [Fraction(0)] * width
        row[:n] = A[r]
        if r < n_ub:
            row[n + r] = Fraction(1)
        row[-1] = b[r]
        if b[r] < 0:
            row = [-v for v in row]
        if needs_art[r]:
            row[art] = Fraction(1)
            basis.append(art)
            art += 1
        else:
            basis.append(n + r)
        T.append(row)
    is_art = [k >= n + n_ub for k in range(width - 1)]
    if n_art:
        d = [Fraction(0)] * width
        for r in range(m):
            if needs_art[r]:
                d = [a + v for a, v in zip(d, T[r])]
        for k in range(n + n_ub, width - 1):
            d[k] = Fraction(0)
        status = _run(T, d, basis, [True] * (width - 1), max_iter)
        if status != OPTIMAL:
            return status, None, None
        if any(T[r][-1] != 0 for r in range(m) if is_art[basis[r]]):
            return INFEASIBLE, None, None
        for r in range(m):
            if is_art[basis[r]]:
                j = next((k for k in range(n + n_ub) if T[r][k] != 0), None)
                if j is not None:
                    _pivot(T, d, basis, r, j)
    d = [Fraction(0)] * width
    d[:n] = c
    for r in range(m):
        if basis[r] < n and c[basis[r]] != 0:
            cb = c[basis[r]]
            d = [a - cb * v for a, v in zip(d, T[r])]
    status = _run(T, d, basis, [not a for a in is_art], max_iter)
    if status != OPTIMAL:
        return status, None, None
    x = [Fraction(0)] * n
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = T[r][-1]
    return OPTIMAL, sum(ci * xi for ci, xi in zip(c, x)), x


def linprog_exact(c, A_ub=(), b_ub=(), A_eq=(), b_eq=(), free: Sequence[bool] | None = None,
                  maximize: bool = True) -> LPResult:
    """Exact counterpart of ``blackwell_kit.lp.linprog`` (lower bounds are 0)."""
    c = [Fraction(v) for v in c]
    n = len(c)
    free = [False] * n if free is None else list(free)
    cols = []
    for k in range(n):
        cols.append((k, 1))
        if free[k]:
            cols.append((k, -1))

    def expand(row):
        return [Fraction(row[k]) * s for k, s in cols]

    A = [expand(r) for r in A_ub] + [expand(r) for r in A_eq]
    b = [Fraction(v) for v in b_ub] + [Fraction(v) for v in b_eq]
    sign = 1 if maximize else -1
    cc = [sign * v for v in expand(c)]
    status, obj, z = solve_standard_exact(A, b, cc, len(A_ub))
    if status == OPTIMAL:
        x = [Fraction(0)] * n
        for (k, s), zj in zip(cols, z):
            x[k] += s * zj
        return LPResult(status, sum(ci * xi for ci, xi in zip(c, x)), x)
    if status == INFEASIBLE:
        return LPResult(status, None, None)
    if status == UNBOUNDED:
        return LPResult(status, None, None)
    return LPResult(ITERATION_LIMIT, None, None)
