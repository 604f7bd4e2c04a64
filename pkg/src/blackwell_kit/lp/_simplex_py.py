"""Pure-Python dense simplex (two-phase, Bland's rule).

This is the reference implementation of the kernels in ``_simplex.pyx``.
Both expose the same two functions with identical semantics:

``solve_standard(A, b, c, n_ub)``
    maximise ``c @ x`` subject to ``A[:n_ub] @ x <= b[:n_ub]``,
    ``A[n_ub:] @ x == b[n_ub:]`` and ``x >= 0``.
    Returns ``(status, objective, x)`` with status 0 optimal, 1 infeasible,
    2 unbounded, 3 iteration limit.

``fl_scores_2p(G1, G2, PI, lam1, lam2, A1, A2, budget_eq)``
    scores of the two-player enforcement program for every pair of rows of
    the mixed-action grids ``A1`` and ``A2`` (see ``scoring.fl_score``).
"""
from __future__ import annotations

import numpy as np

OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT = 0, 1, 2, 3

PIVOT_EPS = 1e-11
COST_EPS = 1e-11
FEAS_TOL = 1e-9


def _pivot(T, d, basis, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])
    dj = d[j]
    if dj != 0.0:
        d -= dj * T[r]
    basis[r] = j


def _run(T, d, basis, allowed, max_iter):
    """Bland-rule iterations on the tableau; returns a status code."""
    m = T.shape[0]
    for _ in range(max_iter):
        cand = np.nonzero((d[:-1] > COST_EPS) & allowed)[0]
        if cand.size == 0:
            return OPTIMAL
        j = int(cand[0])
        col = T[:, j]
        best_r, best_ratio = -1, np.inf
        for r in range(m):
            if col[r] > PIVOT_EPS:
                ratio = T[r, -1] / col[r]
                if ratio < best_ratio - 1e-14 or (abs(ratio - best_ratio) <= 1e-14 and basis[r] < basis[best_r]):
                    best_r, best_ratio = r, ratio
        if best_r < 0:
            return UNBOUNDED
        _pivot(T, d, basis, best_r, j)
        neg = T[:, -1] < 0.0
        if neg.any():
            T[neg & (T[:, -1] > -FEAS_TOL), -1] = 0.0
    return ITERATION_LIMIT


def solve_standard(A, b, c, n_ub, max_iter=10000):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    m = b.shape[0]
    n = c.shape[0]
    if m == 0:
        if np.any(c > COST_EPS):
            return UNBOUNDED, np.inf, np.zeros(n)
        return OPTIMAL, 0.0, np.zeros(n)
    A = A.reshape(m, n)
    needs_art = [r >= n_ub or b[r] < 0 for r in range(m)]
    n_art = sum(needs_art)
    width = n + n_ub + n_art + 1
    T = np.zeros((m, width))
    basis = np.zeros(m, dtype=np.int64)
    art = n + n_ub
    for r in range(m):
        T[r, :n] = A[r]
        if r < n_ub:
            T[r, n + r] = 1.0
        T[r, -1] = b[r]
        if b[r] < 0:
            T[r] = -T[r]
        if needs_art[r]:
            T[r, art] = 1.0
            basis[r] = art
            art += 1
        else:
            basis[r] = n + r
    is_art = np.zeros(width - 1, dtype=bool)
    is_art[n + n_ub:] = True

    # phase 1: maximise minus the sum of artificials
    d = np.zeros(width)
    if n_art:
        rows = [r for r in range(m) if needs_art[r]]
        d[:] = T[rows].sum(axis=0)
        d[is_art.nonzero()[0]] = 0.0
        status = _run(T, d, basis, np.ones(width - 1, dtype=bool), max_iter)
        if status == ITERATION_LIMIT:
            return status, np.nan, np.zeros(n)
        infeas = sum(T[r, -1] for r in range(m) if is_art[basis[r]])
        if infeas > FEAS_TOL * max(1.0, np.abs(b).max()):
            return INFEASIBLE, -np.inf, np.zeros(n)
        for r in range(m):
            if is_art[basis[r]]:
                cand = np.nonzero((np.abs(T[r, :-1]) > PIVOT_EPS) & ~is_art)[0]
                if cand.size:
                    _pivot(T, d, basis, r, int(cand[0]))

    # phase 2
    cost = np.zeros(width - 1)
    cost[:n] = c
    d = np.zeros(width)
    d[:-1] = cost
    for r in range(m):
        cb = cost[basis[r]]
        if cb != 0.0:
            d -= cb * T[r]
    status = _run(T, d, basis, ~is_art, max_iter)
    x = np.zeros(width - 1)
    for r in range(m):
        x[basis[r]] = T[r, -1]
    if status == UNBOUNDED:
        return status, np.inf, x[:n]
    if status == ITERATION_LIMIT:
        return status, np.nan, x[:n]
    return OPTIMAL, float(c @ x[:n]), x[:n]


def build_fl_2p(G1, G2, PI, lam1, lam2, a1, a2, budget_eq):
    """Standard-form data of the two-player enforcement program at one profile.

    Variables are ``x_i(y) = p - q`` split into nonnegative parts, ordered
    ``(i, y, sign)``.  Returns ``(A, b, c, n_ub, const)`` where ``const`` is
    ``lam . g(alpha)``.
    """
    m1, m2, ny = PI.shape
    nv = 4 * ny
    # player-0 deviation data against a2, player-1 data against a1
    P0 = np.einsum("j,kjy->ky", a2, PI)
    P1 = np.einsum("i,iky->ky", a1, PI)
    g0 = G1 @ a2
    g1 = a1 @ G2
    py = np.einsum("i,j,ijy->y", a1, a2, PI)
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for player, alpha, P, g in ((0, a1, P0, g0), (1, a2, P1, g1)):
        ref = int(np.nonzero(alpha > 0)[0][0])
        for k in range(alpha.shape[0]):
            if k == ref:
                continue
            row = np.zeros(nv)
            diff = P[k] - P[ref]
            base = player * ny
            row[2 * (base + np.arange(ny))] = diff
            row[2 * (base + np.arange(ny)) + 1] = -diff
            rhs = g[ref] - g[k]
            if alpha[k] > 0:
                eq_rows.append(row)
                eq_rhs.append(rhs)
            else:
                ub_rows.append(row)
                ub_rhs.append(rhs)
    for y in range(ny):
        row = np.zeros(nv)
        row[2 * y], row[2 * y + 1] = lam1, -lam1
        row[2 * (ny + y)], row[2 * (ny + y) + 1] = lam2, -lam2
        (eq_rows if budget_eq else ub_rows).append(row)
        (eq_rhs if budget_eq else ub_rhs).append(0.0)
    c = np.zeros(nv)
    c[0:2 * ny:2], c[1:2 * ny:2] = lam1 * py, -lam1 * py
    c[2 * ny::2], c[2 * ny + 1::2] = lam2 * py, -lam2 * py
    rows = ub_rows + eq_rows
    A = np.array(rows) if rows else np.zeros((0, nv))
    b = np.array(ub_rhs + eq_rhs)
    const = lam1 * float(a1 @ G1 @ a2) + lam2 * float(a1 @ G2 @ a2)
    return A, b, c, len(ub_rows), const


def fl_scores_2p(G1, G2, PI, lam1, lam2, A1, A2, budget_eq=False):
    G1 = np.asarray(G1, dtype=float)
    G2 = np.asarray(G2, dtype=float)
    PI = np.asarray(PI, dtype=float)
    A1 = np.atleast_2d(np.asarray(A1, dtype=float))
    A2 = np.atleast_2d(np.asarray(A2, dtype=float))
    out = np.empty((A1.shape[0], A2.shape[0]))
    for k1 in range(A1.shape[0]):
        for k2 in range(A2.shape[0]):
            A, b, c, n_ub, const = build_fl_2p(G1, G2, PI, lam1, lam2, A1[k1], A2[k2], budget_eq)
            status, val, _ = solve_standard(A, b, c, n_ub)
            if status == OPTIMAL:
                out[k1, k2] = const + val
            elif status == INFEASIBLE:
                out[k1, k2] = -np.inf
            elif status == UNBOUNDED:
                out[k1, k2] = np.inf
            else:
                out[k1, k2] = np.nan
    return out
