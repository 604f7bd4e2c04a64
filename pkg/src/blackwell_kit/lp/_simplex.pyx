# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense simplex kernels.

Same algorithm and return conventions as ``_simplex_py``; see that module for
the contract.  The batched enforcement-program routine builds each small LP
directly in C memory so that sweeping a grid of mixed profiles does not pay
Python call overhead per LP.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport fabs, INFINITY, NAN

cnp.import_array()

cdef double PIVOT_EPS = 1e-11
cdef double COST_EPS = 1e-11
cdef double FEAS_TOL = 1e-9

cdef enum:
    OPTIMAL = 0
    INFEASIBLE = 1
    UNBOUNDED = 2
    ITERATION_LIMIT = 3


cdef void _pivot(double* T, double* d, long* basis, int m, int w, int r, int j) nogil:
    cdef int k, c
    cdef double piv = T[r * w + j]
    cdef double f
    for c in range(w):
        T[r * w + c] /= piv
    for k in range(m):
        if k != r:
            f = T[k * w + j]
            if f != 0.0:
                for c in range(w):
                    T[k * w + c] -= f * T[r * w + c]
    f = d[j]
    if f != 0.0:
        for c in range(w):
            d[c] -= f * T[r * w + c]
    basis[r] = j


cdef int _run(double* T, double* d, long* basis, int m, int w, int n_allowed, int max_iter) nogil:
    # columns 0..n_allowed-1 may enter the basis
    cdef int it, j, r, best_r
    cdef double ratio, best_ratio, a
    for it in range(max_iter):
        j = -1
        for r in range(n_allowed):
            if d[r] > COST_EPS:
                j = r
                break
        if j < 0:
            return OPTIMAL
        best_r = -1
        best_ratio = INFINITY
        for r in range(m):
            a = T[r * w + j]
            if a > PIVOT_EPS:
                ratio = T[r * w + w - 1] / a
                if ratio < best_ratio - 1e-14:
                    best_r = r
                    best_ratio = ratio
                elif fabs(ratio - best_ratio) <= 1e-14 and basis[r] < basis[best_r]:
                    best_r = r
                    best_ratio = ratio
        if best_r < 0:
            return UNBOUNDED
        _pivot(T, d, basis, m, w, best_r, j)
        for r in range(m):
            a = T[r * w + w - 1]
            if a < 0.0 and a > -FEAS_TOL:
                T[r * w + w - 1] = 0.0
    return ITERATION_LIMIT


cdef int _solve(double* A, double* b, double* c, int m, int n, int n_ub,
                double* x_out, double* obj_out, int max_iter) nogil:
    """Core two-phase solve on row-major ``A`` (m x n); writes x and objective."""
    cdef int r, k, col, n_art = 0, art, w, status
    cdef double bmax = 1.0, infeas, cb
    for r in range(m):
        if r >= n_ub or b[r] < 0.0:
            n_art += 1
        if fabs(b[r]) > bmax:
            bmax = fabs(b[r])
    w = n + n_ub + n_art + 1
    cdef double* T = <double*> malloc(m * w * sizeof(double))
    cdef double* d = <double*> malloc(w * sizeof(double))
    cdef long* basis = <long*> malloc((m if m > 0 else 1) * sizeof(long))
    for k in range(m * w):
        T[k] = 0.0
    art = n + n_ub
    for r in range(m):
        for k in range(n):
            T[r * w + k] = A[r * n + k]
        if r < n_ub:
            T[r * w + n + r] = 1.0
        T[r * w + w - 1] = b[r]
        if b[r] < 0.0:
            for k in range(w):
                T[r * w + k] = -T[r * w + k]
        if r >= n_ub or b[r] < 0.0:
            T[r * w + art] = 1.0
            basis[r] = art
            art += 1
        else:
            basis[r] = n + r
    status = OPTIMAL
    if n_art > 0:
        for k in range(w):
            d[k] = 0.0
        for r in range(m):
            if basis[r] >= n + n_ub:
                for k in range(w):
                    d[k] += T[r * w + k]
        for k in range(n + n_ub, w - 1):
            d[k] = 0.0
        status = _run(T, d, basis, m, w, w - 1, max_iter)
        if status == ITERATION_LIMIT:
            obj_out[0] = NAN
            free(T); free(d); free(basis)
            return status
        infeas = 0.0
        for r in range(m):
            if basis[r] >= n + n_ub:
                infeas += T[r * w + w - 1]
        if infeas > FEAS_TOL * bmax:
            obj_out[0] = -INFINITY
            free(T); free(d); free(basis)
            return INFEASIBLE
        for r in range(m):
            if basis[r] >= n + n_ub:
                for col in range(n + n_ub):
                    if fabs(T[r * w + col]) > PIVOT_EPS:
                        _pivot(T, d, basis, m, w, r, col)
                        break
    # phase 2
    for k in range(w):
        d[k] = 0.0
    for k in range(n):
        d[k] = c[k]
    for r in range(m):
        if basis[r] < n:
            cb = c[basis[r]]
            if cb != 0.0:
                for k in range(w):
                    d[k] -= cb * T[r * w + k]
    status = _run(T, d, basis, m, w, n + n_ub, max_iter)
    for k in range(n):
        x_out[k] = 0.0
    for r in range(m):
        if basis[r] < n:
            x_out[basis[r]] = T[r * w + w - 1]
    if status == OPTIMAL:
        obj_out[0] = 0.0
        for k in range(n):
            obj_out[0] += c[k] * x_out[k]
    elif status == UNBOUNDED:
        obj_out[0] = INFINITY
    else:
        obj_out[0] = NAN
    free(T); free(d); free(basis)
    return status


def solve_standard(A, b, c, int n_ub, int max_iter=10000):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bb = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cc = np.ascontiguousarray(c, dtype=np.float64).reshape(-1)
    cdef int m = bb.shape[0]
    cdef int n = cc.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] AA = np.ascontiguousarray(A, dtype=np.float64).reshape(-1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.zeros(n)
    cdef double obj = 0.0
    cdef int status
    if m == 0:
        for k in range(n):
            if cc[k] > COST_EPS:
                return UNBOUNDED, np.inf, x
        return OPTIMAL, 0.0, x
    if AA.shape[0] != m * n:
        raise ValueError("constraint matrix does not match b and c")
    status = _solve(&AA[0], &bb[0], &cc[0], m, n, n_ub, &x[0], &obj, max_iter)
    return status, obj, x


def fl_scores_2p(G1, G2, PI, double lam1, double lam2, A1, A2, bint budget_eq=False):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g1 = np.ascontiguousarray(G1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g2 = np.ascontiguousarray(G2, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] pi = np.ascontiguousarray(PI, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a1s = np.ascontiguousarray(np.atleast_2d(A1), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a2s = np.ascontiguousarray(np.atleast_2d(A2), dtype=np.float64)
    cdef int m1 = pi.shape[0], m2 = pi.shape[1], ny = pi.shape[2]
    cdef int K1 = a1s.shape[0], K2 = a2s.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((K1, K2))
    cdef int nv = 4 * ny
    cdef int max_rows = (m1 - 1) + (m2 - 1) + ny
    cdef double* A = <double*> malloc(max_rows * nv * sizeof(double))
    cdef double* Aeq = <double*> malloc(max_rows * nv * sizeof(double))
    cdef double* b = <double*> malloc(max_rows * sizeof(double))
    cdef double* beq = <double*> malloc(max_rows * sizeof(double))
    cdef double* c = <double*> malloc(nv * sizeof(double))
    cdef double* x = <double*> malloc(nv * sizeof(double))
    cdef double* P = <double*> malloc((m1 + m2) * ny * sizeof(double))
    cdef double* gd = <double*> malloc((m1 + m2) * sizeof(double))
    cdef double* py = <double*> malloc(ny * sizeof(double))
    cdef int k1, k2, i, j, y, k, ref, n_ub, n_eq, player, ma, off, status
    cdef double s, gval, const, val, diff, rhs
    cdef double* row
    try:
        for k1 in range(K1):
            for k2 in range(K2):
                # deviation rewards and signal distributions for each own action
                for i in range(m1):
                    gval = 0.0
                    for j in range(m2):
                        gval += a2s[k2, j] * g1[i, j]
                    gd[i] = gval
                    for y in range(ny):
                        s = 0.0
                        for j in range(m2):
                            s += a2s[k2, j] * pi[i, j, y]
                        P[i * ny + y] = s
                for j in range(m2):
                    gval = 0.0
                    for i in range(m1):
                        gval += a1s[k1, i] * g2[i, j]
                    gd[m1 + j] = gval
                    for y in range(ny):
                        s = 0.0
                        for i in range(m1):
                            s += a1s[k1, i] * pi[i, j, y]
                        P[(m1 + j) * ny + y] = s
                const = 0.0
                for i in range(m1):
                    const += lam1 * a1s[k1, i] * gd[i]
                for j in range(m2):
                    const += lam2 * a2s[k2, j] * gd[m1 + j]
                for y in range(ny):
                    s = 0.0
                    for i in range(m1):
                        s += a1s[k1, i] * P[i * ny + y]
                    py[y] = s
                n_ub = 0
                n_eq = 0
                for player in range(2):
                    ma = m1 if player == 0 else m2
                    off = 0 if player == 0 else m1
                    ref = -1
                    for k in range(ma):
                        if (a1s[k1, k] if player == 0 else a2s[k2, k]) > 0.0:
                            ref = k
                            break
                    for k in range(ma):
                        if k == ref:
                            continue
                        if (a1s[k1, k] if player == 0 else a2s[k2, k]) > 0.0:
                            row = &Aeq[n_eq * nv]
                            beq[n_eq] = gd[off + ref] - gd[off + k]
                            n_eq += 1
                        else:
                            row = &A[n_ub * nv]
                            b[n_ub] = gd[off + ref] - gd[off + k]
                            n_ub += 1
                        for i in range(nv):
                            row[i] = 0.0
                        for y in range(ny):
                            diff = P[(off + k) * ny + y] - P[(off + ref) * ny + y]
                            row[2 * (player * ny + y)] = diff
                            row[2 * (player * ny + y) + 1] = -diff
                for y in range(ny):
                    if budget_eq:
                        row = &Aeq[n_eq * nv]
                        beq[n_eq] = 0.0
                        n_eq += 1
                    else:
                        row = &A[n_ub * nv]
                        b[n_ub] = 0.0
                        n_ub += 1
                    for i in range(nv):
                        row[i] = 0.0
                    row[2 * y] = lam1
                    row[2 * y + 1] = -lam1
                    row[2 * (ny + y)] = lam2
                    row[2 * (ny + y) + 1] = -lam2
                # stack equality rows beneath the inequality rows
                for k in range(n_eq):
                    for i in range(nv):
                        A[(n_ub + k) * nv + i] = Aeq[k * nv + i]
                    b[n_ub + k] = beq[k]
                for y in range(ny):
                    c[2 * y] = lam1 * py[y]
                    c[2 * y + 1] = -lam1 * py[y]
                    c[2 * (ny + y)] = lam2 * py[y]
                    c[2 * (ny + y) + 1] = -lam2 * py[y]
                status = _solve(A, b, c, n_ub + n_eq, nv, n_ub, x, &val, 10000)
                if status == OPTIMAL:
                    out[k1, k2] = const + val
                elif status == INFEASIBLE:
                    out[k1, k2] = -INFINITY
                elif status == UNBOUNDED:
                    out[k1, k2] = INFINITY
                else:
                    out[k1, k2] = NAN
    finally:
        free(A); free(Aeq); free(b); free(beq); free(c); free(x); free(P); free(gd); free(py)
    return out
