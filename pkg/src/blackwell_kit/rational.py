"""Exact-arithmetic helpers: parsing ``"p/q"`` strings and Gaussian elimination."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np


def to_fraction(value) -> Fraction:
    """Parse an int, a ``"p/q"`` / decimal string or a float into a Fraction.

    Floats are converted through their shortest decimal repr, so ``0.9``
    becomes ``9/10`` rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def format_fraction(x: Fraction) -> str | int:
    """Serialise a Fraction: integers stay integers, the rest become ``"p/q"``."""
    x = Fraction(x)
    if x.denominator == 1:
        return int(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def is_exact(values: Iterable) -> bool:
    return all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in values)


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals.

    Returns the reduced matrix and the list of pivot columns.
    """
    m = [[Fraction(v) for v in row] for row in rows]
    if not m:
        return m, []
    n_rows, n_cols = len(m), len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        pivot = next((k for k in range(r, n_rows) if m[k][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for k in range(n_rows):
            if k != r and m[k][c] != 0:
                f = m[k][c]
                m[k] = [a - f * b for a, b in zip(m[k], m[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return m, pivots


def rank_exact(rows: Sequence[Sequence[Fraction]]) -> int:
    return len(rref(rows)[1])


def rank_float(matrix, rel_tol: float = 1e-9) -> int:
    """Numerical rank with a singular-value threshold relative to the largest one."""
    a = np.asarray(matrix, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def solve_exact(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]):
    """Solve ``a x = b`` exactly.

    Returns ``(x, free_columns)`` for a consistent system, where ``x`` is the
    particular solution with free variables set to zero, or ``None`` when the
    system is inconsistent.
    """
    n_cols = len(a[0]) if a else 0
    aug = [list(row) + [Fraction(bi)] for row, bi in zip(a, b)]
    red, piv = rref(aug)
    if n_cols in piv:
        return None
    x = [Fraction(0)] * n_cols
    for row, c in zip(red, piv):
        x[c] = row[-1]
    free = [c for c in range(n_cols) if c not in piv]
    return x, free
