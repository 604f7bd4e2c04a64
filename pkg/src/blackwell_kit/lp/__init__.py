"""Small dense linear programs.

A compiled kernel (``_simplex`` built from Cython) is used when available and
the pure-Python implementation otherwise.  ``BLACKWELL_KIT_PURE_PYTHON=1``
forces the fallback, which is how the benchmark and the backend-agreement
tests exercise both paths.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _simplex_py

OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT = 0, 1, 2, 3
STATUS_NAMES = {0: "optimal", 1: "infeasible", 2: "unbounded", 3: "iteration limit"}


def _select_backend():
    if os.environ.get("BLACKWELL_KIT_PURE_PYTHON", "") not in ("", "0"):
        return _simplex_py, "python"
    try:
        from . import _simplex  # type: ignore[attr-defined]
    except ImportError:
        return _simplex_py, "python"
    return _simplex, "compiled"


backend, BACKEND_NAME = _select_backend()


def get_backend(name: str | None = None):
    """Return the kernel module called ``name`` ("compiled" or "python")."""
    if name is None:
        return backend
    if name == "python":
        return _simplex_py
    if name == "compiled":
        from . import _simplex  # type: ignore[attr-defined]

        return _simplex
    raise ValueError(f"unknown backend {name!r}")


class LPError(RuntimeError):
    """The solver hit an iteration limit or an unexpected unbounded program."""


@dataclass
class LPResult:
    status: int
    objective: float
    x: np.ndarray

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    @property
    def status_name(self) -> str:
        return STATUS_NAMES[self.status]


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=None, lower=None,
            maximize: bool = True, kernel=None) -> LPResult:
    """Solve a small LP with the dense simplex.

    Parameters
    ----------
    c : objective coefficients.
    A_ub, b_ub : rows of ``A_ub @ x <= b_ub``.
    A_eq, b_eq : rows of ``A_eq @ x == b_eq``.
    free : boolean mask of unrestricted variables (default: all free).
    lower : lower bounds for the restricted variables (default 0).
    maximize : maximise (default) or minimise.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.shape[0]
    A_ub = np.zeros((0, n)) if A_ub is None or len(A_ub) == 0 else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None or len(b_ub) == 0 else np.asarray(b_ub, dtype=float).reshape(-1)
    A_eq = np.zeros((0, n)) if A_eq is None or len(A_eq) == 0 else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None or len(b_eq) == 0 else np.asarray(b_eq, dtype=float).reshape(-1)
    free = np.ones(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    lower = np.zeros(n) if lower is None else np.asarray(lower, dtype=float)
    shift = np.where(free, 0.0, lower)
    # substitute x = shift + (p - q) for free variables and x = shift + p otherwise
    cols = []
    for k in range(n):
        cols.append((k, 1.0))
        if free[k]:
            cols.append((k, -1.0))
    T = np.zeros((n, len(cols)))
    for j, (k, s) in enumerate(cols):
        T[k, j] = s
    sign = 1.0 if maximize else -1.0
    A = np.vstack([A_ub @ T, A_eq @ T]) if len(A_ub) + len(A_eq) else np.zeros((0, len(cols)))
    b = np.concatenate([b_ub - A_ub @ shift, b_eq - A_eq @ shift])
    kern = backend if kernel is None else kernel
    status, obj, z = kern.solve_standard(A, b, sign * (c @ T), len(A_ub))
    x = shift + T @ np.asarray(z)
    if status == OPTIMAL:
        return LPResult(status, float(c @ x), x)
    if status == INFEASIBLE:
        return LPResult(status, -np.inf if maximize else np.inf, x)
    if status == UNBOUNDED:
        return LPResult(status, np.inf if maximize else -np.inf, x)
    raise LPError("simplex iteration limit reached")


def fl_scores_2p(*args, kernel=None, **kwargs):
    """Batched two-player enforcement-program scores; see ``_simplex_py``."""
    kern = backend if kernel is None else kernel
    return kern.fl_scores_2p(*args, **kwargs)
