"""Global numeric settings shared by every module.

The values live in a single mutable object so that the CLI (``--tol``) and
tests can adjust them in one place.  Library functions read ``settings.tol``
at call time rather than binding it at import.
"""
from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass
class Settings:
    tol: float = 1e-9          # default float comparison tolerance
    prob_tol: float = 1e-12    # allowed drift of probability vectors from 1
    lp_tol: float = 1e-9       # feasibility tolerance of the simplex solver
    ic_tol: float = 1e-7       # re-verification tolerance for enforcement witnesses


settings = Settings()


def thread_cap() -> int:
    """Worker count allowed by ``BLACKWELL_KIT_THREADS`` (default 1)."""
    raw = os.environ.get("BLACKWELL_KIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
