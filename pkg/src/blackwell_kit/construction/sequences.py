"""Pure-action sequences that hit a target payoff with controlled continuations.

The builder tracks the "debt" ``w_t``: the continuation value still owed after
``t`` rounds.  Starting from ``w_0 = v`` it plays the profile whose payoff keeps
``w_{t+1} = (w_t - (1-delta) g(a_t)) / delta`` closest to ``v``.  Once the
remaining weight ``delta^L`` is negligible the path is closed into a cycle at
a near-recurrence of the debt, and the result is checked against the contract

* ``(1-delta) sum_t delta^t g(a_t) = v`` (to 1e-9), and
* every continuation value ``(1-delta) sum_{t>=tau} delta^(t-tau) g(a_t)`` lies
  within ``eps`` of ``v``.

The contract is re-evaluated by :func:`verify_sequence`, which only uses
closed-form discounted sums, so any debt-tracking rule that passes it is
acceptable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..config import settings
from ..game_core import PayoffStream, StageGame, discounted_value, suffix_values
from ..geometry import feasible_set

VALUE_TOL = 1e-9


class SequenceError(ValueError):
    """The requested sequence cannot be built (bad target or discount factor)."""


@dataclass(frozen=True)
class ActionSequence:
    """Eventually periodic path of pure profiles.

    Attributes
    ----------
    preamble, cycle : tuples of pure profiles (tuples of action indices).
    target, eps, delta : the payoff, tolerance and discount factor used.
    note : provenance record.
    """

    preamble: tuple
    cycle: tuple
    target: tuple
    eps: float
    delta: float
    note: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("an action sequence needs a nonempty cycle")

    def __len__(self) -> int:
        return len(self.preamble) + len(self.cycle)

    def at(self, t: int) -> tuple:
        if t < len(self.preamble):
            return self.preamble[t]
        return self.cycle[(t - len(self.preamble)) % len(self.cycle)]

    def positions(self) -> list[tuple]:
        """Every distinct position: the preamble followed by one cycle."""
        return list(self.preamble) + list(self.cycle)

    def payoff_stream(self, game: StageGame, exact: bool = False) -> PayoffStream:
        src = game.payoffs if (exact and game.exact) else game.g
        conv = (lambda row: tuple(row)) if (exact and game.exact) else (lambda row: tuple(float(x) for x in row))
        return PayoffStream(tuple(conv(src[a]) for a in self.preamble),
                            tuple(conv(src[a]) for a in self.cycle))


def constant_sequence(profile: Sequence[int], target, delta: float = 0.0, note: str = "") -> ActionSequence:
    a = tuple(int(k) for k in profile)
    return ActionSequence((), (a,), tuple(target), 0.0, delta, note or "constant profile")


# ---------------------------------------------------------------------------
# the feasibility bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Face:
    """Smallest face of F containing v, in float arithmetic."""

    profiles: list            # pure profiles whose payoffs lie on the face
    points: np.ndarray        # their payoffs
    rho: float                # distance from v to the relative boundary
    dim: int


def _face_of(game: StageGame, v: np.ndarray) -> _Face:
    F = feasible_set(game)
    hs = F.unit_halfspaces()
    scale = max(1.0, float(np.abs(game.g).max()))
    tol = 1e-12 * scale
    viol = max((u @ v - k for u, k in hs), default=-1.0)
    if viol > settings.tol * scale:
        raise SequenceError(f"target {tuple(float(c) for c in v)} lies outside the feasible set "
                            f"(violation {viol:.3g})")
    tight = [(u, k) for u, k in hs if u @ v - k >= -tol]
    active = [u for u, _ in tight]
    n = len(v)
    if active:
        _, s, vt = np.linalg.svd(np.asarray(active))
        rank = int((s > 1e-10).sum())
        basis = vt[rank:]
    else:
        basis = np.eye(n)
    dim = basis.shape[0]
    profiles, points = [], []
    for a in game.profiles():
        g = game.g[a]
        if all(u @ g - k >= -1e-9 * scale for u, k in tight):
            profiles.append(a)
            points.append(g)
    rho = math.inf
    for u, k in hs:
        if u @ v - k >= -tol:
            continue
        pu = basis.T @ (basis @ u) if dim else np.zeros(n)
        nrm = float(np.linalg.norm(pu))
        if nrm < 1e-12:
            continue
        rho = min(rho, (k - u @ v) / nrm)
    if dim == 0:
        rho = 0.0
    return _Face(profiles, np.asarray(points, dtype=float).reshape(-1, n), rho, dim)


def _kappa_bound(eps: float, rho: float, diam: float) -> float:
    """Largest ``(1-delta)/delta`` for which some pure profile always keeps the
    debt inside the ball of radius ``eps`` (needs ``eps < rho``)."""
    if diam == 0:
        return math.inf
    if eps >= rho:
        return 0.0
    k1 = eps / diam
    k2 = 2 * eps * (rho - eps) / (diam ** 2 + eps ** 2 - 2 * rho * eps)
    return min(k1, k2)


def _best_radius(eps: float, rho: float, diam: float) -> tuple[float, float]:
    """Radius in ``(0, min(eps, rho))`` maximising the admissible kappa."""
    top = min(eps, rho)
    if math.isinf(rho) or diam == 0:
        return top, _kappa_bound(top, rho, diam)
    lo, hi = 0.0, top
    f = lambda r: _kappa_bound(r, rho, diam)
    for _ in range(200):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if f(m1) < f(m2):
            lo = m1
        else:
            hi = m2
    r = (lo + hi) / 2
    # the bound is increasing in r for r <= top when its maximiser is past top
    if f(top * (1 - 1e-12)) >= f(r):
        r = top * (1 - 1e-12)
    return r, f(r)


def delta_hat(game: StageGame, v: Sequence, eps: float) -> float:
    """Discount factor above which :func:`build_target_sequence` is guaranteed to work.

    Vertices of F need no patience (constant play).  Other targets need a
    positive distance to the relative boundary of the face of F containing
    them; the bound is computed for the radius below ``eps`` that is most
    favourable.
    """
    vv = np.asarray([float(c) for c in v])
    face = _face_of(game, vv)
    if face.dim == 0 or _vertex_profile(game, vv) is not None:
        return 0.0
    diam = float(np.linalg.norm(face.points - vv, axis=1).max())
    if face.rho <= 0:
        raise SequenceError("target lies on the relative boundary of its face; no sequence keeps it interior")
    _, kappa = _best_radius(eps, face.rho, diam)
    if kappa <= 0:
        raise SequenceError("no admissible radius for the requested tolerance")
    return float(1.0 / (1.0 + kappa))


def _vertex_profile(game: StageGame, v: np.ndarray):
    for a in game.profiles():
        if np.allclose(game.g[a], v, rtol=0, atol=1e-12):
            return a
    return None


# ---------------------------------------------------------------------------
# builder
# ---------------------------------------------------------------------------

def _greedy(points: np.ndarray, v: np.ndarray, delta: float, steps: int):
    """Debt tracking: returns chosen point indices and the debts w_0..w_steps."""
    n = len(v)
    choices = np.empty(steps, dtype=np.int64)
    debts = np.empty((steps + 1, n))
    w = v.copy()
    debts[0] = w
    c = (1 - delta) / delta
    inv = 1 / delta
    for t in range(steps):
        cand = w * inv - c * points
        d = ((cand - v) ** 2).sum(axis=1)
        k = int(np.argmin(d))
        choices[t] = k
        w = cand[k]
        debts[t + 1] = w
    return choices, debts


def build_target_sequence(game: StageGame, v: Sequence, eps: float, delta: float,
                          max_attempts: int = 4) -> ActionSequence:
    """Eventually periodic pure path with value ``v`` and continuations near ``v``.

    Parameters
    ----------
    v : target payoff in the feasible set.
    eps : allowed distance (Euclidean) between any continuation value and ``v``.
    delta : construction discount factor; must be at least :func:`delta_hat`.

    Raises
    ------
    SequenceError
        When ``v`` is infeasible, ``delta`` is below the computed bound
        ("raise delta"), or the post-hoc contract check fails.
    """
    if not (0 < delta < 1):
        raise SequenceError(f"discount factor must lie in (0, 1), got {delta!r}")
    if eps <= 0:
        raise SequenceError("eps must be positive")
    vv = np.asarray([float(c) for c in v])
    if len(vv) != game.player_count:
        raise SequenceError("target has the wrong dimension")
    face = _face_of(game, vv)
    vertex = _vertex_profile(game, vv)
    if vertex is not None:
        return constant_sequence(vertex, tuple(v), delta, "target is a pure payoff")
    if face.dim == 0 or face.rho <= 0:
        raise SequenceError("target lies on the relative boundary of its face; no sequence keeps it interior")
    diam = float(np.linalg.norm(face.points - vv, axis=1).max())
    radius, kappa = _best_radius(eps, face.rho, diam)
    bound = float(1.0 / (1.0 + kappa))
    if delta < bound:
        raise SequenceError(f"raise delta: need delta >= {bound:.12g} for eps = {eps:g} at this target")

    # steps after which the remaining weight cannot move the value by 1e-10
    gap = max(1, math.ceil(math.log(2) / -math.log(delta)))
    base = math.ceil(math.log(1e-11 / (4 * max(radius, 1e-300))) / math.log(delta)) + gap
    steps = max(base, 4 * gap)
    last_report = None
    for _ in range(max_attempts):
        choices, debts = _greedy(face.points, vv, delta, steps)
        w_end = debts[steps]
        cand = np.arange(0, steps - gap + 1)
        dist = np.linalg.norm(debts[cand] - w_end, axis=1)
        loop = steps - cand
        err = dist / (1 - delta ** loop)
        s = int(cand[np.argmin(err)])
        profs = [face.profiles[k] for k in choices]
        seq = ActionSequence(tuple(profs[:s]), tuple(profs[s:]), tuple(v), float(eps), float(delta),
                             note=f"debt tracking, radius {radius:.6g}, closed at {s}",
                             meta={"radius": radius, "delta_hat": bound, "steps": steps})
        report = verify_sequence(game, seq, v, eps, delta)
        if report["ok"]:
            seq.meta.update(report)
            return seq
        last_report = report
        steps *= 2
    raise SequenceError(f"sequence contract failed after {max_attempts} attempts: {last_report}")


# ---------------------------------------------------------------------------
# contract verifier
# ---------------------------------------------------------------------------

def verify_sequence(game: StageGame, seq: ActionSequence, v: Sequence, eps: float, delta: float) -> dict:
    """Independent check of both contract clauses at ``delta``.

    Uses the closed-form value of the whole stream, plus every suffix value
    obtained from the closed-form cycle value and backward recursion.
    """
    stream = seq.payoff_stream(game)
    vv = np.asarray([float(c) for c in v])
    total = np.asarray(discounted_value(stream, delta))
    value_error = float(np.abs(total - vv).max())
    suffixes = np.asarray(suffix_values(stream, delta))
    dev = float(np.linalg.norm(suffixes - vv, axis=1).max())
    ok = value_error <= VALUE_TOL and dev <= eps * (1 + 1e-12)
    return {"ok": bool(ok), "value_error": value_error, "max_suffix_deviation": dev}


def patience_check(stream: PayoffStream, bounds: tuple, delta, tol: float | None = None) -> bool:
    """Whether every suffix value of a scalar stream lies within ``bounds`` at ``delta``.

    Exact when the stream, bounds and ``delta`` are rationals (``tol`` then
    defaults to 0); otherwise compares with ``settings.tol``.
    """
    if stream.dim != 1:
        raise ValueError("patience_check expects a scalar stream")
    lo, hi = bounds
    vals = [s[0] for s in suffix_values(stream, delta)]
    exact = all(isinstance(x, (int, Fraction)) for x in vals + [lo, hi])
    if tol is None:
        tol = 0 if exact else settings.tol
    return all(lo - tol <= x <= hi + tol for x in vals)
