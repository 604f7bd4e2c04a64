"""Action paths whose long-run average payoff is a target ``v``.

The path is built from a finite set ``D`` of payoff points around ``v``,
each a dyadic-rational convex combination of pure payoffs and each above the
MI minmax floors by more than ``3 gamma``.  Point ``d(k)`` is produced by a
fixed pure-action subcycle of length ``L``; the weights ``lambda`` with
``v = sum_k lambda(k) d(k)`` are approximated by dyadic weights ``lambda^m``
with denominator ``2^m``, and cycle ``m`` plays the subcycles in those
proportions.  Cycles ``m = m0, m0 + 1, ...`` are concatenated, so the running
mean of the payoffs converges to ``v``.

Both levels are ordered by largest deficit (a Bresenham-style spread), which
keeps every prefix mean close to the cycle mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import nnls

from .. import equilibria as eqm
from ..game_core import StageGame
from ..geometry import contains, feasible_set

GAMMA_MIN = 1e-6
MAX_BITS = 20
FIRST_LEVEL = 10


class MarginError(ValueError):
    """``v`` is too close to the boundary of ``F`` or to the MI floors."""


@dataclass
class LbpPlan:
    """Plan for a target payoff.

    Attributes
    ----------
    points : the set ``D`` as tuples of Fractions.
    weights : float weights ``lambda`` with ``v = sum lambda(k) d(k)``.
    subcycles : pure-profile subcycles, all of length ``L``.
    gamma : margin with ``d_i(k) > floor_i + 3 gamma``.
    floors : MI minmax values.
    first_level : index ``m0`` of the first cycle.
    """

    game: StageGame
    v: tuple
    points: tuple
    weights: tuple
    subcycles: tuple
    gamma: float
    floors: tuple
    first_level: int = FIRST_LEVEL
    meta: dict = field(default_factory=dict)

    @property
    def L(self) -> int:
        return len(self.subcycles[0])

    @property
    def constant(self) -> bool:
        return len(self.points) == 1 and len(set(self.subcycles[0])) == 1

    def dyadic_weights(self, m: int) -> tuple:
        """``lambda^m``: the weights rounded to denominator ``2^m`` (sum exactly one)."""
        counts = _round_counts(self.weights, 2 ** m)
        return tuple(Fraction(c, 2 ** m) for c in counts)

    def cycle(self, m: int) -> list[int]:
        """Subcycle indices of cycle ``m`` (length ``2^m``)."""
        return _spread(_round_counts(self.weights, 2 ** m))

    def profiles(self) -> Iterator[tuple]:
        """The action path, without end."""
        m = self.first_level
        while True:
            for k in self.cycle(m):
                yield from self.subcycles[k]
            m += 1

    def payoff_array(self, horizon: int) -> np.ndarray:
        """Float payoffs of the first ``horizon`` rounds, shape ``(horizon, n)``."""
        g = self.game.g
        sub = [np.asarray([g[a] for a in s], dtype=float) for s in self.subcycles]
        parts, total, m = [], 0, self.first_level
        while total < horizon:
            seq = self.cycle(m)
            block = np.concatenate([sub[k] for k in seq])
            parts.append(block)
            total += len(block)
            m += 1
        return np.concatenate(parts)[:horizon]

    def cesaro_mean(self, horizon: int = 10_000) -> np.ndarray:
        return self.payoff_array(horizon).mean(axis=0)

    def discounted_value(self, delta: float, horizon: int | None = None) -> np.ndarray:
        """``(1 - delta) sum_t delta^t g(a_t)``, truncated where ``delta^t < 1e-15``."""
        if horizon is None:
            horizon = int(math.ceil(math.log(1e-15) / math.log(delta))) if delta > 0 else 1
        x = self.payoff_array(horizon)
        w = (1 - delta) * delta ** np.arange(horizon)
        return w @ x

    def check(self, horizon: int = 10_000, delta: float = 0.9999) -> dict:
        """Invariants and the two convergence checks (errors in sup norm)."""
        v = np.asarray([float(c) for c in self.v])
        pts = np.asarray([[float(c) for c in d] for d in self.points])
        fl = np.asarray([float(f) for f in self.floors])
        return {
            "margin": float((pts - fl).min() - 3 * self.gamma),
            "min_weight": float(min(self.weights)),
            "combination": float(np.abs(np.asarray(self.weights) @ pts - v).max()),
            "equal_lengths": len({len(s) for s in self.subcycles}) == 1,
            "cesaro_error": float(np.abs(self.cesaro_mean(horizon) - v).max()),
            "discounted_error": float(np.abs(self.discounted_value(delta) - v).max()),
        }

    def export(self) -> dict:
        lab = self.game.profile_label
        return {
            "v": [float(c) for c in self.v],
            "D": [[str(c) for c in d] for d in self.points],
            "weights": list(self.weights),
            "gamma": self.gamma,
            "L": self.L,
            "first_level": self.first_level,
            "subcycles": [[lab(a) for a in s] for s in self.subcycles],
        }


def _round_counts(weights: Sequence[float], total: int) -> list[int]:
    """Largest-remainder rounding of ``weights * total`` to integers summing to ``total``."""
    raw = [max(float(w), 0.0) * total for w in weights]
    counts = [int(math.floor(r)) for r in raw]
    order = sorted(range(len(raw)), key=lambda k: (-(raw[k] - counts[k]), k))
    for k in order[: total - sum(counts)]:
        counts[k] += 1
    return counts


def _spread(counts: Sequence[int]) -> list[int]:
    """Interleave ``counts[k]`` copies of each ``k`` by largest deficit."""
    total = sum(counts)
    done = [0] * len(counts)
    out = []
    for t in range(total):
        k = max(range(len(counts)), key=lambda j: ((t + 1) * counts[j] - total * done[j], -j))
        done[k] += 1
        out.append(k)
    return out


def _regular_simplex(n: int) -> np.ndarray:
    """``n + 1`` unit vectors in R^n summing to zero."""
    e = np.eye(n + 1) - 1.0 / (n + 1)
    q, _ = np.linalg.qr(e[:, :n])
    pts = e @ q
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _convex_weights(P: np.ndarray, d: np.ndarray) -> np.ndarray:
    A = np.vstack([P.T, np.ones(len(P))])
    w, res = nnls(A, np.append(d, 1.0))
    if res > 1e-9:
        raise MarginError(f"point {d.tolist()} is outside the feasible set")
    return w


def _dyadic_point(P_exact, w: np.ndarray, bits: int):
    counts = _round_counts(w, 2 ** bits)
    n = len(P_exact[0])
    pt = tuple(sum((Fraction(c, 2 ** bits) * P_exact[j][i] for j, c in enumerate(counts)), Fraction(0))
               for i in range(n))
    return pt, counts


def _subcycle(profiles: list, counts: list[int], L: int) -> tuple:
    g = math.gcd(*[c for c in counts if c]) if any(counts) else 1
    reduced = [c // g for c in counts]
    base = [profiles[j] for j in _spread(reduced)]
    return tuple(base * (L // len(base)))


def build_lbp_plan(game: StageGame, v: Sequence, floors: Sequence | None = None,
                   first_level: int = FIRST_LEVEL) -> LbpPlan:
    """Plan an action path whose running mean converges to ``v``.

    ``v`` must lie in ``F^MI``.  Interior points of ``F`` get a regular
    simplex ``D`` whose size is at most half the distance to the boundary of
    ``F`` and a quarter of the smallest margin over the floors; boundary
    points get a set ``D`` inside the face through ``v`` (a vertex target
    gives a constant plan).

    Raises
    ------
    MarginError
        When the resulting ``gamma`` is below 1e-6, or ``v`` is not feasible.
    """
    n = game.player_count
    if floors is None:
        floors = eqm.minmax(game, "mi").values
    fl = np.asarray([float(f) for f in floors])
    vf = np.asarray([float(c) for c in v])
    margins = vf - fl
    if margins.min() < 3 * GAMMA_MIN:
        raise MarginError(f"v is within {margins.min():.3g} of an MI floor; no gamma >= {GAMMA_MIN:g} works")
    F = feasible_set(game)
    if not contains(F, vf):
        raise MarginError("v is not in the feasible set")
    profiles = list(game.profiles())
    src = game.payoffs if game.exact else game.g
    P_exact = [tuple(Fraction(x) for x in src[a]) for a in profiles]
    P = np.asarray([[float(x) for x in p] for p in P_exact])
    rho = min(k - lam @ vf for lam, k in F.unit_halfspaces())

    if rho > 1e-9:
        size = min(rho / 2, margins.min() / 4)
        targets = vf + size * _regular_simplex(n)
        tol = size / (2 * n)
    else:
        # boundary of F: shrink toward the pure payoffs that carry v
        mu = _convex_weights(P, vf)
        supp = [j for j in range(len(P)) if mu[j] > 1e-12]
        spread = max(float(np.max(vf - P[j])) for j in supp)
        t = 1.0 if spread <= 0 else min(1.0, margins.min() / (4 * spread))
        targets = np.asarray([(1 - t) * vf + t * P[j] for j in supp])
        tol = t * float(min(mu[j] for j in supp)) / 4 if len(supp) > 1 else math.inf
    weights_raw = [_convex_weights(P, d) for d in targets]

    for bits in range(0, MAX_BITS + 1):
        pts, counts = zip(*(_dyadic_point(P_exact, w, bits) for w in weights_raw))
        D = np.asarray([[float(c) for c in p] for p in pts])
        if len(targets) > 1 and np.abs(D - targets).max() > tol:
            continue
        A = np.vstack([D.T, np.ones(len(D))])
        lam, *_ = np.linalg.lstsq(A, np.append(vf, 1.0), rcond=None)
        if np.abs(A @ lam - np.append(vf, 1.0)).max() > 1e-9 or lam.min() <= 1e-9:
            continue
        gamma = float((D - fl).min()) / 4
        if gamma < GAMMA_MIN:
            raise MarginError(f"gamma = {gamma:.3g} < {GAMMA_MIN:g}: v is too close to the MI floors")
        break
    else:
        raise MarginError(f"no dyadic set D with denominator up to 2^{MAX_BITS} contains v in its interior")

    # merge duplicate points (a vertex target gives one point)
    uniq, idx = {}, []
    for p, c in zip(pts, counts):
        idx.append(uniq.setdefault(p, (len(uniq), c))[0])
    points = tuple(uniq)
    weights = np.zeros(len(points))
    for k, j in enumerate(idx):
        weights[j] += lam[k]
    weights = tuple(float(w) for w in weights / weights.sum())
    lengths = []
    for _, c in uniq.values():
        g = math.gcd(*[x for x in c if x])
        lengths.append(sum(c) // g)
    L = math.lcm(*lengths)
    subcycles = tuple(_subcycle(profiles, c, L) for _, c in uniq.values())
    return LbpPlan(game, tuple(v), points, weights, subcycles, gamma, tuple(floors), first_level,
                   meta={"bits": bits, "boundary": rho <= 1e-9, "rho": float(rho)})
