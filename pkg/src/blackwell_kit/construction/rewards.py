"""Post-punishment reward cycles for the perfect-monitoring construction.

For a target ``v`` in the interior of ``F^MI`` we build, for every player
``i``, a finite cycle of pure profiles whose mean ``v(i)`` satisfies, with a
common slack ``eps``,

* ``floor_i + eps < v_i(i)``            (individual rationality w.r.t. MI minmax),
* ``v_i(i) + eps < v_i``                (punishing i lowers i below the target),
* ``v_i(i) + eps < v_i(j)`` for j != i  (payoff asymmetry).

The cycles are ordered so that player i's reward along ``cycle[i]`` is
non-decreasing, and they all have the same length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .. import equilibria as eqm
from ..game_core import StageGame
from ..geometry import clip_below, contains, dimension, feasible_set
from ..lp.exact import linprog_exact

HALVING_CAP = 32
MAX_POWER = 20


class DimensionError(ValueError):
    """``F^MI`` is not full-dimensional, so the construction does not apply."""


class TargetError(ValueError):
    """The target payoff does not satisfy the construction's precondition."""


@dataclass(frozen=True)
class RewardCycleSet:
    """Reward cycles and the intermediate points they were built from.

    Attributes
    ----------
    cycles : ``cycles[i]`` is player i's reward cycle (tuple of pure profiles).
    means : ``means[i]`` is the exact mean payoff vector ``v(i)`` of ``cycles[i]``.
    x, w, y : the asymmetric points, worst points and blended targets.
    beta, eta, eps : blending weights and the slack.
    floors : MI minmax values.
    target : the equilibrium target ``v``.
    slack : smallest margin of each inequality family for the means.
    denominators : power-of-two denominator used for each player before padding.
    """

    cycles: tuple
    means: tuple
    x: tuple
    w: tuple
    y: tuple
    beta: Fraction
    eta: Fraction
    eps: Fraction
    floors: tuple
    target: tuple
    slack: dict = field(default_factory=dict)
    denominators: tuple = ()

    @property
    def period(self) -> int:
        return len(self.cycles[0])


def _frac(x) -> Fraction:
    return Fraction(x) if not isinstance(x, Fraction) else x


def _points(game: StageGame):
    src = game.payoffs if game.exact else game.g
    return {a: tuple(_frac(float(c)) if not game.exact else _frac(c) for c in src[a]) for a in game.profiles()}


def _sqnorm(u) -> Fraction:
    return sum(c * c for c in u)


def _families(points_y, v, floors, n):
    """Margins of the three families for a list of per-player points."""
    smir = min(points_y[i][j] - floors[j] for i in range(n) for j in range(n))
    tpd = min(v[i] - points_y[i][i] for i in range(n))
    pa = min((points_y[j][i] - points_y[i][i] for i in range(n) for j in range(n) if j != i),
             default=Fraction(10 ** 9))
    return {"smir": smir, "tpd": tpd, "pa": pa}


def _convex_weights(pts: dict, target) -> dict:
    """Canonical convex weights of ``target``: minimise the weighted squared
    distance to the target, which does not depend on how players or profiles
    are ordered when the optimum is unique."""
    profs = list(pts)
    n = len(target)
    cost = [_sqnorm([p - t for p, t in zip(pts[a], target)]) for a in profs]
    A_eq = [[pts[a][k] for a in profs] for k in range(n)] + [[1] * len(profs)]
    b_eq = list(target) + [1]
    res = linprog_exact(cost, A_eq=A_eq, b_eq=b_eq, maximize=False)
    if not res.ok:
        raise TargetError(f"point {tuple(float(c) for c in target)} is not a convex combination of pure payoffs")
    return {a: w for a, w in zip(profs, res.x) if w > 0}


def _round_weights(weights: dict, denom: int, pts: dict, target) -> dict:
    """Integer counts summing to ``denom`` by largest remainder (ties: nearer
    payoff first, then profile order)."""
    raw = {a: w * denom for a, w in weights.items()}
    counts = {a: math.floor(r) for a, r in raw.items()}
    short = denom - sum(counts.values())
    order = sorted(raw, key=lambda a: (-(raw[a] - counts[a]),
                                       _sqnorm([p - t for p, t in zip(pts[a], target)]), a))
    for a in order[:short]:
        counts[a] += 1
    return {a: c for a, c in counts.items() if c > 0}


def _mean(counts: dict, pts: dict, n: int):
    total = sum(counts.values())
    return tuple(sum(Fraction(c) * pts[a][k] for a, c in counts.items()) / total for k in range(n))


def build_reward_cycles(game: StageGame, v: Sequence, eps=None, floors=None) -> RewardCycleSet:
    """Reward cycles for target ``v``.

    Parameters
    ----------
    v : target payoff in the interior of ``F^MI``.
    eps : slack; by default one third of the smallest margin of the blended
        points, the largest value the construction allows.
    floors : MI minmax values (computed when omitted).

    Raises
    ------
    DimensionError
        When ``F^MI`` is not full-dimensional.
    TargetError
        When ``v`` is not interior or ``eps`` is too large.
    """
    n = game.player_count
    v = tuple(_frac(c) for c in v)
    if floors is None:
        floors = eqm.minmax(game, "mi").values
    floors = tuple(_frac(f) for f in floors)
    F = feasible_set(game)
    fmi = clip_below(F, floors, strict=True, label="F_MI")
    if fmi.empty or dimension(fmi) < n:
        raise DimensionError(f"F^MI has dimension {dimension(fmi)} < {n}; the construction needs full dimension")
    if not contains(fmi, v, interior=True):
        raise TargetError(f"target {tuple(float(c) for c in v)} is not in the interior of F^MI")

    pts = _points(game)
    uniq = sorted(set(pts.values()))
    centre = tuple(sum(p[k] for p in uniq) / len(uniq) for k in range(n))

    # worst points: the pure payoff minimising g_i, ties to the best for the others
    w = []
    for i in range(n):
        best = min(pts.items(), key=lambda kv: (kv[1][i], -sum(kv[1]), kv[0]))
        w.append(best[1])
    # asymmetric points: the centre pushed down along each axis, kept inside F
    x = []
    for i in range(n):
        tau = Fraction(1, 2)
        for _ in range(HALVING_CAP):
            cand = tuple(c - (tau if k == i else 0) for k, c in enumerate(centre))
            if contains(F, cand):
                break
            tau /= 2
        else:
            raise DimensionError("could not perturb the centre of F inside F")
        x.append(cand)

    choice = None
    pairs = sorted(((kb, ke) for kb in range(HALVING_CAP) for ke in range(HALVING_CAP)),
                   key=lambda p: (p[0] + p[1], p[0]))
    for kb, ke in pairs:
        beta, eta = Fraction(1, 2 ** (kb + 1)), Fraction(1, 2 ** (ke + 1))
        y = [tuple(beta * (1 - eta) * w[i][k] + beta * eta * x[i][k] + (1 - beta) * v[k] for k in range(n))
             for i in range(n)]
        margins = _families(y, v, floors, n)
        slack = min(margins.values())
        if slack > 0 and (eps is None or slack >= 3 * _frac(eps)):
            choice = (beta, eta, y, margins, slack)
            break
    if choice is None:
        raise TargetError("no blending weights give the required slack; reduce eps")
    beta, eta, y, margins, slack = choice
    eps = slack / 3 if eps is None else _frac(eps)

    counts, denoms = [], []
    for i in range(n):
        weights = _convex_weights(pts, y[i])
        for m in range(MAX_POWER + 1):
            c = _round_weights(weights, 2 ** m, pts, y[i])
            if _sqnorm([a - b for a, b in zip(_mean(c, pts, n), y[i])]) < eps * eps:
                counts.append(c)
                denoms.append(2 ** m)
                break
        else:
            raise TargetError(f"no dyadic approximation within eps up to 2^{MAX_POWER} for player {i}")
    period = math.lcm(*denoms)
    cycles, means = [], []
    for i in range(n):
        rep = period // denoms[i]
        seq = [a for a, c in counts[i].items() for _ in range(c * rep)]
        seq.sort(key=lambda a: (pts[a][i], a))
        cycles.append(tuple(seq))
        means.append(_mean({a: c * rep for a, c in counts[i].items()}, pts, n))

    final = {
        "idev": min(means[i][i] - floors[i] - eps for i in range(n)),
        "onpath": min(v[i] - means[i][i] - eps for i in range(n)),
        "jdev": min((means[j][i] - means[i][i] - eps for i in range(n) for j in range(n) if j != i),
                    default=Fraction(10 ** 9)),
    }
    bad = [k for k, m in final.items() if m <= 0]
    if bad:
        raise TargetError(f"reward cycles violate {', '.join(bad)} (margins {final})")
    return RewardCycleSet(tuple(cycles), tuple(means), tuple(x), tuple(w), tuple(y), beta, eta, eps,
                          floors, v, {**final, **{f"blend_{k}": m for k, m in margins.items()}},
                          tuple(denoms))
