"""Decomposition of points of a ball into current play plus continuations.

For a ball ``B(c, r)`` inside the MI-restricted feasible set and a point
``v`` of the ball, :func:`decompose_ball_point` finds a current profile and
normalised continuation transfers ``x`` with

    v = g(alpha) + E[x | alpha],     w = v + (1 - delta) / delta * x,

such that every continuation ``w`` lies in the ball for all discount factors
above a computed threshold, on-support actions are exactly indifferent and
off-support actions lose a fixed slack.

* Interior points, or boundary points with a stage Nash equilibrium above
  the tangent hyperplane, use that equilibrium and a constant ``x``.
* Other boundary points start from an MI-score witness in the outward
  normal direction, add per-player penalties solved from the own-signal
  factor (individual full rank), and blend until the transfers point
  strictly into the ball.  In negative coordinate directions the transfers
  are garbled with a public draw so that each player's continuation takes
  two values with a switch probability that is constant on the support.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import equilibria as eqm
from .. import scoring
from ..game_core import MixedProfile, StageGame, deviation_rewards, expected_reward
from ..monitoring import MonitoringStructure

HALVING_CAP = 32
TOL = 1e-9


class IfrError(ValueError):
    """A player's own-signal matrix does not have full row rank."""


class GeometryError(ValueError):
    """The ball is not inside the score bound, or blending did not give strict transfers."""


@dataclass
class Garbling:
    """Two-value garbling of one player's transfers.

    ``switch[y_j]`` is the probability of paying ``high`` after own signal
    ``y_j``; otherwise ``low`` is paid.
    """

    low: float
    high: float
    switch: np.ndarray

    def expectation(self) -> np.ndarray:
        return self.low + (self.high - self.low) * self.switch


def garble(values: np.ndarray, tol: float = 1e-12) -> Garbling:
    """Garbling of transfers ``values[y_j]`` that preserves each expectation.

    Values spread by at most ``tol`` (relative to their size) are treated as
    constant, so rounding noise does not create a spurious lottery.
    """
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= tol * max(1.0, abs(lo), abs(hi)):
        mid = float(values.mean())
        return Garbling(mid, mid, np.zeros_like(values))
    return Garbling(lo, hi, (values - lo) / (hi - lo))


@dataclass
class BallDecomposition:
    """Result of :func:`decompose_ball_point`.

    Attributes
    ----------
    case : "interior-nash", "boundary-nash" or "boundary-score".
    profile : current profile.
    direction : outward normal (None for interior points).
    v_star, score : MI-score point and score (score route only).
    beta, gamma : blending weights (score route only).
    eta : slack of off-support actions in the normalised decomposition.
    transfers : ``x[y]`` as an array ``(|Y|, n)`` before garbling (with the
        ``v - v''`` shift applied).
    garbling : per-player :class:`Garbling` (negative coordinate directions).
    outcomes : every distinct continuation transfer vector ``x(y, nu)``.
    delta : threshold above which all continuations lie in the ball.
    """

    game: StageGame
    ms: MonitoringStructure | None
    center: tuple
    radius: float
    v: tuple
    case: str
    profile: MixedProfile
    direction: tuple | None
    transfers: np.ndarray
    outcomes: np.ndarray
    delta: float
    eta: float
    v_star: tuple | None = None
    score: float | None = None
    beta: float | None = None
    gamma: float | None = None
    garbling: list | None = None
    x_prime: list | None = None
    meta: dict = field(default_factory=dict)

    def continuation_points(self, delta: float) -> np.ndarray:
        """All continuation payoffs ``w = v + (1 - delta)/delta x`` at ``delta``."""
        return np.asarray(self.v) + (1 - delta) / delta * self.outcomes

    def expected_transfers(self, i: int, k: int) -> float:
        """``E[x_i | a_i = k, alpha_{-i}]`` including the garbling."""
        if self.garbling is not None:
            gb = self.garbling[i]
            own = np.asarray([float(p) for p in self.ms.own_factor(i, exact=False)[k]])
            shift = self.transfers_shift[i]
            return float(own @ gb.expectation()) + shift
        if self.ms is None:
            return float(self.transfers[0, i])
        prof = self.profile.replace(i, _pure_action(k, self.game.shape[i]))
        py = np.asarray([float(p) for p in self.ms.signal_distribution(prof)])
        return float(py @ self.transfers[:, i])

    @property
    def transfers_shift(self) -> np.ndarray:
        return np.asarray(self.meta.get("shift", np.zeros(len(self.v))))

    def check(self, delta: float | None = None) -> dict:
        """Re-verify the decomposition: promise keeping, incentives, strictness,
        garbling and ball membership at ``delta`` (default threshold + 1e-6)."""
        game, n = self.game, self.game.player_count
        d = min(self.delta + 1e-6, 1 - 1e-12) if delta is None else delta
        v = np.asarray(self.v)
        out = {"promise": 0.0, "indifference": 0.0, "slack": math.inf, "budget": -math.inf,
               "ball": 0.0, "garble_expectation": 0.0, "switch_spread": 0.0}
        for i in range(n):
            rew = [float(x) for x in deviation_rewards(game, i, self.profile)]
            supp = self.profile[i].support
            vals = [rew[k] + self.expected_transfers(i, k) for k in range(game.shape[i])]
            mean = sum(float(self.profile[i][k]) * vals[k] for k in supp)
            out["promise"] = max(out["promise"], abs(mean - v[i]))
            for k in range(game.shape[i]):
                if k in supp:
                    out["indifference"] = max(out["indifference"], abs(vals[k] - v[i]))
                else:
                    out["slack"] = min(out["slack"], v[i] - vals[k])
        if self.direction is not None:
            lam = np.asarray(self.direction)
            base = self.outcomes - self.transfers_shift
            out["budget"] = float((base @ lam).max())
        if self.garbling is not None:
            for i, gb in enumerate(self.garbling):
                own_vals = self.meta["own_values"][i]
                out["garble_expectation"] = max(out["garble_expectation"],
                                                float(np.abs(gb.expectation() - own_vals).max()))
                fac = np.asarray(self.ms.own_factor(i, exact=False), dtype=float)
                probs = fac @ gb.switch
                supp = list(self.profile[i].support)
                out["switch_spread"] = max(out["switch_spread"], float(probs[supp].max() - probs[supp].min()))
        w = self.continuation_points(d)
        out["ball"] = float(np.linalg.norm(w - np.asarray(self.center), axis=1).max() - self.radius)
        out["delta"] = d
        return out


def _pure_action(k: int, m: int):
    from ..game_core import MixedAction

    return MixedAction.pure(k, m, exact=False)


def _kappa_max(x: np.ndarray, v: np.ndarray, c: np.ndarray, r: float) -> float:
    """Largest ``(1-delta)/delta`` keeping ``v + kappa x`` in ``B(c, r)``."""
    xx = float(x @ x)
    if xx == 0:
        return math.inf
    b = float(x @ (v - c))
    rest = float((v - c) @ (v - c)) - r * r
    disc = b * b - xx * rest
    if disc < 0:
        return 0.0
    return max(0.0, (-b + math.sqrt(disc)) / xx)


def _threshold(outcomes: np.ndarray, v: np.ndarray, c: np.ndarray, r: float) -> float:
    kappa = min(_kappa_max(x, v, c, r) for x in outcomes)
    if kappa <= 0:
        raise GeometryError("some continuation points outward; no discount factor keeps it in the ball")
    return 0.0 if math.isinf(kappa) else 1.0 / (1.0 + kappa)


def _own_index(ms: MonitoringStructure):
    sizes = [len(s) for s in ms.signal_sets]
    return sizes, [np.unravel_index(k, sizes) for k in range(int(np.prod(sizes)))]


def _nash_route(game, ms, v, c, r, case, lam, nash) -> BallDecomposition:
    g = np.asarray([float(x) for x in expected_reward(game, nash)])
    x = v - g
    ny = ms.signal_count if ms is not None else 1
    transfers = np.tile(x, (ny, 1))
    outcomes = x[None, :]
    delta = _threshold(outcomes, v, c, r)
    eta = _nash_slack(game, nash)
    return BallDecomposition(game, ms, tuple(c), r, tuple(v), case, nash, lam, transfers, outcomes, delta, eta)


def _nash_slack(game, prof) -> float:
    slack = math.inf
    for i in range(game.player_count):
        rew = [float(x) for x in deviation_rewards(game, i, prof)]
        best = max(rew[k] for k in prof[i].support)
        for k in range(game.shape[i]):
            if k not in prof[i].support:
                slack = min(slack, best - rew[k])
    return slack


def decompose_ball_point(game: StageGame, ms: MonitoringStructure, center: Sequence[float], radius: float,
                         v: Sequence[float], delta: float | None = None, tol: float = TOL) -> BallDecomposition:
    """Decompose ``v`` in ``B(center, radius)``.

    Parameters
    ----------
    ms : public monitoring with product structure.
    delta : optional discount factor; when given it must be at least the
        computed threshold.

    Raises
    ------
    IfrError
        When some player's own-signal matrix lacks full row rank.
    GeometryError
        When the outward score does not exceed ``lambda . v`` or blending fails.
    """
    if ms.kind != "public_product":
        raise ValueError("decompose_ball_point needs public monitoring with product structure")
    n = game.player_count
    v = np.asarray(v, dtype=float)
    c = np.asarray(center, dtype=float)
    r = float(radius)
    dist = float(np.linalg.norm(v - c))
    if dist > r * (1 + 1e-12):
        raise GeometryError("v is not in the ball")
    for i in range(n):
        fac = np.asarray(ms.own_factor(i, exact=False), dtype=float)
        if np.linalg.matrix_rank(fac, tol=1e-10) < game.shape[i]:
            raise IfrError(f"individual full rank fails for player {i}")
    nash = eqm.enumerate_stage_nash(game)
    if dist < r * (1 - 1e-12):
        res = _nash_route(game, ms, v, c, r, "interior-nash", None, nash[0])
        return _finish(res, delta)
    lam = (v - c) / dist
    above = [(float(lam @ np.asarray([float(x) for x in expected_reward(game, p)])), p) for p in nash]
    best = max(above, key=lambda t: t[0])
    if best[0] > float(lam @ v) + tol:
        res = _nash_route(game, ms, v, c, r, "boundary-nash", tuple(lam), best[1])
        return _finish(res, delta)

    sc = scoring.mi_score(game, ms, lam)
    if sc.witness is None or sc.score <= float(lam @ v) + tol:
        raise GeometryError(f"MI score {sc.score:.6g} does not exceed lambda.v = {float(lam @ v):.6g}; "
                            "the ball is not inside the score bound")
    alpha = sc.witness.profile
    x_star = np.asarray(sc.witness.transfers, dtype=float)        # (|Y|, n)
    v_star = np.asarray(sc.witness.value, dtype=float)
    sizes, idx = _own_index(ms)
    negative = bool(np.isclose(lam, -np.eye(n)).all(axis=1).any())

    # penalties: own-signal transfers making off-support actions lose 1
    x_prime_own = []
    for i in range(n):
        fac = np.asarray(ms.own_factor(i, exact=False), dtype=float)
        rew = np.asarray([float(x) for x in deviation_rewards(game, i, alpha)])
        target = np.asarray([v[i] - (0 if k in alpha[i].support else 1) for k in range(game.shape[i])]) - rew
        sol, *_ = np.linalg.lstsq(fac, target, rcond=None)
        if np.abs(fac @ sol - target).max() > 1e-9:
            raise IfrError(f"individual full rank fails for player {i}")
        x_prime_own.append(sol)
    x_prime = np.asarray([[x_prime_own[i][y[i]] for i in range(n)] for y in idx])

    if negative:
        # replace x* by its conditional expectation given each player's own signal
        marg = [np.asarray([float(p) for p in _own_marginal(ms, j, alpha)]) for j in range(n)]
        proj = np.zeros_like(x_star)
        for j in range(n):
            own = _project(x_star[:, j].reshape(sizes), j, marg)
            proj[:, j] = [own[y[j]] for y in idx]
        x_star = proj

    beta = gamma = None
    x_dd = None
    pairs = sorted(((kb, kg) for kb in range(HALVING_CAP) for kg in range(HALVING_CAP)), key=lambda p: (p[0] + p[1], p[0]))
    for kb, kg in pairs:
        b, gm = 0.5 ** (kb + 1), 0.5 ** (kg + 1)
        cand = b * gm * x_prime + b * (1 - gm) * (v - v_star) + (1 - b * gm) * x_star
        if float((cand @ lam).max()) < -tol:
            beta, gamma, x_dd = b, gm, cand
            break
    if x_dd is None:
        raise GeometryError(f"lambda . x'' is not strictly negative after {HALVING_CAP} halvings")
    v_dd = beta * v + (1 - beta) * v_star
    shift = v - v_dd
    meta = {"v_dd": tuple(v_dd), "shift": tuple(shift)}
    garbling = None
    if negative:
        garbling, own_vals = [], []
        for j in range(n):
            own = np.zeros(sizes[j])
            for k, y in enumerate(idx):
                own[y[j]] = x_dd[k, j]
            own_vals.append(own)
            garbling.append(garble(own))
        meta["own_values"] = own_vals
        choices = [sorted({gb.low, gb.high}) for gb in garbling]
        outcomes = np.asarray([np.asarray(combo) + shift for combo in itertools.product(*choices)])
    else:
        outcomes = x_dd + shift
    transfers = x_dd + shift
    thr = _threshold(outcomes, v, c, r)
    res = BallDecomposition(game, ms, tuple(c), r, tuple(v), "boundary-score", alpha, tuple(lam), transfers,
                            outcomes, thr, beta * gamma, tuple(v_star), float(sc.score), beta, gamma, garbling,
                            x_prime_own, meta)
    return _finish(res, delta)


def _own_marginal(ms: MonitoringStructure, j: int, alpha: MixedProfile) -> list:
    fac = np.asarray(ms.own_factor(j, exact=False), dtype=float)
    return list(alpha[j].as_array() @ fac)


def _project(table: np.ndarray, j: int, marg: list) -> np.ndarray:
    """Conditional expectation of ``table[y_1, ..., y_n]`` given ``y_j``."""
    out = table
    # contract the other axes from the last to the first so axis numbers stay valid
    for k in sorted((k for k in range(table.ndim) if k != j), reverse=True):
        out = np.tensordot(out, marg[k], axes=([k], [0]))
    return out


def _finish(res: BallDecomposition, delta: float | None) -> BallDecomposition:
    if delta is not None and delta < res.delta:
        raise GeometryError(f"delta {delta} is below the decomposition threshold {res.delta:.9g}")
    return res
