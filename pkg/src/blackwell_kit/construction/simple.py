"""Stick-and-carrot simple strategy profiles under perfect monitoring.

Phases:

* Phase I: the target path ``a(v, eps, delta)``.
* Phase II(i): the MI-minmax profile ``alpha^i`` against player i for ``N`` rounds.
* Phase III(i): player i's reward cycle, started at its lowest-reward entry.

A unilateral deviation by player j outside the support of their prescribed
action starts Phase II(j); choices inside the support are ignored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import equilibria as eqm
from ..game_core import MixedProfile, StageGame, expected_reward
from ..verification.automata import PerfectAutomaton
from .rewards import RewardCycleSet, build_reward_cycles
from .sequences import ActionSequence, build_target_sequence, delta_hat

FAMILIES = ("Rewards", "IC-I", "IC-II(i)", "IC-II(j)", "IC-III(i)", "IC-III(j)")
TOP = 1 - 1e-6


class ConstantsError(ValueError):
    """No admissible discount threshold; the message names the binding family."""


@dataclass(frozen=True)
class Constants:
    """Stick length and discount threshold chosen for a reward-cycle set.

    ``delta_low`` is the certified threshold (at least ``delta_hat``, the
    bound needed by the target-path builder); ``delta_families`` is where the
    six inequality families start to hold on the grid.
    """

    N: int
    delta_low: float
    delta_families: float
    delta_hat: float
    punishers: tuple
    margins: dict = field(default_factory=dict)


class _Data:
    """Scalars entering the inequality families, one row per player."""

    def __init__(self, game: StageGame, cycles: RewardCycleSet, punishers: Sequence[MixedProfile]):
        n = game.player_count
        self.n = n
        pay = game.g
        flat = pay.reshape(-1, n)
        self.gmax = flat.max(axis=0)
        self.gmin = flat.min(axis=0)
        self.gpun = np.array([[float(expected_reward(game, punishers[j])[i]) for j in range(n)] for i in range(n)])
        self.floor = np.array([float(f) for f in cycles.floors])
        self.means = np.array([[float(c) for c in m] for m in cycles.means])  # means[j][i] = v_i(j)
        self.v = np.array([float(c) for c in cycles.target])
        self.eps = float(cycles.eps)
        self.T = cycles.period
        self.cycle_pay = np.array([[pay[a] for a in cyc] for cyc in cycles.cycles])  # (n, T, n)


def _choose_n(d: _Data) -> int:
    for N in range(1, 10 ** 6):
        ok = all(d.gmax[i] + N * d.gpun[i, i] < (N + 1) * (d.means[i, i] - d.eps) for i in range(d.n))
        if ok:
            return N
    raise ConstantsError("no stick length N satisfies the choice-of-N inequality")


def _reward_margin(d: _Data, delta: float) -> float:
    """``eps`` minus the worst distance between a discounted cycle rotation and its mean."""
    T = d.T
    if delta >= 1:
        return d.eps - max(float(np.linalg.norm(d.cycle_pay[i].mean(axis=0) - d.means[i])) for i in range(d.n))
    w = delta ** np.arange(T)
    scale = (1 - delta) / (1 - delta ** T)
    worst = 0.0
    for i in range(d.n):
        pay = d.cycle_pay[i]
        for k in range(T):
            val = scale * (w[:, None] * np.roll(pay, -k, axis=0)).sum(axis=0)
            worst = max(worst, float(np.linalg.norm(val - d.means[i])))
    return d.eps - worst


def family_margins(d: _Data, N: int, delta: float) -> dict:
    """Right side minus left side of every family (positive means it holds).

    ``delta = 1`` returns the limits of the closed forms.
    """
    n, e = d.n, d.eps
    dN = delta ** N
    out = {"Rewards": _reward_margin(d, delta)}
    ic1, ic2i, ic2j, ic3i, ic3j = [], [], [], [], []
    for i in range(n):
        gp, vii = d.gpun[i, i], d.means[i, i]
        dev = (1 - delta) * d.gmax[i] + delta * ((1 - dN) * gp + dN * vii)
        ic1.append((1 - delta) * d.gmin[i] + delta * (d.v[i] - e) - dev)
        ic2i.append((1 - dN) * gp + dN * (vii - e) - d.floor[i])
        ic3i.append((1 - delta ** (N + 1)) * (vii - e) - ((1 - delta) * d.gmax[i] + delta * (1 - dN) * gp))
        for j in range(n):
            if j == i:
                continue
            vij = d.means[j, i]
            for t in range(1, N + 1):
                dt = delta ** t
                ic2j.append((1 - dt) * d.gpun[i, j] + dt * (vij - e) - dev)
            ic3j.append(vij - e - dev)
    out["IC-I"] = min(ic1)
    out["IC-II(i)"] = min(ic2i)
    out["IC-II(j)"] = min(ic2j, default=math.inf)
    out["IC-III(i)"] = min(ic3i)
    out["IC-III(j)"] = min(ic3j, default=math.inf)
    return {k: float(v) for k, v in out.items()}


def _holds(d: _Data, N: int, delta: float, grid: int) -> tuple[bool, str | None, float]:
    for x in np.linspace(delta, TOP, grid):
        m = family_margins(d, N, float(x))
        worst = min(m, key=m.get)
        if m[worst] <= 0:
            return False, worst, float(x)
    return True, None, delta


def choose_constants(game: StageGame, v: Sequence, cycles: RewardCycleSet, grid: int = 128,
                     punishers: Sequence[MixedProfile] | None = None, steps: int = 64) -> Constants:
    """Smallest stick length ``N`` and a bisected discount threshold.

    The threshold is the smallest value (to 64 bisection steps) at which all
    six inequality families hold on ``grid`` points between it and
    ``1 - 1e-6``; it is then raised to the target-path bound ``delta_hat``.

    Raises
    ------
    ConstantsError
        When the families fail near 1; the message names the binding family.
    """
    if punishers is None:
        punishers = eqm.minmax(game, "mi").witnesses
    d = _Data(game, cycles, punishers)
    if any(d.means[i, i] + d.eps >= d.v[i] for i in range(d.n)):
        raise ConstantsError("IC-I cannot hold: some v_i(i) + eps >= v_i")
    N = _choose_n(d)
    ok, fam, at = _holds(d, N, TOP, 2)
    if not ok:
        raise ConstantsError(f"no threshold below 1: {fam} fails at delta = {at:.9g}")
    lo, hi = 0.0, TOP
    if _holds(d, N, 0.0, grid)[0]:
        hi = 0.0
    else:
        for _ in range(steps):
            mid = (lo + hi) / 2
            if _holds(d, N, mid, grid)[0]:
                hi = mid
            else:
                lo = mid
    dh = delta_hat(game, v, float(cycles.eps))
    low = max(hi, dh)
    return Constants(N, low, hi, dh, tuple(punishers), family_margins(d, N, low))


def family_limits(game: StageGame, cycles: RewardCycleSet, N: int,
                  punishers: Sequence[MixedProfile] | None = None) -> dict:
    """Limits of the family margins as delta -> 1 (closed forms at delta = 1)."""
    if punishers is None:
        punishers = eqm.minmax(game, "mi").witnesses
    return family_margins(_Data(game, cycles, punishers), N, 1.0)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PunishmentSpec:
    player: int
    alpha: MixedProfile
    N: int
    reward_cycle: tuple


@dataclass(frozen=True, eq=False)
class SimpleStrategyProfile:
    """Phase I path plus one punishment specification per player."""

    game: StageGame
    phase_one: ActionSequence
    punishments: tuple
    delta: float
    delta_low: float
    eps: float
    target: tuple
    constants: Constants | None = None
    cycles: RewardCycleSet | None = None

    def to_automaton(self) -> PerfectAutomaton:
        """States: Phase I positions, then II(i) rounds and III(i) positions per player."""
        game = self.game
        names, outputs, nxt = [], [], []
        seq = self.phase_one
        pos = seq.positions()
        base = 0
        for t, a in enumerate(pos):
            names.append(f"I:{t}")
            outputs.append(MixedProfile.pure(game, a))
            nxt.append(base + t + 1 if t + 1 < len(pos) else base + len(seq.preamble))
        start = []
        for spec in self.punishments:
            first = len(names)
            start.append(first)
            for r in range(spec.N):
                names.append(f"II({spec.player}):{r}")
                outputs.append(spec.alpha)
                nxt.append(first + r + 1)
            head = first + spec.N
            T = len(spec.reward_cycle)
            for t, a in enumerate(spec.reward_cycle):
                names.append(f"III({spec.player}):{t}")
                outputs.append(MixedProfile.pure(game, a))
                nxt.append(head + (t + 1) % T)
        dev = tuple(tuple(start) for _ in names)
        return PerfectAutomaton(tuple(names), tuple(outputs), tuple(nxt), dev)

    def export(self) -> dict:
        """Strategy JSON: automaton plus the constants that certify it."""
        c = self.constants
        return {
            "automaton": self.to_automaton().to_dict(self.game),
            "construction": "simple",
            "target": [float(x) for x in self.target],
            "eps": float(self.eps),
            "delta": float(self.delta),
            "delta_low": float(self.delta_low),
            "N": self.punishments[0].N if self.punishments else 0,
            "T": len(self.punishments[0].reward_cycle) if self.punishments else 0,
            "margins": {} if c is None else c.margins,
        }


def assemble_simple_profile(game: StageGame, v: Sequence, eps=None, delta: float | None = None) -> SimpleStrategyProfile:
    """Run the full pipeline: reward cycles, constants, target path, automaton.

    ``delta`` defaults to the certified threshold; a smaller value raises
    ``ConstantsError``.
    """
    cycles = build_reward_cycles(game, v, eps)
    const = choose_constants(game, v, cycles)
    if delta is None:
        delta = const.delta_low
    if delta < const.delta_low:
        raise ConstantsError(f"delta {delta} is below the certified threshold {const.delta_low:.9g}")
    eps_f = float(cycles.eps)
    path = build_target_sequence(game, v, eps_f, float(delta))
    pun = tuple(PunishmentSpec(i, const.punishers[i], const.N, cycles.cycles[i]) for i in range(game.player_count))
    return SimpleStrategyProfile(game, path, pun, float(delta), const.delta_low, eps_f,
                                 tuple(v), const, cycles)
