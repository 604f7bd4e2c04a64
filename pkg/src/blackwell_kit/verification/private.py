"""Exact evaluation of private-monitoring automata.

Each player runs a finite machine driven by their own action and own signal.
The evaluator works on the joint state space (one machine state per player):

* state values solve ``V = (1 - delta) r + delta K V`` over joint states;
* for every player it enumerates the beliefs that player can hold about the
  opponents' machine states after any own history (Bayes' rule, own
  deviations included), and runs the one-shot deviation test against each
  belief;
* on-path statistics come from the distribution over joint states, iterated
  until it becomes periodic.

Rational inputs are handled in exact arithmetic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from ..config import settings
from ..game_core import DiscountGrid, StageGame
from ..monitoring import MonitoringStructure
from ..rational import solve_exact
from .automata import PrivateAutomaton
from .report import Violation, build_report

MAX_JOINT = 10 ** 6
MAX_BELIEFS = 10 ** 5
EXACT_LIMIT = 256


class SizeError(ValueError):
    """The joint state space or the belief set is too large."""


def _num(x, exact: bool):
    if exact:
        return x if isinstance(x, Fraction) else Fraction(x)
    return float(x)


def as_rational_delta(d) -> Fraction:
    """Decimal-exact rational for a discount factor given as float or string."""
    if isinstance(d, Fraction):
        return d
    if isinstance(d, float):
        return Fraction(repr(d))
    return Fraction(d)


@dataclass
class _Model:
    game: StageGame
    exact: bool
    n: int
    sizes: tuple                 # machine sizes
    joint: list                  # list of joint states (tuples)
    index: dict
    out: list                    # out[i][s_i] = list of action probabilities
    trans: list                  # trans[i][s_i][a_i][y_i]
    sig_sizes: tuple
    kernel: dict                 # kernel[a] = list over joint signal tuples of (y, prob)
    pay: dict                    # pay[a] = payoff tuple
    initial: tuple               # initial joint state


def _model(game: StageGame, ms: MonitoringStructure, aut: PrivateAutomaton) -> _Model:
    if ms.kind != "private" or ms.signal_sets is None:
        raise ValueError("evaluate_private_automaton needs private monitoring with per-player signal sets")
    n = game.player_count
    if aut.player_count != n:
        raise ValueError("automaton and game disagree on the number of players")
    sizes = tuple(len(m.states) for m in aut.machines)
    total = math.prod(sizes)
    if total > MAX_JOINT:
        raise SizeError(f"{total} joint states exceed the limit of {MAX_JOINT}")
    exact = (ms.exact_kernel is not None and game.exact
             and all(isinstance(p, (int, Fraction)) for m in aut.machines for act in m.outputs for p in act.probs))
    sig_sizes = tuple(len(s) for s in ms.signal_sets)
    ys = list(itertools.product(*(range(k) for k in sig_sizes)))
    kernel, pay = {}, {}
    src = ms.exact_kernel if exact else ms.kernel
    for a in game.profiles():
        row = src[a]
        kernel[a] = [(y, _num(row[k], exact)) for k, y in enumerate(ys) if row[k] != 0]
        pay[a] = tuple(_num(x, exact) for x in (game.payoffs[a] if exact else game.g[a]))
    for i, m in enumerate(aut.machines):
        for act in m.outputs:
            if len(act) != game.shape[i]:
                raise ValueError(f"player {i}: machine output has {len(act)} actions, game has {game.shape[i]}")
        for row in m.transition_table:
            if len(row) != game.shape[i] or any(len(r) != sig_sizes[i] for r in row):
                raise ValueError(f"player {i}: transition table must be indexed [state][own action][own signal]")
    joint = list(itertools.product(*(range(k) for k in sizes)))
    out = [[[_num(p, exact) for p in act.probs] for act in m.outputs] for m in aut.machines]
    trans = [m.transition_table for m in aut.machines]
    return _Model(game, exact, n, sizes, joint, {s: k for k, s in enumerate(joint)}, out, trans,
                  sig_sizes, kernel, pay, tuple(m.initial for m in aut.machines))


def _profiles_at(mod: _Model, s: tuple, fixed: dict | None = None):
    """Pure profiles with probability at joint state ``s``; ``fixed`` pins players' actions."""
    fixed = fixed or {}
    choices = []
    for i in range(mod.n):
        if i in fixed:
            choices.append([(fixed[i], 1)])
        else:
            choices.append([(k, p) for k, p in enumerate(mod.out[i][s[i]]) if p != 0])
    for combo in itertools.product(*choices):
        a = tuple(k for k, _ in combo)
        w = 1
        for _, p in combo:
            w = w * p
        yield a, w


def _next(mod: _Model, s: tuple, a: tuple, y: tuple) -> tuple:
    return tuple(mod.trans[i][s[i]][a[i]][y[i]] for i in range(mod.n))


def _transition_rows(mod: _Model):
    """On-path kernel and expected rewards per joint state."""
    rows, rewards = [], []
    for s in mod.joint:
        row = {}
        r = [0] * mod.n
        for a, w in _profiles_at(mod, s):
            for i in range(mod.n):
                r[i] = r[i] + w * mod.pay[a][i]
            for y, q in mod.kernel[a]:
                t = mod.index[_next(mod, s, a, y)]
                row[t] = row.get(t, 0) + w * q
        rows.append(row)
        rewards.append(r)
    return rows, rewards


def _values(mod: _Model, rows, rewards, delta):
    """Normalised joint-state values, list of per-player tuples."""
    m = len(mod.joint)
    if mod.exact and m <= EXACT_LIMIT:
        d = as_rational_delta(delta)
        A = [[Fraction(int(r == c)) - d * rows[r].get(c, 0) for c in range(m)] for r in range(m)]
        cols = []
        for i in range(mod.n):
            sol = solve_exact(A, [(1 - d) * rewards[r][i] for r in range(m)])
            if sol is None:
                raise ValueError("singular value system")
            cols.append(sol[0])
        return [tuple(cols[i][r] for i in range(mod.n)) for r in range(m)], True
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    d = float(delta)
    ri, ci, vi = [], [], []
    for r, row in enumerate(rows):
        for c, p in row.items():
            ri.append(r)
            ci.append(c)
            vi.append(float(p))
    K = sp.csr_matrix((vi, (ri, ci)), shape=(m, m))
    M = (sp.identity(m, format="csc") - d * K).tocsc()
    R = np.asarray([[float(x) for x in r] for r in rewards])
    V = np.asarray(spla.spsolve(M, (1 - d) * R)).reshape(m, mod.n)
    return [tuple(float(x) for x in row) for row in V], False


# ---------------------------------------------------------------------------
# beliefs
# ---------------------------------------------------------------------------

def _others(s: tuple, i: int) -> tuple:
    return s[:i] + s[i + 1:]


def _join(own: int, rest: tuple, i: int) -> tuple:
    return rest[:i] + (own,) + rest[i:]


def _belief_key(mod: _Model, belief: dict):
    if mod.exact:
        return tuple(sorted(belief.items()))
    return tuple(sorted((k, round(v, 12)) for k, v in belief.items() if v > 1e-15))


def enumerate_beliefs(mod: _Model, i: int, onpath_only: bool = False) -> list:
    """Reachable ``(own state, belief over opponents' states)`` pairs of player ``i``.

    Every own action is explored (own deviations included) unless
    ``onpath_only``; the own signal is integrated by Bayes' rule.
    """
    init = mod.initial
    start = (init[i], {_others(init, i): (Fraction(1) if mod.exact else 1.0)})
    seen = {(start[0], _belief_key(mod, start[1]))}
    out = [start]
    queue = [start]
    while queue:
        own, belief = queue.pop()
        acts = range(mod.game.shape[i])
        if onpath_only:
            acts = [k for k, p in enumerate(mod.out[i][own]) if p != 0]
        for k in acts:
            post = {}
            for rest, b in belief.items():
                s = _join(own, rest, i)
                for a, w in _profiles_at(mod, s, {i: k}):
                    for y, q in mod.kernel[a]:
                        t = _next(mod, s, a, y)
                        key = (y[i], t[i], _others(t, i))
                        post[key] = post.get(key, 0) + b * w * q
            by_signal = {}
            for (yi, own_next, rest_next), p in post.items():
                by_signal.setdefault((yi, own_next), {})
                d = by_signal[(yi, own_next)]
                d[rest_next] = d.get(rest_next, 0) + p
            for (yi, own_next), dist in by_signal.items():
                total = sum(dist.values())
                if total == 0:
                    continue
                nb = {r: p / total for r, p in dist.items() if p != 0}
                key = (own_next, _belief_key(mod, nb))
                if key in seen:
                    continue
                seen.add(key)
                if len(seen) > MAX_BELIEFS:
                    raise SizeError(f"player {i} has more than {MAX_BELIEFS} distinct beliefs")
                item = (own_next, nb)
                out.append(item)
                queue.append(item)
    return out


def _action_value(mod: _Model, V, s: tuple, i: int, k: int, delta):
    """Value to player i of action k at joint state s, then conforming."""
    total = 0
    for a, w in _profiles_at(mod, s, {i: k}):
        cont = 0
        for y, q in mod.kernel[a]:
            cont = cont + q * V[mod.index[_next(mod, s, a, y)]][i]
        total = total + w * ((1 - delta) * mod.pay[a][i] + delta * cont)
    return total


def _next_reward(mod: _Model, rewards, s: tuple, i: int, k: int):
    """Expected next-round stage reward of i after playing k at s (then conforming)."""
    total = 0
    for a, w in _profiles_at(mod, s, {i: k}):
        for y, q in mod.kernel[a]:
            total = total + w * q * rewards[mod.index[_next(mod, s, a, y)]][i]
    return total


def _onpath_cycle(mod: _Model, rows, init: tuple, limit: int = 10000):
    """Distributions over joint states from ``init`` until they repeat."""
    mu = {mod.index[init]: (Fraction(1) if mod.exact else 1.0)}
    seq = []
    keys = {}
    for t in range(limit):
        key = tuple(sorted(mu.items())) if mod.exact else tuple(sorted((k, round(v, 12)) for k, v in mu.items()))
        if key in keys:
            return seq, keys[key]
        keys[key] = t
        seq.append(mu)
        nxt = {}
        for s, p in mu.items():
            for c, q in rows[s].items():
                nxt[c] = nxt.get(c, 0) + p * q
        mu = {k: v for k, v in nxt.items() if v != 0}
    return seq, None


def _average_actions(mod: _Model, mu: dict):
    avg = []
    for i in range(mod.n):
        acc = [0] * mod.game.shape[i]
        for s, p in mu.items():
            for k, q in enumerate(mod.out[i][mod.joint[s][i]]):
                acc[k] = acc[k] + p * q
        avg.append(tuple(acc))
    return tuple(avg)


@dataclass
class PrivateAnalysis:
    """Reusable pieces of the evaluation (independent of the discount factor)."""

    model: _Model
    rows: list
    rewards: list
    beliefs: list                # per player: list of (own state, belief)
    onpath_beliefs: list         # per player: beliefs reachable without own deviations
    cycle: list                  # on-path distributions over joint states
    cycle_start: int | None
    initial: tuple


def analyse(game: StageGame, ms: MonitoringStructure, aut: PrivateAutomaton) -> PrivateAnalysis:
    mod = _model(game, ms, aut)
    init = mod.initial
    rows, rewards = _transition_rows(mod)
    beliefs = [enumerate_beliefs(mod, i) for i in range(mod.n)]
    onpath = [enumerate_beliefs(mod, i, onpath_only=True) for i in range(mod.n)]
    cycle, start = _onpath_cycle(mod, rows, init)
    return PrivateAnalysis(mod, rows, rewards, beliefs, onpath, cycle, start, init)


def deviation_table(an: PrivateAnalysis, delta) -> list:
    """Per player, belief and action: ``(own state, belief, action, gain)``.

    Gains are normalised (deviation value minus conforming value).
    """
    mod = an.model
    d = as_rational_delta(delta) if mod.exact else float(delta)
    V, exact = _values(mod, an.rows, an.rewards, d)
    if not exact:
        d = float(d)
    out = []
    for i in range(mod.n):
        for own, belief in an.beliefs[i]:
            vals = []
            for k in range(mod.game.shape[i]):
                v = 0
                for rest, b in belief.items():
                    v = v + b * _action_value(mod, V, _join(own, rest, i), i, k, d)
                vals.append(v)
            conform = sum(p * vals[k] for k, p in enumerate(mod.out[i][own]))
            for k in range(mod.game.shape[i]):
                out.append((i, own, belief, k, vals[k] - conform))
    return out


def evaluate_private_automaton(game: StageGame, ms: MonitoringStructure, aut: PrivateAutomaton,
                               delta_grid: DiscountGrid | Iterable, tol: float | None = None,
                               analysis: PrivateAnalysis | None = None):
    """One-shot deviation test at every belief and discount factor, plus on-path statistics.

    The report's ``details`` hold:

    * ``onpath_average_actions``: per position of the eventual on-path
      cycle, each player's average mixed action (exact when possible);
    * ``next_round_reward``: for every on-path belief and off-support action,
      the deviator's expected stage reward in the following round;
    * ``opponent_next_average``: the opponents' average action in that round.
    """
    an = analysis or analyse(game, ms, aut)
    mod = an.model
    tol = (settings.tol if tol is None else tol)
    deltas = [float(x) for x in delta_grid.points()] if isinstance(delta_grid, DiscountGrid) else list(delta_grid)
    items = []
    for d in deltas:
        if not (0 <= float(d) < 1):
            raise ValueError(f"discount factor {d!r} outside [0, 1)")
        for i, own, belief, k, gain in deviation_table(an, d):
            supp = mod.out[i][own][k] != 0
            label = "indifference" if supp else "one-shot deviation"
            g = abs(gain) if (supp and len([p for p in mod.out[i][own] if p != 0]) > 1) else gain
            if supp and len([p for p in mod.out[i][own] if p != 0]) == 1:
                continue
            items.append(Violation(label, float(g), aut.machines[i].states[own], i,
                                   game.action_labels[i][k], float(d),
                                   detail=_fmt_belief(aut, i, belief)))
    details = _statistics(an, aut)
    notes = ["beliefs enumerated over every own history; exact arithmetic" if mod.exact
             else "beliefs enumerated over every own history; float arithmetic"]
    return build_report("private-automaton", items, tol, notes=notes, details=details)


def _fmt_belief(aut: PrivateAutomaton, i: int, belief: dict) -> str:
    others = [m for j, m in enumerate(aut.machines) if j != i]
    parts = []
    for rest, p in sorted(belief.items()):
        names = "/".join(o.states[r] for o, r in zip(others, rest))
        parts.append(f"{names}:{p}")
    return "belief " + ", ".join(parts)


def _statistics(an: PrivateAnalysis, aut: PrivateAutomaton) -> dict:
    mod = an.model
    start = an.cycle_start if an.cycle_start is not None else 0
    avgs = [_average_actions(mod, mu) for mu in an.cycle]
    next_rows = []
    for i in range(mod.n):
        for own, belief in an.onpath_beliefs[i]:
            for k, p in enumerate(mod.out[i][own]):
                if p != 0:
                    continue
                r = 0
                opp = [[0] * mod.game.shape[j] for j in range(mod.n)]
                for rest, b in belief.items():
                    s = _join(own, rest, i)
                    r = r + b * _next_reward(mod, an.rewards, s, i, k)
                    for a, w in _profiles_at(mod, s, {i: k}):
                        for y, q in mod.kernel[a]:
                            t = _next(mod, s, a, y)
                            for j in range(mod.n):
                                if j == i:
                                    continue
                                for kk, pp in enumerate(mod.out[j][t[j]]):
                                    opp[j][kk] = opp[j][kk] + b * w * q * pp
                next_rows.append({"player": i, "state": aut.machines[i].states[own], "action": mod.game.action_labels[i][k],
                                  "belief": _fmt_belief(aut, i, belief), "reward": r,
                                  "opponent_average": [tuple(o) for j, o in enumerate(opp) if j != i]})
    return {"onpath_average_actions": avgs, "cycle_start": start, "next_round_reward": next_rows,
            "joint_states": len(mod.joint), "beliefs": [len(b) for b in an.beliefs]}


def private_threshold(game: StageGame, ms: MonitoringStructure, aut: PrivateAutomaton,
                      lo: float = 1e-6, hi: float = 1 - 1e-6, steps: int = 60,
                      analysis: PrivateAnalysis | None = None) -> float | None:
    """Smallest discount factor above which every one-shot test passes, by bisection.

    Assumes a single crossing; returns ``None`` when the test fails at ``hi``.
    The bisection evaluates in floats; use :func:`evaluate_private_automaton`
    to confirm either side exactly.
    """
    an = analysis or analyse(game, ms, aut)

    def ok(d):
        worst = max(float(g) for _, _, _, _, g in deviation_table(an, d))
        return worst <= 0 or worst <= settings.tol

    if not ok(hi):
        return None
    if ok(lo):
        return lo
    for _ in range(steps):
        mid = (lo + hi) / 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# Monte Carlo cross-check
# ---------------------------------------------------------------------------

def monte_carlo_values(game: StageGame, ms: MonitoringStructure, aut: PrivateAutomaton, delta: float,
                       rounds: int = 10 ** 6, seed: int = 0, deviator: int | None = None,
                       action: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Simulated normalised values from the initial states.

    When ``deviator`` and ``action`` are given, that player plays ``action``
    in the first round and conforms afterwards.  Episodes are truncated where
    ``delta^H < 1e-12``; ``rounds`` is the total simulated round budget.
    Returns ``(mean, standard_error)`` per player.
    """
    rng = np.random.default_rng(seed)
    n = game.player_count
    H = max(1, math.ceil(math.log(1e-12) / math.log(delta))) if delta > 0 else 1
    E = max(1000, rounds // H)
    state = np.tile(np.asarray([m.initial for m in aut.machines]), (E, 1))
    out = [np.asarray([[float(p) for p in act.probs] for act in m.outputs]) for m in aut.machines]
    trans = [np.asarray(m.transition_table) for m in aut.machines]
    kernel = ms.kernel.reshape(-1, ms.kernel.shape[-1])
    sig_sizes = [len(s) for s in ms.signal_sets]
    total = np.zeros((E, n))
    w = 1.0
    for t in range(H):
        acts = np.empty((E, n), dtype=np.int64)
        for i in range(n):
            cdf = np.cumsum(out[i][state[:, i]], axis=1)
            acts[:, i] = (rng.random(E)[:, None] > cdf).sum(axis=1).clip(max=game.shape[i] - 1)
        if t == 0 and deviator is not None:
            acts[:, deviator] = action
        flat = np.ravel_multi_index(acts.T, game.shape)
        total += w * game.g.reshape(-1, n)[flat]
        cdf = np.cumsum(kernel[flat], axis=1)
        y = (rng.random(E)[:, None] > cdf).sum(axis=1).clip(max=kernel.shape[1] - 1)
        ys = np.stack(np.unravel_index(y, sig_sizes), axis=1)
        for i in range(n):
            state[:, i] = trans[i][state[:, i], acts[:, i], ys[:, i]]
        w *= delta
    vals = (1 - delta) * total
    return vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(E)


def exact_initial_values(game: StageGame, ms: MonitoringStructure, aut: PrivateAutomaton, delta,
                         deviator: int | None = None, action: int | None = None,
                         analysis: PrivateAnalysis | None = None) -> tuple:
    """Exact counterpart of :func:`monte_carlo_values`."""
    an = analysis or analyse(game, ms, aut)
    mod = an.model
    d = as_rational_delta(delta) if mod.exact else float(delta)
    V, exact = _values(mod, an.rows, an.rewards, d)
    if not exact:
        d = float(d)
    s = an.initial
    if deviator is None:
        return V[mod.index[s]]
    res = []
    for i in range(mod.n):
        tot = 0
        for a, wgt in _profiles_at(mod, s, {deviator: action}):
            cont = 0
            for y, q in mod.kernel[a]:
                cont = cont + q * V[mod.index[_next(mod, s, a, y)]][i]
            tot = tot + wgt * ((1 - d) * mod.pay[a][i] + d * cont)
        res.append(tot)
    return tuple(res)


def onpath_average_profiles(game: StageGame, ms: MonitoringStructure, aut: PrivateAutomaton,
                            analysis: PrivateAnalysis | None = None) -> list:
    """Average mixed profile at each round of the on-path prefix and cycle."""
    an = analysis or analyse(game, ms, aut)
    return [_average_actions(an.model, mu) for mu in an.cycle]
