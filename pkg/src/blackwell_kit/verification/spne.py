"""Subgame-perfection check for finite automata under perfect monitoring.

For a fixed discount factor the normalised state values solve

    V = (1 - delta) r + delta [(1 - p) P + p 1 e_0'] V,

where ``r`` is the expected stage reward in each state, ``P`` the on-path
transition matrix and ``p`` the reboot probability.  A one-shot deviation
by player i to pure action k in state s is worth

    (1 - delta) g_i(k, alpha_{-i}) + delta E[(1 - p) V_i(next) + p V_i(initial)],

and the profile is subgame perfect when no such value exceeds ``V_i(s)``.
Because the expectation is taken for every pure action, actions inside the
support of a mixed output must reach ``V_i(s)`` exactly (indifference).
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..config import settings, thread_cap
from ..game_core import DiscountGrid, StageGame
from .automata import PerfectAutomaton
from .report import Violation, build_report


class DomainError(ValueError):
    """The value system is singular (discount factor outside [0, 1))."""


@dataclass(frozen=True)
class _Compiled:
    m: int
    n: int
    reward: np.ndarray          # (m, n) expected stage rewards
    P: sp.csr_matrix            # on-path transition matrix
    initial: int
    reboot: float
    # deviation rows: one per (state, player, action)
    row_state: np.ndarray
    row_player: np.ndarray
    row_action: np.ndarray
    row_support: np.ndarray     # action is in the support of the output
    row_pure: np.ndarray        # the player's output action is pure
    # entries: (row, weight, next state, stage reward of the deviator)
    ent_row: np.ndarray
    ent_w: np.ndarray
    ent_next: np.ndarray
    ent_g: np.ndarray
    rows: int


def _as_automaton(obj) -> PerfectAutomaton:
    if hasattr(obj, "to_automaton"):
        obj = obj.to_automaton()
    if not isinstance(obj, PerfectAutomaton):
        raise TypeError(f"verify_spne_grid needs a perfect-monitoring automaton, got {type(obj).__name__}")
    return obj


def compile_automaton(game: StageGame, aut: PerfectAutomaton) -> _Compiled:
    """Flatten the automaton into arrays reused across discount factors."""
    n, m = game.player_count, len(aut)
    shape = game.shape
    profiles = list(itertools.product(*(range(k) for k in shape)))
    pi, pj, pv = [], [], []
    reward = np.zeros((m, n))
    row_state, row_player, row_action, row_support, row_pure = [], [], [], [], []
    ent_row, ent_w, ent_next, ent_g = [], [], [], []
    for s in range(m):
        probs = [np.asarray([float(x) for x in act.probs]) for act in aut.outputs[s].actions]
        nxt = {}
        for a in profiles:
            w = float(np.prod([probs[j][a[j]] for j in range(n)]))
            t = aut.transition(s, a)
            nxt[a] = t
            if w > 0:
                pi.append(s)
                pj.append(t)
                pv.append(w)
                reward[s] += w * game.g[a]
        for i in range(n):
            for k in range(shape[i]):
                r = len(row_state)
                row_state.append(s)
                row_player.append(i)
                row_action.append(k)
                row_support.append(probs[i][k] > 0)
                row_pure.append(int((probs[i] > 0).sum()) == 1)
                for a in profiles:
                    if a[i] != k:
                        continue
                    w = float(np.prod([probs[j][a[j]] for j in range(n) if j != i]))
                    if w > 0:
                        ent_row.append(r)
                        ent_w.append(w)
                        ent_next.append(nxt[a])
                        ent_g.append(game.g[a][i])
    P = sp.csr_matrix((pv, (pi, pj)), shape=(m, m))
    return _Compiled(m, n, reward, P, aut.initial, float(aut.reboot),
                     np.asarray(row_state), np.asarray(row_player), np.asarray(row_action),
                     np.asarray(row_support, dtype=bool), np.asarray(row_pure, dtype=bool),
                     np.asarray(ent_row), np.asarray(ent_w), np.asarray(ent_next, dtype=np.int64),
                     np.asarray(ent_g), len(row_state))


def state_values(c: _Compiled, delta: float) -> np.ndarray:
    """Normalised value of every state, shape ``(m, n)``."""
    if not (0 <= delta < 1):
        raise DomainError(f"the value system is singular or undefined at delta = {delta!r}; need 0 <= delta < 1")
    p = c.reboot
    M = sp.identity(c.m, format="csc") - delta * (1 - p) * c.P.tocsc()
    if p:
        col = sp.csc_matrix((np.full(c.m, delta * p), (np.arange(c.m), np.full(c.m, c.initial))), shape=(c.m, c.m))
        M = M - col
    rhs = (1 - delta) * c.reward
    V = spla.spsolve(M.tocsc(), rhs)
    return np.asarray(V).reshape(c.m, c.n)


def _gains(c: _Compiled, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Normalised one-shot gains (deviation value minus state value) per row."""
    V = state_values(c, delta)
    p = c.reboot
    pl = c.row_player[c.ent_row]
    cont = (1 - p) * V[c.ent_next, pl] + p * V[c.initial, pl]
    contrib = c.ent_w * ((1 - delta) * c.ent_g + delta * cont)
    dev = np.bincount(c.ent_row, weights=contrib, minlength=c.rows)
    return dev - V[c.row_state, c.row_player], V


def deviation_gains(game: StageGame, automaton, delta: float, normalised: bool = False) -> np.ndarray:
    """One-shot gains per (state, player, action) row, in compile order.

    Unnormalised gains (the default) are ``(dev - V) / (1 - delta)``; they
    are the quantities that a reboot with probability p maps from
    ``delta * (1 - p)`` to ``delta``.
    """
    c = compile_automaton(game, _as_automaton(automaton))
    g, _ = _gains(c, delta)
    return g if normalised else g / (1 - delta)


def _grid_points(grid) -> list[float]:
    if isinstance(grid, DiscountGrid):
        return [float(x) for x in grid.points()]
    return [float(x) for x in grid]


def verify_spne_grid(game: StageGame, simple_or_automaton, grid: DiscountGrid | Iterable[float],
                     tol: float | None = None, states: Iterable[int] | None = None):
    """One-shot deviation check at every discount factor of ``grid``.

    Parameters
    ----------
    simple_or_automaton : a :class:`PerfectAutomaton` or an object with
        ``to_automaton()`` (such as a simple strategy profile).
    grid : discount factors to test.
    tol : allowed normalised gain (default ``settings.tol``).
    states : restrict the check to these states (default: all reachable).

    Returns
    -------
    VerificationReport
        Violations name the state, player, deviating action and discount
        factor with the normalised gain as slack.

    Raises
    ------
    DomainError
        When a grid point is not in ``[0, 1)``.
    """
    tol = settings.tol if tol is None else tol
    aut = _as_automaton(simple_or_automaton)
    c = compile_automaton(game, aut)
    deltas = _grid_points(grid)
    for d in deltas:
        if not (0 <= d < 1):
            raise DomainError(f"the value system is singular or undefined at delta = {d!r}; need 0 <= delta < 1")
    keep = np.zeros(c.m, dtype=bool)
    keep[list(aut.reachable() if states is None else states)] = True
    mask = keep[c.row_state]

    def one(d):
        g, _ = _gains(c, d)
        g = np.where(mask, g, -np.inf)
        return d, g

    workers = min(thread_cap(), len(deltas))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, deltas))
    else:
        results = [one(d) for d in deltas]

    # rows whose action is the unique prescribed one have gain zero by
    # construction; they count for the verdict but are never "binding"
    trivial = c.row_support & c.row_pure
    items, per_delta = [], []
    for d, g in results:
        per_delta.append(float(g.max()))
        bad = np.flatnonzero(g > tol)
        picks = set(bad[np.argsort(-g[bad])][:20].tolist())
        for sel in (~c.row_support, c.row_support & ~trivial):
            if sel.any():
                cand = np.where(sel, g, -np.inf)
                r = int(np.argmax(cand))
                if np.isfinite(cand[r]):
                    picks.add(r)
        for r in picks:
            s, i, k = int(c.row_state[r]), int(c.row_player[r]), int(c.row_action[r])
            kind = "indifference" if c.row_support[r] else "one-shot deviation"
            items.append(Violation(kind, float(g[r]), aut.states[s], i, game.action_labels[i][k], d))
    notes = ["grid-certified: checked at the listed discount factors only"]
    details = {"deltas": len(deltas), "states": int(keep.sum()),
               "low": min(deltas) if deltas else None, "high": max(deltas) if deltas else None,
               "worst_per_delta": per_delta}
    return build_report("spne-grid", items, tol, notes=notes, details=details)


def _functional_values(game: StageGame, aut, d, p):
    """Exact values when every state has a single on-path successor.

    Each value is written as ``alpha + beta * V(initial)``; cycles of the
    successor map are closed with a geometric sum and tree states are filled
    in backwards. Returns ``None`` when some state's support can reach two
    different successors.
    """
    from fractions import Fraction

    m, n = len(aut), game.player_count
    pay = game.payoffs if game.exact else game.g
    succ, rew = [], []
    for s in range(m):
        out = aut.outputs[s]
        targets = set()
        r = [Fraction(0)] * n
        for a in itertools.product(*(act.support for act in out.actions)):
            w = Fraction(out.probability(a))
            targets.add(aut.transition(s, a))
            for i in range(n):
                r[i] += (1 - d) * w * Fraction(pay[a][i])
        if len(targets) != 1:
            return None
        succ.append(targets.pop())
        rew.append(r)
    k, e = d * (1 - p), d * p
    alpha: list = [None] * m
    beta: list = [None] * m
    for start in range(m):
        if alpha[start] is not None:
            continue
        path, pos = [], {}
        s = start
        while alpha[s] is None and s not in pos:
            pos[s] = len(path)
            path.append(s)
            s = succ[s]
        if alpha[s] is None:
            cycle = path[pos[s]:]
            path = path[: pos[s]]
            L = len(cycle)
            denom = 1 - k**L
            a0 = [sum(k**j * rew[cycle[j]][i] for j in range(L)) / denom for i in range(n)]
            b0 = e * sum(k**j for j in range(L)) / denom
            alpha[cycle[0]], beta[cycle[0]] = a0, b0
            for u in reversed(cycle[1:]):
                t = succ[u]
                alpha[u] = [rew[u][i] + k * alpha[t][i] for i in range(n)]
                beta[u] = e + k * beta[t]
        for u in reversed(path):
            t = succ[u]
            alpha[u] = [rew[u][i] + k * alpha[t][i] for i in range(n)]
            beta[u] = e + k * beta[t]
    c = [alpha[aut.initial][i] / (1 - beta[aut.initial]) for i in range(n)]
    return [tuple(alpha[s][i] + beta[s] * c[i] for i in range(n)) for s in range(m)]


def exact_state_values(game: StageGame, automaton, delta) -> list:
    """Normalised state values in exact arithmetic (rational outputs and delta).

    Automata whose supports lead to a single successor per state are solved
    in linear time; otherwise the system is solved by Gaussian elimination
    over the rationals.
    """
    from fractions import Fraction

    from ..rational import solve_exact

    aut = _as_automaton(automaton)
    d = delta if isinstance(delta, Fraction) else Fraction(delta)
    if not (0 <= d < 1):
        raise DomainError(f"need 0 <= delta < 1, got {delta!r}")
    p = aut.reboot if isinstance(aut.reboot, Fraction) else Fraction(aut.reboot)
    m, n = len(aut), game.player_count
    pay = game.payoffs if game.exact else game.g
    fast = _functional_values(game, aut, d, p)
    if fast is not None:
        return fast
    A = [[Fraction(int(r == c)) for c in range(m)] for r in range(m)]
    rhs = [[Fraction(0)] * n for _ in range(m)]
    for s in range(m):
        out = aut.outputs[s]
        for a in itertools.product(*(act.support for act in out.actions)):
            w = Fraction(out.probability(a))
            t = aut.transition(s, a)
            A[s][t] -= d * (1 - p) * w
            for i in range(n):
                rhs[s][i] += (1 - d) * w * Fraction(pay[a][i])
        A[s][aut.initial] -= d * p
    cols = []
    for i in range(n):
        sol = solve_exact(A, [rhs[s][i] for s in range(m)])
        if sol is None:
            raise DomainError("singular value system")
        cols.append(sol[0])
    return [tuple(cols[i][s] for i in range(n)) for s in range(m)]
