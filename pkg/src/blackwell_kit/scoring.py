"""Enforcement-program scores and the payoff sets bounded by them.

For a direction ``lam`` and a profile ``alpha`` the enforcement program
chooses transfers ``x_i(y)`` (free variables, one per player and public
signal) that make ``alpha`` a Nash equilibrium of the augmented game
``g_i(a) + sum_y pi(y|a) x_i(y)``: each player is indifferent over the
support of ``alpha_i`` and weakly prefers it to every other action.  The
transfers must satisfy weighted budget balance ``lam . x(y) <= 0`` for every
signal, or ``lam . x(y) = 0`` with ``budget="exact"``.  The score is the
largest ``lam . v`` where ``v = g(alpha) + sum_y pi(y|alpha) x(y)``.

Limit payoff sets are the intersections of the halfspaces
``lam . v <= k(lam)`` with ``k`` maximised over pure or mixed profiles.  The
sweep uses a fan of directions plus normals of segments between pure payoff
vectors, then a sandwich refinement: every edge normal of the current outer
polygon is scored again and the edge is kept only when the score confirms
it.  For polygonal limit sets this terminates with the exact vertex set up to
solver precision.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import equilibria as eqm
from .config import settings
from .game_core import MixedAction, MixedProfile, StageGame, deviation_rewards, expected_reward
from .geometry import (PayoffPolytope, clip_below, clip_polygon, dimension, feasible_set,
                       polygon_from_vertices)
from .lp import INFEASIBLE, UNBOUNDED, fl_scores_2p, linprog
from .lp.exact import linprog_exact
from .monitoring import MonitoringStructure

BUDGETS = ("inequality", "exact")
GOLDEN = (math.sqrt(5) - 1) / 2
BOX = 1e6


class StructuralError(RuntimeError):
    """The enforcement program is unbounded (a budget row is missing)."""


@dataclass(frozen=True)
class EnforcementScheme:
    """Profile, transfers ``x[y][i]`` and resulting payoff ``v``."""

    profile: MixedProfile
    transfers: np.ndarray
    value: tuple


@dataclass(frozen=True)
class ScoreResult:
    """Score ``k`` in ``direction``; ``witness`` is None when infeasible."""

    direction: tuple
    score: float
    witness: EnforcementScheme | None
    budget: str = "inequality"

    @property
    def feasible(self) -> bool:
        return self.witness is not None


# ---------------------------------------------------------------------------
# the enforcement program
# ---------------------------------------------------------------------------

def _signal_table(ms: MonitoringStructure, i: int, profile: MixedProfile) -> np.ndarray:
    """``P[k, y] = pi(y | k, alpha_{-i})`` as floats."""
    t = np.moveaxis(ms.kernel, i, 0)
    others = [j for j in range(len(profile)) if j != i]
    for j in others:
        t = np.tensordot(t, profile.actions[j].as_array(), axes=([1], [0]))
    return t


def _reward_table(game: StageGame, i: int, profile: MixedProfile) -> np.ndarray:
    """``r[k] = g_i(k, alpha_{-i})`` as floats."""
    t = np.moveaxis(game.g[..., i], i, 0)
    for j in range(game.player_count):
        if j != i:
            t = np.tensordot(t, profile.actions[j].as_array(), axes=([1], [0]))
    return t


def _check_public(ms: MonitoringStructure) -> None:
    if ms.kind == "private":
        raise ValueError("the enforcement program needs public signals")


def _normalise(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    s = np.linalg.norm(lam)
    if s == 0:
        raise ValueError("direction must be nonzero")
    return lam / s


def fl_score(game: StageGame, ms: MonitoringStructure, lam: Sequence[float], profile: MixedProfile,
             budget: str = "inequality") -> ScoreResult:
    """Score of ``profile`` in direction ``lam`` (normalised to unit length).

    Returns a ScoreResult with ``score = -inf`` and no witness when the
    profile cannot be enforced.
    """
    _check_public(ms)
    if budget not in BUDGETS:
        raise ValueError(f"budget must be one of {BUDGETS}")
    lam = _normalise(lam)
    n, ny = game.player_count, ms.signal_count
    nv = n * ny
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    c = np.zeros(nv)
    py = np.asarray([float(p) for p in ms.signal_distribution(profile)])
    for i in range(n):
        P = _signal_table(ms, i, profile)
        r = _reward_table(game, i, profile)
        supp = profile.actions[i].support
        ref = supp[0]
        for k in range(game.shape[i]):
            if k == ref:
                continue
            row = np.zeros(nv)
            row[i * ny:(i + 1) * ny] = P[k] - P[ref]
            (A_eq if k in supp else A_ub).append(row)
            (b_eq if k in supp else b_ub).append(r[ref] - r[k])
        c[i * ny:(i + 1) * ny] = lam[i] * py
    for y in range(ny):
        row = np.zeros(nv)
        row[y::ny] = lam
        (A_eq if budget == "exact" else A_ub).append(row)
        (b_eq if budget == "exact" else b_ub).append(0.0)
    res = linprog(c, A_ub, b_ub, A_eq, b_eq)
    base = float(np.dot(lam, expected_reward(game, profile)))
    if res.status == INFEASIBLE:
        return ScoreResult(tuple(lam), -math.inf, None, budget)
    if res.status == UNBOUNDED:
        raise StructuralError("enforcement program unbounded; a budget-balance row is missing")
    x = res.x.reshape(n, ny).T
    v = tuple(float(g) + float(py @ x[:, i]) for i, g in enumerate(expected_reward(game, profile)))
    scheme = EnforcementScheme(profile, x, v)
    return ScoreResult(tuple(lam), base + res.objective, scheme, budget)


def verify_scheme(game: StageGame, ms: MonitoringStructure, result: ScoreResult,
                  ic_tol: float | None = None, budget_tol: float | None = None) -> dict:
    """Re-check a witness: augmented-Nash conditions, budget balance and the value."""
    ic_tol = settings.ic_tol if ic_tol is None else ic_tol
    budget_tol = settings.tol if budget_tol is None else budget_tol
    w = result.witness
    if w is None:
        return {"ok": False, "reason": "no witness"}
    lam = np.asarray(result.direction)
    x = w.transfers
    worst_ic = 0.0
    for i in range(game.player_count):
        P = _signal_table(ms, i, w.profile)
        aug = _reward_table(game, i, w.profile) + P @ x[:, i]
        supp = w.profile.actions[i].support
        top = aug.max()
        worst_ic = max(worst_ic, float(top - min(aug[k] for k in supp)))
    budget = x @ lam
    worst_budget = float(budget.max())
    if result.budget == "exact":
        worst_budget = float(np.abs(budget).max())
    py = np.asarray([float(p) for p in ms.signal_distribution(w.profile)])
    v = np.asarray([float(g) for g in expected_reward(game, w.profile)]) + py @ x
    value_err = float(np.abs(v - np.asarray(w.value)).max())
    score_err = abs(float(lam @ v) - result.score)
    ok = worst_ic <= ic_tol and worst_budget <= budget_tol and value_err <= ic_tol and score_err <= ic_tol
    return {"ok": ok, "ic_violation": worst_ic, "budget_violation": worst_budget,
            "value_error": value_err, "score_error": score_err}


# ---------------------------------------------------------------------------
# two-player limit sets
# ---------------------------------------------------------------------------

def _two_player_data(game: StageGame, ms: MonitoringStructure):
    if game.player_count != 2:
        raise ValueError("limit sets are computed for two-player games")
    _check_public(ms)
    return game.g[..., 0], game.g[..., 1], ms.kernel


def _fan(count: int) -> list[np.ndarray]:
    return [np.array([math.cos(2 * math.pi * k / count), math.sin(2 * math.pi * k / count)])
            for k in range(count)]


def _segment_normals(game: StageGame) -> list[np.ndarray]:
    """Unit normals (both orientations) of segments between pure payoff vectors."""
    pts = sorted({tuple(game.g[a]) for a in game.profiles()})
    out = []
    for p, q in itertools.combinations(pts, 2):
        d = np.subtract(q, p)
        nrm = np.array([d[1], -d[0]])
        s = np.linalg.norm(nrm)
        if s > 0:
            out.extend([nrm / s, -nrm / s])
    for e in np.eye(2):
        out.extend([e, -e])
    return out


def _angle_key(lam) -> int:
    return int(round(math.atan2(lam[1], lam[0]) * 1e12))


@dataclass
class _Sweep:
    """Directional scores collected during a limit-set computation."""

    score: callable
    halfspaces: list = field(default_factory=list)
    seen: dict = field(default_factory=dict)
    verts: list = field(default_factory=lambda: [(-BOX, -BOX), (BOX, -BOX), (BOX, BOX), (-BOX, BOX)])

    def probe(self, lam) -> float:
        lam = _normalise(lam)
        key = _angle_key(lam)
        if key in self.seen:
            return self.seen[key][1]
        k = self.score(lam)
        self.seen[key] = (lam, k)
        if math.isfinite(k):
            self.halfspaces.append((tuple(lam), float(k)))
            # intersection is monotone, so the outer polygon is clipped in place
            self.verts = clip_polygon(self.verts, tuple(lam), float(k), 1e-13)
        return k

    def polygon(self, label):
        if not self.verts:
            return PayoffPolytope.empty_set(2, label)
        return polygon_from_vertices(self.verts, label)

    def refine(self, label: str, rounds: int, tol: float, ladder: int = 48):
        """Tighten the outer polygon until every vertex survives its probes.

        At each vertex the two adjacent edge normals are probed, and then a
        ladder of directions rotated from each normal towards the other by
        ``theta / 2^j``.  The ladder matters because ``k`` can jump: a profile
        may stop being enforceable exactly at some direction, and the binding
        halfspaces then accumulate on one side of it.
        """
        poly = self.polygon(label)
        for _ in range(rounds):
            if poly.empty or len(poly.vertices) < 3:
                break
            verts = poly.float_vertices()
            m = len(verts)
            edges = []
            for k in range(m):
                d = verts[(k + 1) % m] - verts[k]
                edges.append(_normalise([d[1], -d[0]]))
            cut = False
            for k in range(m):
                p = verts[k]
                n_in, n_out = edges[k - 1], edges[k]
                for lam in (n_in, n_out):
                    if self.probe(lam) < float(lam @ p) - tol:
                        cut = True
                theta = math.atan2(n_in[0] * n_out[1] - n_in[1] * n_out[0], float(n_in @ n_out))
                for start, sign in ((n_in, 1.0), (n_out, -1.0)):
                    base = math.atan2(start[1], start[0])
                    for j in range(1, ladder + 1):
                        ang = base + sign * theta / 2 ** j
                        lam = np.array([math.cos(ang), math.sin(ang)])
                        if self.probe(lam) < float(lam @ p) - tol:
                            cut = True
                            break
            if not cut:
                break
            poly = self.polygon(label)
        return poly


def _finalise(poly: PayoffPolytope, meta: dict) -> PayoffPolytope:
    meta = dict(meta)
    meta["empty_interior"] = poly.empty or dimension(poly) < 2
    from dataclasses import replace

    return replace(poly, meta=meta)


def limit_set_pure(game: StageGame, ms: MonitoringStructure, directions: int = 720,
                   budget: str = "inequality", refine_rounds: int = 200) -> PayoffPolytope:
    """Limit of pure-strategy equilibrium payoff sets (two players).

    ``k(lam)`` is the best enforcement score over pure profiles; the set is
    the intersection of the resulting halfspaces.
    """
    G1, G2, PI = _two_player_data(game, ms)
    eq = budget == "exact"
    E1, E2 = np.eye(game.shape[0]), np.eye(game.shape[1])

    def score(lam):
        s = fl_scores_2p(G1, G2, PI, float(lam[0]), float(lam[1]), E1, E2, eq)
        return float(s.max())

    sweep = _Sweep(score)
    for lam in _fan(directions) + _segment_normals(game):
        sweep.probe(lam)
    poly = sweep.refine("limit_pure", refine_rounds, 1e-10)
    return _finalise(poly, {"directions": len(sweep.seen), "budget": budget})


def _simplex_grid(m: int, steps: int) -> np.ndarray:
    """All mixtures over ``m`` actions with probabilities in multiples of 1/steps."""
    if m == 1:
        return np.ones((1, 1))
    pts = []
    for c in itertools.product(range(steps + 1), repeat=m - 1):
        if sum(c) <= steps:
            pts.append(list(c) + [steps - sum(c)])
    return np.asarray(pts, dtype=float) / steps


def _golden_max(f, lo, hi, tol):
    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def mixed_score(game: StageGame, ms: MonitoringStructure, lam, steps: int = 64, refine: bool = True,
                budget: str = "inequality", tol: float = 1e-8):
    """Best enforcement score over mixed profiles (two players).

    Grid search with probabilities in multiples of ``1/steps`` followed, for
    2x2 games, by coordinate-wise golden-section refinement around the best
    grid point.  Returns ``(score, (alpha_1, alpha_2), refinement_gain)``.
    """
    G1, G2, PI = _two_player_data(game, ms)
    lam = _normalise(lam)
    eq = budget == "exact"
    g1 = _simplex_grid(game.shape[0], steps)
    g2 = _simplex_grid(game.shape[1], steps)
    S = fl_scores_2p(G1, G2, PI, float(lam[0]), float(lam[1]), g1, g2, eq)
    k1, k2 = np.unravel_index(int(np.argmax(S)), S.shape)
    best = float(S[k1, k2])
    a1, a2 = g1[k1], g2[k2]
    if not (refine and game.shape == (2, 2)):
        return best, (a1, a2), 0.0
    grid_best = best

    def f(p, q):
        s = fl_scores_2p(G1, G2, PI, float(lam[0]), float(lam[1]),
                         np.array([[p, 1 - p]]), np.array([[q, 1 - q]]), eq)
        return float(s[0, 0])

    p, q = a1[0], a2[0]
    h = 1.0 / steps
    for _ in range(8):
        moved = False
        lo, hi = max(0.0, p - h), min(1.0, p + h)
        p2, v2 = _golden_max(lambda t: f(t, q), lo, hi, tol)
        if v2 > best + 1e-12:
            best, p, moved = v2, p2, True
        lo, hi = max(0.0, q - h), min(1.0, q + h)
        q2, v2 = _golden_max(lambda t: f(p, t), lo, hi, tol)
        if v2 > best + 1e-12:
            best, q, moved = v2, q2, True
        if not moved:
            break
    return best, (np.array([p, 1 - p]), np.array([q, 1 - q])), best - grid_best


def limit_set_mixed(game: StageGame, ms: MonitoringStructure, directions: int = 720, steps: int = 64,
                    budget: str = "inequality", refine_rounds: int = 12) -> PayoffPolytope:
    """Limit of mixed-strategy equilibrium payoff sets (approximate, two players).

    ``meta["certificate"]`` records the grid step and the largest gain the
    local refinement found over the grid in any direction, which bounds how
    far the pure grid search alone was from the refined optimum.
    """
    gains = []

    def score(lam):
        k, _, gain = mixed_score(game, ms, lam, steps=steps, budget=budget)
        gains.append(gain)
        return k

    sweep = _Sweep(score)
    for lam in _fan(directions) + _segment_normals(game):
        sweep.probe(lam)
    poly = sweep.refine("limit_mixed", refine_rounds, 1e-7)
    cert = {"grid_step": 1.0 / steps, "max_refinement_gain": max(gains) if gains else 0.0,
            "refined": game.shape == (2, 2)}
    return _finalise(poly, {"directions": len(sweep.seen), "budget": budget, "certificate": cert})


# ---------------------------------------------------------------------------
# MI-restricted programs
# ---------------------------------------------------------------------------

def _require_product(ms: MonitoringStructure) -> None:
    if ms.kind != "public_product":
        raise ValueError("this program needs a product monitoring structure; use mi_score instead")


def _prd_lp_fixed(game: StageGame, ms: MonitoringStructure, i: int, profile: MixedProfile, exact: bool):
    """Player i's program at a fixed profile: min v over x_i >= 0 (own signals)."""
    fac = ms.own_factor(i, exact=exact)
    ny = len(fac[0])
    r = deviation_rewards(game, i, profile) if exact else list(_reward_table(game, i, profile))
    supp = profile.actions[i].support
    # variables: x_i(y) >= 0 then v (free); minimise v
    c = [0] * ny + [1]
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for k in range(game.shape[i]):
        row = [fac[k][y] for y in range(ny)] + [-1]
        if k in supp:
            A_eq.append(row)
            b_eq.append(-r[k])
        else:
            A_ub.append(row)
            b_ub.append(-r[k])
    free = [False] * ny + [True]
    if exact:
        res = linprog_exact(c, A_ub, b_ub, A_eq, b_eq, free=free, maximize=False)
    else:
        res = linprog(c, A_ub, b_ub, A_eq, b_eq, free=free, maximize=False)
    if not res.ok:
        return None
    return res.objective, res.x[:ny]


@dataclass(frozen=True)
class PrdMinmax:
    """Value of player i's MI-restricted program with its witness."""

    player: int
    value: object
    profile: MixedProfile
    transfers: tuple
    exact: bool
    approximate: bool = False


def _prd_cell_lp(game: StageGame, ms: MonitoringStructure, i: int, cell, exact: bool):
    """Player i's program over a whole two-player cell: the opponent's mixture
    enters linearly, so one LP in ``(alpha_j, x_i, v)`` solves it."""
    j = 1 - i
    pay = eqm._exact_payoffs(game) if exact else None
    tables = eqm._opponent_matrix(pay, i) if exact else [list(row) for row in
                                                         np.moveaxis(game.g[..., i], i, 0)]
    f_i, f_j = cell.factors[i], cell.factors[j]
    S_i, S_j = f_i.support, f_j.support
    fac = ms.own_factor(i, exact=exact)
    ny = len(fac[0])
    nj = len(S_j)
    A_eq_f, b_eq_f, A_ub_f, b_ub_f = eqm._factor_constraints(tables, S_i, S_j, game.shape[j], False)
    # variables: alpha_j[S_j] >= 0, x_i(y) >= 0, v free; minimise v
    nvar = nj + ny + 1
    c = [0] * (nvar - 1) + [1]
    A_eq = [list(r) + [0] * (ny + 1) for r in A_eq_f]
    b_eq = list(b_eq_f)
    A_ub = [list(r) + [0] * (ny + 1) for r in A_ub_f]
    b_ub = list(b_ub_f)
    for k in range(game.shape[i]):
        row = [tables[k][l] for l in S_j] + [fac[k][y] for y in range(ny)] + [-1]
        if k in S_i:
            A_eq.append(row)
            b_eq.append(0)
        else:
            A_ub.append(row)
            b_ub.append(0)
    free = [False] * (nvar - 1) + [True]
    if exact:
        res = linprog_exact(c, A_ub, b_ub, A_eq, b_eq, free=free, maximize=False)
    else:
        res = linprog(c, A_ub, b_ub, A_eq, b_eq, free=free, maximize=False)
    if not res.ok:
        return None
    alpha_j = [Fraction(0) if exact else 0.0] * game.shape[j]
    for l, val in zip(S_j, res.x[:nj]):
        alpha_j[l] = val
    acts = [None, None]
    acts[i] = MixedAction(f_i.interior if exact else tuple(float(p) for p in f_i.interior))
    acts[j] = MixedAction(tuple(alpha_j) if exact else tuple(float(p) for p in alpha_j))
    return res.objective, MixedProfile(tuple(acts)), tuple(res.x[nj:nj + ny])


def mi_prd_minmax(game: StageGame, ms: MonitoringStructure, i: int,
                  mi: eqm.MiProfileSet | None = None) -> PrdMinmax:
    """Minimum of player i's payoff over MI profiles and nonnegative own-signal transfers.

    Two-player games are solved per support cell by one LP in the opponent's
    mixture, the transfers and the value (exact for rational data).  Larger
    games minimise over the enumerated MI profiles.
    """
    _require_product(ms)
    mi = eqm.enumerate_mi_profiles(game) if mi is None else mi
    exact = game.exact and ms.exact
    best = None
    if game.player_count == 2 and mi.cells:
        for cell in mi.cells:
            out = _prd_cell_lp(game, ms, i, cell, exact)
            if out is not None and (best is None or out[0] < best[0]):
                best = out
        approximate = False
    else:
        for m in mi.members:
            prof = m.profile
            ex = exact and prof.exact
            out = _prd_lp_fixed(game, ms, i, prof, ex)
            if out is not None and (best is None or out[0] < best[0]):
                best = (out[0], prof, tuple(out[1]))
        approximate = not mi.finite or not mi.complete
    if best is None:
        raise RuntimeError("no MI profile admits nonnegative enforcing transfers")
    value = best[0] if exact else float(best[0])
    return PrdMinmax(i, value, best[1], best[2], exact, approximate)


def _direction_kind(lam: np.ndarray) -> tuple[str, int | None]:
    nz = np.nonzero(np.abs(lam) > 1e-12)[0]
    if len(nz) == 1:
        return ("negative" if lam[nz[0]] < 0 else "positive"), int(nz[0])
    return "mixed", None


def _mi_candidates(game: StageGame, mi: eqm.MiProfileSet) -> list[MixedProfile]:
    profs = [m.profile for m in mi.members]
    for cell in mi.continuum_cells():
        profs.extend(cell.vertex_profiles())
    seen, out = set(), []
    for p in profs:
        if p.key() not in seen:
            seen.add(p.key())
            out.append(p)
    return out


def _cell_score_lp(game: StageGame, ms: MonitoringStructure, i: int, cell, budget: str) -> MixedProfile | None:
    """Profile of a two-player cell maximising the score in direction ``-e_i``.

    The enforcement program over joint signals is bilinear in the mixtures
    and the transfers.  Writing ``z_i(y) = pi_j(y_j | alpha_j) x_i(y)`` and
    ``z_j(y) = pi_i(y_i | alpha_i) x_j(y)`` makes it linear under product
    structure: player i's expected transfer after action k is
    ``sum_y pi_i(y_i | k) z_i(y)``, and the budget row ``-x_i(y) <= 0`` is
    ``z_i(y) >= 0``.  Variables: ``alpha_i[S_i], alpha_j[S_j], z_i, z_j, v_i, v_j``.
    """
    j = 1 - i
    exact = game.exact and ms.exact
    pay = eqm._exact_payoffs(game)
    tab = {i: eqm._opponent_matrix(pay, i), j: eqm._opponent_matrix(pay, j)}
    conv = (lambda x: x) if exact else float
    S = {i: cell.factors[i].support, j: cell.factors[j].support}
    sizes = [len(s) for s in ms.signal_sets]
    ys = list(itertools.product(*(range(m) for m in sizes)))
    ny = len(ys)
    fac = {p: ms.own_factor(p, exact=exact) for p in (i, j)}
    # variable layout
    off_a = {i: 0, j: len(S[i])}
    off_z = {i: len(S[i]) + len(S[j]), j: len(S[i]) + len(S[j]) + ny}
    off_v = {i: off_z[j] + ny, j: off_z[j] + ny + 1}
    nvar = off_v[j] + 1
    A_eq, b_eq, A_ub, b_ub = [], [], [], []

    def blank():
        return [conv(Fraction(0))] * nvar

    # factor constraints: alpha_p keeps the opponent indifferent over its support
    for p in (i, j):
        q = 1 - p
        Ae, be, _, _ = eqm._factor_constraints(tab[q], S[q], S[p], game.shape[p], False)
        for row, rhs in zip(Ae, be):
            r = blank()
            for t, val in enumerate(row):
                r[off_a[p] + t] = conv(val)
            A_eq.append(r)
            b_eq.append(conv(rhs))
    # incentive rows for both players
    for p in (i, j):
        q = 1 - p
        for k in range(game.shape[p]):
            r = blank()
            for t, l in enumerate(S[q]):
                r[off_a[q] + t] = conv(tab[p][k][l])
            for t, y in enumerate(ys):
                r[off_z[p] + t] = conv(fac[p][k][y[p]])
            r[off_v[p]] = conv(Fraction(-1))
            (A_eq if k in S[p] else A_ub).append(r)
            (b_eq if k in S[p] else b_ub).append(conv(Fraction(0)))
    if budget == "exact":
        for t in range(ny):
            r = blank()
            r[off_z[i] + t] = conv(Fraction(1))
            A_eq.append(r)
            b_eq.append(conv(Fraction(0)))
    c = blank()
    c[off_v[i]] = conv(Fraction(1))
    free = [False] * nvar
    for t in range(ny):
        free[off_z[j] + t] = True
    free[off_v[i]] = free[off_v[j]] = True
    solver = linprog_exact if exact else linprog
    res = solver(c, A_ub, b_ub, A_eq, b_eq, free=free, maximize=False)
    if not res.ok:
        return None
    acts = [None, None]
    for p in (i, j):
        probs = [Fraction(0) if exact else 0.0] * game.shape[p]
        for t, l in enumerate(S[p]):
            probs[l] = res.x[off_a[p] + t]
        if not exact:
            tot = sum(max(x, 0.0) for x in probs)
            probs = [max(x, 0.0) / tot for x in probs]
        acts[p] = MixedAction(tuple(probs))
    return MixedProfile(tuple(acts))


def mi_score(game: StageGame, ms: MonitoringStructure, lam, mi: eqm.MiProfileSet | None = None,
             budget: str = "inequality") -> ScoreResult:
    """Best enforcement score over MI profiles.

    Directions that are not negative coordinate directions are scored over
    pure profiles only.  Negative coordinate directions search the MI
    profiles: isolated members, cell vertices and, for two-player product
    structures, the best profile of each continuum cell from a joint LP
    (:func:`_cell_score_lp`).  Every candidate is scored by :func:`fl_score`.
    """
    _check_public(ms)
    lam = _normalise(lam)
    kind, idx = _direction_kind(lam)
    if kind == "negative":
        mi = eqm.enumerate_mi_profiles(game) if mi is None else mi
        candidates = _mi_candidates(game, mi)
        if game.player_count == 2 and ms.kind == "public_product":
            for cell in mi.continuum_cells():
                prof = _cell_score_lp(game, ms, idx, cell, budget)
                if prof is not None:
                    candidates.append(prof)
    else:
        candidates = [MixedProfile.pure(game, a) for a in game.profiles()]
    best = None
    for prof in candidates:
        res = fl_score(game, ms, lam, prof, budget)
        if best is None or res.score > best.score:
            best = res
    return best


@dataclass(frozen=True)
class BoundedSets:
    f_star: PayoffPolytope
    f_mi_pi: PayoffPolytope | None
    floors_star: tuple
    floors_mi_pi: tuple | None


def bounded_sets(game: StageGame, ms: MonitoringStructure | None = None) -> BoundedSets:
    """Feasible set clipped at ``min(pure, worst Nash)`` minmax, and at the
    MI-restricted program values when the monitoring has product structure."""
    F = feasible_set(game)
    pure = eqm.minmax(game, "pure").values
    ne = eqm.minmax(game, "nash_worst").values
    floors = tuple(min(a, b) for a, b in zip(pure, ne))
    f_star = clip_below(F, floors, label="F_star")
    f_mi, floors_mi = None, None
    if ms is not None and ms.kind == "public_product":
        mi = eqm.enumerate_mi_profiles(game)
        floors_mi = tuple(mi_prd_minmax(game, ms, i, mi).value for i in range(game.player_count))
        f_mi = clip_below(F, floors_mi, label="F_MI_pi")
    return BoundedSets(f_star, f_mi, floors, floors_mi)
