"""Stage-game solution concepts.

* ``enumerate_stage_nash``: support enumeration (exact rationals, two players;
  pure profiles and single-mixer supports for three or more players).
* ``enumerate_mi_profiles``: myopic-indifference profiles, i.e. profiles in
  which every player is indifferent among the actions they mix over.  For two
  players this set is a finite union of *cells*, one per support profile; a
  cell is a product of polytopes, and ties in the payoffs can make these
  polytopes positive-dimensional.
* ``minmax``: the standard, pure, worst-Nash and myopic-indifference minmax
  values with witnessing punishment profiles.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .config import settings
from .game_core import (MixedAction, MixedProfile, StageGame, SupportProfile, deviation_rewards,
                        expected_reward)
from .lp import linprog
from .lp.exact import linprog_exact
from .rational import rank_exact, solve_exact

NOTIONS = ("standard", "pure", "nash_worst", "mi")


class DegenerateGameError(ValueError):
    """A computation needs a nondegenerate game but found a continuum."""


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _exact_payoffs(game: StageGame) -> np.ndarray:
    if game.exact:
        return game.payoffs
    return np.vectorize(Fraction, otypes=[object])(game.g)


def _nonempty_subsets(items: Sequence[int]) -> list[tuple[int, ...]]:
    out = []
    for size in range(1, len(items) + 1):
        out.extend(itertools.combinations(items, size))
    return out


def _support_pairs(shape: tuple[int, int]):
    pairs = [(s1, s2) for s1 in _nonempty_subsets(range(shape[0])) for s2 in _nonempty_subsets(range(shape[1]))]
    pairs.sort(key=lambda p: (len(p[0]) + len(p[1]), p[0], p[1]))
    return pairs


def _opponent_matrix(pay: np.ndarray, i: int) -> list[list[Fraction]]:
    """Two-player reward table of player ``i`` indexed ``[own action][opponent action]``."""
    mat = pay[..., i]
    return [list(row) for row in (mat if i == 0 else mat.T)]


def mi_gaps(game: StageGame, profile: MixedProfile) -> list:
    """Per-player spread ``max - min`` of ``g_i(a_i, alpha_{-i})`` over ``supp(alpha_i)``."""
    gaps = []
    for i in range(game.player_count):
        vals = deviation_rewards(game, i, profile)
        sup = [vals[k] for k in profile[i].support]
        gaps.append(max(sup) - min(sup))
    return gaps


def is_mi(game: StageGame, profile: MixedProfile, tol: float | None = None) -> bool:
    """Myopic-indifference test; exact for rational inputs."""
    gaps = mi_gaps(game, profile)
    if game.exact and profile.exact:
        return all(g == 0 for g in gaps)
    tol = settings.tol if tol is None else tol
    return all(float(g) <= tol for g in gaps)


def is_nash(game: StageGame, profile: MixedProfile, tol: float | None = None) -> bool:
    exact = game.exact and profile.exact
    tol = 0 if exact else (settings.tol if tol is None else tol)
    for i in range(game.player_count):
        vals = deviation_rewards(game, i, profile)
        best = max(vals)
        if any(best - vals[k] > tol for k in profile[i].support):
            return False
    return True


# ---------------------------------------------------------------------------
# polytope factors of two-player cells
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellFactor:
    """Mixtures of player ``player`` over ``support`` that keep the opponent
    indifferent over ``opp_support`` (and, for Nash cells, best responding).

    ``vertices`` are full-length probability vectors; the factor is their
    convex hull.  ``interior`` is a point with exactly the given support, or
    ``None`` when no such point exists.
    """

    player: int
    support: tuple[int, ...]
    vertices: tuple[tuple[Fraction, ...], ...]
    interior: tuple[Fraction, ...] | None

    @property
    def dimension(self) -> int:
        if len(self.vertices) <= 1:
            return 0
        base = self.vertices[0]
        return rank_exact([[a - b for a, b in zip(v, base)] for v in self.vertices[1:]])

    @property
    def nonempty(self) -> bool:
        return self.interior is not None


def _factor_constraints(opp_table, opp_support, support, size, best_response: bool):
    """Linear system on a player's mixture over ``support``.

    Equalities keep the opponent indifferent over ``opp_support``; with
    ``best_response`` the opponent's other actions must not do better.
    Returns ``(A_eq, b_eq, A_ub, b_ub)`` in the variables ``alpha[support]``.
    """
    ref = opp_support[0]
    A_eq = [[Fraction(1)] * len(support)]
    b_eq = [Fraction(1)]
    for k in opp_support[1:]:
        A_eq.append([opp_table[k][l] - opp_table[ref][l] for l in support])
        b_eq.append(Fraction(0))
    A_ub, b_ub = [], []
    if best_response:
        for k in range(len(opp_table)):
            if k not in opp_support:
                A_ub.append([opp_table[k][l] - opp_table[ref][l] for l in support])
                b_ub.append(Fraction(0))
    return A_eq, b_eq, A_ub, b_ub


def _expand(support, values, size):
    full = [Fraction(0)] * size
    for l, v in zip(support, values):
        full[l] = v
    return tuple(full)


def _factor(player, opp_table, opp_support, support, size, best_response=False) -> CellFactor:
    A_eq, b_eq, A_ub, b_ub = _factor_constraints(opp_table, opp_support, support, size, best_response)
    vertices = []
    # vertices are basic solutions: unique solutions on some sub-support with the
    # tight best-response rows promoted to equalities
    for sub in _nonempty_subsets(support):
        cols = [support.index(l) for l in sub]
        ub_choices = _nonempty_subsets(range(len(A_ub))) if A_ub else []
        for tight in [()] + list(ub_choices):
            rows = [[row[c] for c in cols] for row in A_eq] + [[A_ub[t][c] for c in cols] for t in tight]
            rhs = list(b_eq) + [b_ub[t] for t in tight]
            if len(rows) < len(cols):
                continue
            sol = solve_exact(rows, rhs)
            if sol is None or sol[1]:
                continue
            vals = sol[0]
            if any(v <= 0 for v in vals):
                continue
            point = _expand(sub, vals, size)
            full_vals = [point[l] for l in support]
            if any(sum(a * x for a, x in zip(row, full_vals)) > bb for row, bb in zip(A_ub, b_ub)):
                continue
            if point not in vertices:
                vertices.append(point)
    vertices.sort()
    interior = None
    if vertices:
        covered = {l for v in vertices for l, p in enumerate(v) if p > 0}
        if covered == set(support):
            k = len(vertices)
            interior = tuple(sum(v[l] for v in vertices) / k for l in range(size))
    return CellFactor(player, tuple(support), tuple(vertices), interior)


@dataclass(frozen=True)
class MiCell:
    """All myopic-indifference profiles of a two-player game with a given support."""

    support: SupportProfile
    factors: tuple[CellFactor, CellFactor]
    nash: bool = False

    @property
    def dimension(self) -> int:
        return sum(f.dimension for f in self.factors)

    @property
    def finite(self) -> bool:
        return self.dimension == 0

    def representative(self) -> MixedProfile:
        return MixedProfile(tuple(MixedAction(f.interior) for f in self.factors))

    def vertex_profiles(self) -> list[MixedProfile]:
        return [MixedProfile((MixedAction(v1), MixedAction(v2)))
                for v1 in self.factors[0].vertices for v2 in self.factors[1].vertices]


def _two_player_cells(game: StageGame, best_response: bool) -> list[MiCell]:
    pay = _exact_payoffs(game)
    tables = [_opponent_matrix(pay, 0), _opponent_matrix(pay, 1)]
    m1, m2 = game.shape
    cells = []
    for s1, s2 in _support_pairs((m1, m2)):
        # player 1's mixture keeps player 2 indifferent over s2, and vice versa
        f1 = _factor(0, tables[1], s2, s1, m1, best_response)
        if not f1.nonempty:
            continue
        f2 = _factor(1, tables[0], s1, s2, m2, best_response)
        if not f2.nonempty:
            continue
        cells.append(MiCell(SupportProfile((s1, s2)), (f1, f2), nash=best_response))
    return cells


# ---------------------------------------------------------------------------
# Nash equilibria
# ---------------------------------------------------------------------------

class NashSet(list):
    """List of stage Nash equilibria with completeness metadata.

    Attributes
    ----------
    degenerate : a support admits a continuum of equilibria; ``cells`` holds
        them and the list contains one representative per such cell.
    complete : false when some supports could not be solved (three or more
        players mixing simultaneously).
    """

    def __init__(self, items=(), degenerate=False, complete=True, cells=()):
        super().__init__(items)
        self.degenerate = degenerate
        self.complete = complete
        self.cells = list(cells)


def _dedupe(profiles: Iterable[MixedProfile]) -> list[MixedProfile]:
    seen, out = set(), []
    for p in profiles:
        k = p.key()
        if k not in seen:
            seen.add(k)
            out.append(p)
    return out


def _pure_nash(game: StageGame) -> list[MixedProfile]:
    out = []
    pay = _exact_payoffs(game)
    for a in game.profiles():
        ok = True
        for i in range(game.player_count):
            own = pay[a][i]
            for k in range(game.shape[i]):
                b = list(a)
                b[i] = k
                if pay[tuple(b)][i] > own:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(MixedProfile.pure(game, a))
    return out


def _single_mixer_supports(game: StageGame, best_response: bool):
    """Profiles where exactly one player mixes (n >= 3 fallback).

    The mixer's indifference is then a condition on the others' pure actions
    only, so the feasible mixtures form the whole simplex over the support.
    """
    pay = _exact_payoffs(game)
    n = game.player_count
    results = []
    for j in range(n):
        for sub in _nonempty_subsets(range(game.shape[j])):
            if len(sub) < 2:
                continue
            for others in itertools.product(*(range(game.shape[i]) for i in range(n) if i != j)):
                def full(k):
                    b = list(others)
                    b.insert(j, k)
                    return tuple(b)

                vals = [pay[full(k)][j] for k in sub]
                if len(set(vals)) != 1:
                    continue
                if best_response and any(pay[full(k)][j] > vals[0] for k in range(game.shape[j])):
                    continue
                mix = [Fraction(0)] * game.shape[j]
                for k in sub:
                    mix[k] = Fraction(1, len(sub))
                acts = []
                for i in range(n):
                    if i == j:
                        acts.append(MixedAction(tuple(mix)))
                    else:
                        acts.append(MixedAction.pure(others[i if i < j else i - 1], game.shape[i]))
                prof = MixedProfile(tuple(acts))
                if best_response:
                    # the pure players must best respond to the mixture as well
                    if not is_nash(game if game.exact else game.with_payoffs(pay, True), prof):
                        continue
                results.append(prof)
    return results


def enumerate_stage_nash(game: StageGame) -> NashSet:
    """All stage-game Nash equilibria.

    Two-player games are solved by exact support enumeration.  Supports with
    a singular indifference system that still admit equilibria mark the
    result ``degenerate`` and contribute one representative each.
    """
    if game.player_count == 2:
        cells = _two_player_cells(game, best_response=True)
        items, degenerate_cells = [], []
        for cell in cells:
            if cell.finite:
                items.append(cell.representative())
            else:
                degenerate_cells.append(cell)
                items.append(cell.representative())
        return NashSet(_dedupe(items), degenerate=bool(degenerate_cells), complete=True, cells=cells)
    items = _pure_nash(game) + _single_mixer_supports(game, best_response=True)
    multi = any(sum(1 for m in game.shape if m > 1) >= 2 for _ in [0])
    return NashSet(_dedupe(items), degenerate=False, complete=not multi)


# ---------------------------------------------------------------------------
# myopic-indifference profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MiMember:
    profile: MixedProfile
    support: SupportProfile
    reward: tuple


@dataclass
class MiProfileSet:
    """Myopic-indifference profiles of a game.

    ``members`` lists every isolated profile and one relative-interior
    representative per continuum cell; ``cells`` (two players) describes the
    full set exactly.  ``finite`` is false when a continuum exists.
    """

    game: StageGame
    members: list[MiMember]
    cells: list[MiCell] = field(default_factory=list)
    finite: bool = True
    complete: bool = True

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def profiles(self) -> list[MixedProfile]:
        return [m.profile for m in self.members]

    def contains(self, profile: MixedProfile) -> bool:
        """Exact membership (the set is defined by the indifference test)."""
        return is_mi(self.game, profile)

    def continuum_cells(self) -> list[MiCell]:
        return [c for c in self.cells if not c.finite]


def enumerate_mi_profiles(game: StageGame) -> MiProfileSet:
    """All myopic-indifference profiles, by support enumeration."""
    if game.player_count == 2:
        cells = _two_player_cells(game, best_response=False)
        members = []
        for cell in cells:
            prof = cell.representative()
            members.append(MiMember(prof, cell.support, expected_reward(game, prof)))
        finite = all(c.finite for c in cells)
        return MiProfileSet(game, members, cells, finite=finite, complete=True)
    profs = [MixedProfile.pure(game, a) for a in game.profiles()]
    profs += _single_mixer_supports(game, best_response=False)
    members = [MiMember(p, p.support, expected_reward(game, p)) for p in _dedupe(profs)]
    # a single mixer with a tie is a continuum (the whole simplex on its support)
    finite = all(m.profile.is_pure for m in members)
    multi = sum(1 for m in game.shape if m > 1) >= 2
    return MiProfileSet(game, members, [], finite=finite, complete=not multi)


# ---------------------------------------------------------------------------
# minmax notions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinmaxReport:
    """Minmax values of one notion.

    ``values[i]`` is player i's value and ``witnesses[i]`` a punishing profile
    (the punished player's component is a best response, except for the
    myopic-indifference notion where the whole profile lies in the set).
    """

    notion: str
    values: tuple
    witnesses: tuple
    exact: bool = True
    approximate: bool = False

    def as_floats(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.values)


def _best_response(game: StageGame, i: int, profile: MixedProfile) -> int:
    vals = deviation_rewards(game, i, profile)
    return max(range(len(vals)), key=lambda k: (vals[k], -k))


def _with_best_response(game: StageGame, i: int, opp: MixedAction | Sequence) -> MixedProfile:
    opp = opp if isinstance(opp, MixedAction) else MixedAction(tuple(opp))
    acts = [MixedAction.pure(0, game.shape[0]), MixedAction.pure(0, game.shape[1])]
    acts[1 - i] = opp
    prof = MixedProfile(tuple(acts))
    br = _best_response(game, i, prof)
    return prof.replace(i, MixedAction.pure(br, game.shape[i]))


def _cell_minmax_exact(game: StageGame, i: int, table, factor_constraints, size):
    """``min_{alpha_j} max_k table[k] . alpha_j`` over a polytope, exactly.

    ``factor_constraints`` is ``(support, A_eq, b_eq, A_ub, b_ub)`` in the
    variables ``alpha_j[support]``.  Returns ``(value, alpha_j)``.
    """
    support, A_eq, b_eq, A_ub, b_ub = factor_constraints
    c = [Fraction(0)] * len(support) + [Fraction(1)]
    rows_ub = [list(r) + [Fraction(0)] for r in A_ub]
    rhs_ub = list(b_ub)
    for k in range(len(table)):
        rows_ub.append([table[k][l] for l in support] + [Fraction(-1)])
        rhs_ub.append(Fraction(0))
    rows_eq = [list(r) + [Fraction(0)] for r in A_eq]
    free = [False] * len(support) + [True]
    res = linprog_exact(c, rows_ub, rhs_ub, rows_eq, b_eq, free=free, maximize=False)
    if not res.ok:
        return None
    return res.objective, _expand(support, res.x[:-1], size)


def _standard_minmax_two(game: StageGame, i: int):
    pay = _exact_payoffs(game)
    table = _opponent_matrix(pay, i)
    j = 1 - i
    support = tuple(range(game.shape[j]))
    cons = (support, [[Fraction(1)] * len(support)], [Fraction(1)], [], [])
    value, alpha = _cell_minmax_exact(game, i, table, cons, game.shape[j])
    return value, _with_best_response(game if game.exact else game.with_payoffs(pay, True), i, alpha)


def _standard_minmax_many(game: StageGame, i: int, starts: int = 16, seed: int = 0):
    """Alternating LP minimisation over independent punishers (approximate)."""
    rng = np.random.default_rng(seed)
    others = [j for j in range(game.player_count) if j != i]
    g_i = game.g[..., i]
    best_val, best_mix = np.inf, None
    for s in range(starts):
        mixes = {j: (np.eye(game.shape[j])[rng.integers(game.shape[j])] if s % 2 else
                     rng.dirichlet(np.ones(game.shape[j]))) for j in others}
        prev = np.inf
        for _ in range(200):
            for j in others:
                t = np.moveaxis(g_i, [i, j], [0, 1])
                rest = [k for k in others if k != j]
                for k in rest:
                    t = np.tensordot(t, mixes[k], axes=([2], [0]))
                # t[own action, j's action]
                m = game.shape[j]
                c = np.zeros(m + 1)
                c[-1] = 1.0
                A_ub = np.hstack([t, -np.ones((t.shape[0], 1))])
                res = linprog(c, A_ub, np.zeros(t.shape[0]), np.r_[np.ones(m), 0.0][None, :], [1.0],
                              free=np.r_[np.zeros(m, bool), True], maximize=False)
                mixes[j] = np.clip(res.x[:m], 0, None)
                mixes[j] /= mixes[j].sum()
            t = np.moveaxis(g_i, i, 0)
            vals = t
            for j in others:
                vals = np.tensordot(vals, mixes[j], axes=([1], [0]))
            val = float(vals.max())
            if val > prev - 1e-12:
                break
            prev = val
        if val < best_val:
            best_val, best_mix = val, dict(mixes)
    acts = []
    for k in range(game.player_count):
        if k == i:
            acts.append(MixedAction.pure(0, game.shape[k], exact=False))
        else:
            acts.append(MixedAction(tuple(float(p) for p in best_mix[k])))
    prof = MixedProfile(tuple(acts))
    br = _best_response(game, i, prof)
    return best_val, prof.replace(i, MixedAction.pure(br, game.shape[i], exact=False))


def _pure_minmax(game: StageGame, i: int):
    pay = _exact_payoffs(game)
    best = None
    others = [range(m) if k != i else [None] for k, m in enumerate(game.shape)]
    for a in itertools.product(*others):
        vals = []
        for k in range(game.shape[i]):
            b = list(a)
            b[i] = k
            vals.append(pay[tuple(b)][i])
        top = max(vals)
        if best is None or top < best[0]:
            br = vals.index(top)
            b = list(a)
            b[i] = br
            best = (top, tuple(b))
    return best[0], MixedProfile.pure(game, best[1])


def _nash_worst(game: StageGame, i: int, nash: NashSet):
    if game.player_count == 2 and nash.cells:
        pay = _exact_payoffs(game)
        tables = [_opponent_matrix(pay, 0), _opponent_matrix(pay, 1)]
        j = 1 - i
        best = None
        for cell in nash.cells:
            f_i, f_j = cell.factors[i], cell.factors[j]
            # on a Nash cell g_i(alpha) = g_i(ref, alpha_j), linear in alpha_j
            ref = f_i.support[0]
            if f_j.dimension == 0:
                alpha_j = f_j.interior
                val = sum(tables[i][ref][l] * alpha_j[l] for l in range(len(alpha_j)))
            else:
                A_eq, b_eq, A_ub, b_ub = _factor_constraints(tables[i], f_i.support, f_j.support,
                                                             game.shape[j], True)
                c = [tables[i][ref][l] for l in f_j.support]
                res = linprog_exact(c, A_ub, b_ub, A_eq, b_eq, maximize=False)
                val, alpha_j = res.objective, _expand(f_j.support, res.x, game.shape[j])
            if best is None or val < best[0]:
                acts = [None, None]
                acts[i] = MixedAction(f_i.interior)
                acts[j] = MixedAction(alpha_j)
                best = (val, MixedProfile(tuple(acts)))
        return best
    best = None
    for prof in nash:
        val = expected_reward(game, prof)[i]
        if best is None or val < best[0]:
            best = (val, prof)
    return best


def _mi_minmax(game: StageGame, i: int, mi: MiProfileSet):
    if game.player_count == 2:
        pay = _exact_payoffs(game)
        tables = [_opponent_matrix(pay, 0), _opponent_matrix(pay, 1)]
        j = 1 - i
        best = None
        for cell in mi.cells:
            f_i, f_j = cell.factors[i], cell.factors[j]
            A_eq, b_eq, A_ub, b_ub = _factor_constraints(tables[i], f_i.support, f_j.support,
                                                         game.shape[j], False)
            out = _cell_minmax_exact(game, i, tables[i], (f_j.support, A_eq, b_eq, A_ub, b_ub),
                                     game.shape[j])
            if out is None:
                continue
            val, alpha_j = out
            if best is None or val < best[0]:
                acts = [None, None]
                acts[i] = MixedAction(f_i.interior)
                acts[j] = MixedAction(alpha_j)
                best = (val, MixedProfile(tuple(acts)))
        return best
    best = None
    for m in mi.members:
        val = max(deviation_rewards(game, i, m.profile))
        if best is None or val < best[0]:
            best = (val, m.profile)
    return best


def minmax(game: StageGame, notion: str, nash: NashSet | None = None,
           mi: MiProfileSet | None = None) -> MinmaxReport:
    """Minmax values of ``notion`` in {standard, pure, nash_worst, mi}."""
    if notion not in NOTIONS:
        raise ValueError(f"unknown minmax notion {notion!r}; choose from {NOTIONS}")
    values, witnesses = [], []
    exact, approximate = True, False
    for i in range(game.player_count):
        if notion == "standard":
            if game.player_count == 2:
                val, wit = _standard_minmax_two(game, i)
            else:
                val, wit = _standard_minmax_many(game, i)
                exact, approximate = False, True
        elif notion == "pure":
            val, wit = _pure_minmax(game, i)
        elif notion == "nash_worst":
            nash = enumerate_stage_nash(game) if nash is None else nash
            val, wit = _nash_worst(game, i, nash)
            approximate = approximate or not nash.complete
        else:
            mi = enumerate_mi_profiles(game) if mi is None else mi
            val, wit = _mi_minmax(game, i, mi)
            approximate = approximate or not mi.complete
        values.append(val)
        witnesses.append(wit)
    if not game.exact:
        exact = False
        values = [float(v) for v in values]
    return MinmaxReport(notion, tuple(values), tuple(witnesses), exact, approximate)


def minmax_table(game: StageGame) -> dict[str, MinmaxReport]:
    """All four notions, sharing the Nash and MI enumerations."""
    nash = enumerate_stage_nash(game)
    mi = enumerate_mi_profiles(game)
    return {notion: minmax(game, notion, nash=nash, mi=mi) for notion in NOTIONS}
