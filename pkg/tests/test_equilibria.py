from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import linprog

from blackwell_kit import equilibria as eqm
from blackwell_kit.game_core import MixedProfile, deviation_rewards, expected_reward, game_from_matrix, load_bundled


def _game(seed, shape=(2, 3), spread=9):
    rng = np.random.default_rng(seed)
    m, n = shape
    table = [[[int(rng.integers(-spread, spread + 1)), int(rng.integers(-spread, spread + 1))] for _ in range(n)]
             for _ in range(m)]
    return game_from_matrix([[f"r{k}" for k in range(m)], [f"c{k}" for k in range(n)]], table)


def _tables(game):
    pay = np.vectorize(float)(game.payoffs)
    return pay[..., 0], pay[..., 1].T  # own action first for each player


def _subsets(n):
    return [s for r in range(1, n + 1) for s in itertools.combinations(range(n), r)]


def _indiff_rows(table, own_supp, opp_supp, opp_size):
    """Rows of ``table[k] @ alpha - table[own_supp[0]] @ alpha == 0`` restricted to ``opp_supp``."""
    rows = []
    for k in own_supp[1:]:
        row = np.zeros(opp_size)
        row[list(opp_supp)] = table[k, list(opp_supp)] - table[own_supp[0], list(opp_supp)]
        rows.append(row)
    return rows


def _strictly_feasible(table, own_supp, opp_supp, opp_size):
    """Does some ``alpha`` with support exactly ``opp_supp`` make ``own_supp`` indifferent?"""
    # variables alpha (opp_size) and s; maximise s subject to alpha_l >= s on the support
    A_eq = [np.append(r, 0.0) for r in _indiff_rows(table, own_supp, opp_supp, opp_size)]
    A_eq.append(np.append(np.ones(opp_size), 0.0))
    b_eq = [0.0] * (len(A_eq) - 1) + [1.0]
    A_ub = []
    for l in opp_supp:
        row = np.zeros(opp_size + 1)
        row[l], row[-1] = -1.0, 1.0
        A_ub.append(row)
    bounds = [(0, None) if l in opp_supp else (0, 0) for l in range(opp_size)] + [(None, 1)]
    res = linprog(np.append(np.zeros(opp_size), -1.0), A_ub=A_ub, b_ub=np.zeros(len(A_ub)),
                  A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res.status == 0 and -res.fun > 1e-9


def mi_minmax_oracle(game, i):
    """Minimum over support pairs of the HiGHS value of the cell program."""
    tabs = _tables(game)
    j = 1 - i
    mi, mj = game.shape[i], game.shape[j]
    best = np.inf
    for si in _subsets(mi):
        for sj in _subsets(mj):
            if not (_strictly_feasible(tabs[j], sj, si, mi) and _strictly_feasible(tabs[i], si, sj, mj)):
                continue
            # minimise t over alpha_j in the closed factor, with g_i(k, alpha_j) <= t
            A_eq = [np.append(r, 0.0) for r in _indiff_rows(tabs[i], si, sj, mj)]
            A_eq.append(np.append(np.ones(mj), 0.0))
            b_eq = [0.0] * (len(A_eq) - 1) + [1.0]
            A_ub = [np.append(tabs[i][k], -1.0) for k in range(mi)]
            bounds = [(0, None) if l in sj else (0, 0) for l in range(mj)] + [(None, None)]
            res = linprog(np.append(np.zeros(mj), 1.0), A_ub=A_ub, b_ub=np.zeros(mi), A_eq=A_eq, b_eq=b_eq,
                          bounds=bounds, method="highs")
            assert res.status == 0
            best = min(best, res.fun)
    return best


def standard_minmax_oracle(game, i):
    tab = _tables(game)[i]
    mi, mj = tab.shape
    A_ub = np.hstack([tab, -np.ones((mi, 1))])
    res = linprog(np.append(np.zeros(mj), 1.0), A_ub=A_ub, b_ub=np.zeros(mi),
                  A_eq=[np.append(np.ones(mj), 0.0)], b_eq=[1.0],
                  bounds=[(0, None)] * mj + [(None, None)], method="highs")
    return res.fun


def nash_oracle(game):
    """Support enumeration for nondegenerate bimatrix games; returns float profile pairs."""
    A, B = _tables(game)
    m, n = A.shape
    out = []
    for size in range(1, min(m, n) + 1):
        for si in itertools.combinations(range(m), size):
            for sj in itertools.combinations(range(n), size):
                sol = []
                for tab, own, opp, osize in ((A, si, sj, n), (B, sj, si, m)):
                    M = np.vstack([_indiff_rows(tab, own, opp, osize) or np.zeros((0, osize)),
                                   np.ones(osize)])[:, list(opp)]
                    rhs = np.zeros(len(M))
                    rhs[-1] = 1.0
                    if abs(np.linalg.det(M)) < 1e-12:
                        sol = None
                        break
                    x = np.zeros(osize)
                    x[list(opp)] = np.linalg.solve(M, rhs)
                    sol.append(x)
                if sol is None:
                    continue
                beta, alpha = sol
                if alpha.min() < -1e-12 or beta.min() < -1e-12:
                    continue
                if any(abs(alpha[k]) < 1e-12 for k in si) or any(abs(beta[k]) < 1e-12 for k in sj):
                    continue
                va, vb = A @ beta, B @ alpha
                if va.max() > va[si[0]] + 1e-9 or vb.max() > vb[sj[0]] + 1e-9:
                    continue
                out.append((alpha, beta))
    return out


def _nondegenerate(game):
    """Every pure strategy has distinct best-response payoffs (generic games)."""
    A, B = _tables(game)
    return all(len(set(col)) == len(col) for col in A.T) and all(len(set(col)) == len(col) for col in B.T)


# ---------------------------------------------------------------------------


def test_example1_minmax_values(example1):
    tab = eqm.minmax_table(example1)
    assert tab["standard"].values[0] == Fraction(1, 2)
    assert tab["mi"].values[0] == Fraction(3, 4)
    assert tab["pure"].values[0] == 1
    assert tab["nash_worst"].values[0] == 1
    wit = tab["mi"].witnesses[0]
    assert eqm.is_mi(example1, wit)
    assert max(deviation_rewards(example1, 0, wit)) == Fraction(3, 4)


def test_pd_minmax_is_mutual_defection(pd):
    game, _ = pd
    tab = eqm.minmax_table(game)
    for notion in ("standard", "mi", "pure", "nash_worst"):
        assert tab[notion].values == (0, 0)
    nash = eqm.enumerate_stage_nash(game)
    assert len(nash) == 1 and nash[0].pure_profile() == (1, 1)


@given(st.integers(0, 100_000), st.sampled_from([(2, 2), (2, 3), (3, 3), (3, 2)]))
def test_mi_minmax_matches_cellwise_lp(seed, shape):
    game = _game(seed, shape)
    rep = eqm.minmax(game, "mi")
    for i in range(2):
        assert float(rep.values[i]) == pytest.approx(mi_minmax_oracle(game, i), abs=1e-7)


@given(st.integers(0, 100_000), st.sampled_from([(2, 2), (2, 3), (3, 3), (3, 4)]))
def test_standard_minmax_matches_lp(seed, shape):
    game = _game(seed, shape)
    rep = eqm.minmax(game, "standard")
    for i in range(2):
        assert float(rep.values[i]) == pytest.approx(standard_minmax_oracle(game, i), abs=1e-9)


@given(st.integers(0, 100_000), st.sampled_from([(2, 2), (2, 3), (3, 3)]))
def test_minmax_notions_are_ordered(seed, shape):
    game = _game(seed, shape)
    tab = eqm.minmax_table(game)
    for i in range(2):
        std, mi = tab["standard"].values[i], tab["mi"].values[i]
        pure, ne = tab["pure"].values[i], tab["nash_worst"].values[i]
        # every Nash profile is MI, and MI restricts the punishers
        assert std <= mi <= ne
        assert std <= pure


@given(st.integers(0, 100_000), st.sampled_from([(2, 2), (2, 3), (3, 3)]))
def test_nash_enumeration_matches_support_enumeration(seed, shape):
    game = _game(seed, shape, spread=1000)
    assume(_nondegenerate(game))
    got = eqm.enumerate_stage_nash(game)
    want = nash_oracle(game)
    assert len(got) == len(want)
    for prof in got:
        assert eqm.is_nash(game, prof)
        a, b = prof.as_floats()
        assert any(np.allclose(a, x, atol=1e-9) and np.allclose(b, y, atol=1e-9) for x, y in want)


@given(st.integers(0, 100_000), st.sampled_from([(2, 2), (2, 3), (3, 3)]))
def test_every_listed_mi_profile_is_myopically_indifferent(seed, shape):
    game = _game(seed, shape)
    mi = eqm.enumerate_mi_profiles(game)
    for m in mi.members:
        assert eqm.is_mi(game, m.profile)
        assert m.reward == expected_reward(game, m.profile)
    for a in game.profiles():
        # pure profiles are trivially MI
        assert mi.contains(MixedProfile.pure(game, a))
    assert mi.finite == all(c.finite for c in mi.cells)


def test_three_player_pure_minmax_by_brute_force():
    rng = np.random.default_rng(4)
    labels = [["a", "b"], ["c", "d"], ["e", "f"]]
    table = [[[[int(x) for x in rng.integers(-5, 6, 3)] for _ in range(2)] for _ in range(2)] for _ in range(2)]
    game = game_from_matrix(labels, table)
    rep = eqm.minmax(game, "pure")

    def reward(a, i):
        return table[a[0]][a[1]][a[2]][i]

    for i in range(3):
        want = min(max(reward(b[:i] + (k,) + b[i:], i) for k in range(2))
                   for b in itertools.product(range(2), repeat=2))
        assert rep.values[i] == want


def test_unknown_notion():
    game = load_bundled("example1")[0]
    with pytest.raises(ValueError):
        eqm.minmax(game, "folk")
