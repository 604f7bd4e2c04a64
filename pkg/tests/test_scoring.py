from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from blackwell_kit import golden, lp, scoring
from blackwell_kit.game_core import MixedAction, MixedProfile, expected_reward, game_from_matrix, load_bundled
from blackwell_kit.geometry import support_value
from blackwell_kit.monitoring import public_monitoring


def _instance(seed, shape=(2, 2), ny=3):
    rng = np.random.default_rng(seed)
    m, n = shape
    table = [[[int(rng.integers(-5, 6)), int(rng.integers(-5, 6))] for _ in range(n)] for _ in range(m)]
    game = game_from_matrix([[f"r{k}" for k in range(m)], [f"c{k}" for k in range(n)]], table)
    dists = {}
    for a in game.profiles():
        w = rng.integers(1, 9, size=ny)
        dists[a] = [Fraction(int(x), int(w.sum())) for x in w]
    return game, public_monitoring(game, [f"y{k}" for k in range(ny)], dists)


def _random_profile(rng, shape):
    acts = []
    for m in shape:
        if rng.random() < 0.5:
            acts.append(MixedAction.pure(int(rng.integers(m)), m))
        else:
            w = rng.integers(0, 4, size=m) + (np.arange(m) == 0)
            acts.append(MixedAction(tuple(Fraction(int(x), int(w.sum())) for x in w)))
    return MixedProfile(tuple(acts))


def enforcement_oracle(game, ms, lam, prof, budget):
    """HiGHS on the program written with one value variable ``w_i`` per player.

    Variables are ``x_i(y)`` and ``w_i``; every action in the support earns
    exactly ``w_i`` in the augmented game and every other action at most
    ``w_i``.  The objective is ``lam . w``.
    """
    n, ny = 2, ms.signal_count
    lam = np.asarray(lam, float) / np.linalg.norm(lam)
    nv = n * ny + n
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for i in range(n):
        other = prof[1 - i].as_array()
        for k in range(game.shape[i]):
            sig = np.zeros(ny)
            rew = 0.0
            for l, q in enumerate(other):
                a = (k, l) if i == 0 else (l, k)
                sig += q * ms.kernel[a]
                rew += q * float(game.payoffs[a][i])
            row = np.zeros(nv)
            row[i * ny:(i + 1) * ny] = sig
            row[n * ny + i] = -1.0
            if k in prof[i].support:
                A_eq.append(row)
                b_eq.append(-rew)
            else:
                A_ub.append(row)
                b_ub.append(-rew)
    for y in range(ny):
        row = np.zeros(nv)
        row[y], row[ny + y] = lam[0], lam[1]
        (A_eq if budget == "exact" else A_ub).append(row)
        (b_eq if budget == "exact" else b_ub).append(0.0)
    c = np.zeros(nv)
    c[n * ny:] = -lam
    res = linprog(c, A_ub=A_ub or None, b_ub=b_ub or None, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(None, None)] * nv, method="highs")
    if res.status == 2:
        return -np.inf
    assert res.status == 0
    return -res.fun


@given(st.integers(0, 100_000), st.sampled_from([(2, 2), (2, 3)]), st.sampled_from(["inequality", "exact"]))
def test_fl_score_matches_highs(seed, shape, budget):
    game, ms = _instance(seed, shape)
    rng = np.random.default_rng(seed + 1)
    prof = _random_profile(rng, shape)
    lam = rng.normal(size=2)
    got = scoring.fl_score(game, ms, lam, prof, budget)
    want = enforcement_oracle(game, ms, lam, prof, budget)
    if want == -np.inf:
        assert not got.feasible
    else:
        assert got.score == pytest.approx(want, abs=1e-7)
        check = scoring.verify_scheme(game, ms, got)
        assert check["ok"], check


@pytest.mark.parametrize("backend", ["python"] + (["compiled"] if lp.BACKEND_NAME == "compiled" else []))
@given(st.integers(0, 100_000))
def test_batched_kernel_matches_single_scores(backend, seed):
    game, ms = _instance(seed, (2, 3))
    lam = np.random.default_rng(seed).normal(size=2)
    lam /= np.linalg.norm(lam)
    G1, G2, PI = game.g[..., 0], game.g[..., 1], ms.kernel
    S = lp.fl_scores_2p(G1, G2, PI, float(lam[0]), float(lam[1]), np.eye(2), np.eye(3), False,
                        kernel=lp.get_backend(backend))
    for a in game.profiles():
        want = scoring.fl_score(game, ms, lam, MixedProfile.pure(game, a)).score
        assert S[a] == pytest.approx(want, abs=1e-7) or (S[a] == want == -np.inf)


def test_pd_pure_limit_sets():
    game, ms = load_bundled("prisoners_dilemma")
    exact = scoring.limit_set_pure(game, ms, budget="exact")
    want = [(0, 0), (0.25, 1.75), (1.75, 0.25)]
    got = exact.float_vertices()
    assert len(got) == 3
    assert all(np.abs(got - w).max(axis=1).min() < 1e-9 for w in want)
    # the inequality budget lets the team burn value and reaches further out
    ineq = scoring.limit_set_pure(game, ms)
    got = ineq.float_vertices()
    for w in [(0, 0), (1 / 39, 77 / 39), (77 / 39, 1 / 39)]:
        assert np.abs(got - w).max(axis=1).min() < 1e-9


@given(st.integers(0, 10_000))
def test_limit_set_lies_below_every_score(seed):
    game, ms = load_bundled("prisoners_dilemma")
    P = _pd_set()
    lam = np.random.default_rng(seed).normal(size=2)
    lam /= np.linalg.norm(lam)
    k = max(enforcement_oracle(game, ms, lam, MixedProfile.pure(game, a), "inequality") for a in game.profiles())
    assert support_value(P, lam) <= k + 1e-7


def test_limit_set_edges_are_tight():
    game, ms = load_bundled("prisoners_dilemma")
    P = _pd_set()
    for lam, k in P.unit_halfspaces():
        best = max(enforcement_oracle(game, ms, lam, MixedProfile.pure(game, a), "inequality")
                   for a in game.profiles())
        assert best == pytest.approx(k, abs=1e-7)


_CACHE = {}


def _pd_set():
    if "pd" not in _CACHE:
        game, ms = load_bundled("prisoners_dilemma")
        _CACHE["pd"] = scoring.limit_set_pure(game, ms, directions=180)
    return _CACHE["pd"]


@given(st.integers(0, 10_000))
def test_mixed_score_dominates_pure_score(seed):
    game, ms = _instance(seed)
    lam = np.random.default_rng(seed).normal(size=2)
    mixed, _, gain = scoring.mixed_score(game, ms, lam, steps=16)
    pure = max(scoring.fl_score(game, ms, lam, MixedProfile.pure(game, a)).score for a in game.profiles())
    assert mixed >= pure - 1e-9 and gain >= 0


def test_mi_score_matches_prd_minmax_on_product_games():
    rng = random.Random(3)
    assert golden.mi_score_suite(rng, count=8) < 1e-7


def test_example1_product_bounded_sets():
    game, ms = load_bundled("example1_product")
    b = scoring.bounded_sets(game, ms)
    assert b.floors_star == (1, 1)
    assert b.f_mi_pi is not None
    for i in range(2):
        prd = scoring.mi_prd_minmax(game, ms, i)
        assert prd.value == b.floors_mi_pi[i]
        assert float(prd.value) == pytest.approx(-scoring.mi_score(game, ms, -np.eye(2)[i]).score, abs=1e-7)


def test_prd_program_needs_product_structure():
    game, ms = load_bundled("prisoners_dilemma")
    with pytest.raises(ValueError):
        scoring.mi_prd_minmax(game, ms, 0)


def test_private_monitoring_is_rejected():
    game, ms = load_bundled("pd_private_ci")
    with pytest.raises(ValueError):
        scoring.fl_score(game, ms, (1, 1), MixedProfile.pure(game, (0, 0)))


def test_expected_reward_used_in_score_is_consistent():
    game, ms = load_bundled("prisoners_dilemma")
    prof = MixedProfile.pure(game, (1, 1))
    res = scoring.fl_score(game, ms, (0, -1), prof)
    # stage Nash with zero transfers gives at least its own payoff
    assert res.score >= -float(expected_reward(game, prof)[1]) - 1e-12
