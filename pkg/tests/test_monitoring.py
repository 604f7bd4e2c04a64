from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blackwell_kit.game_core import MixedProfile, game_from_matrix, load_bundled
from blackwell_kit.monitoring import (MonitoringStructure, check_properties, find_test_pair, ifr_check,
                                      monitoring_from_dict, monitoring_to_dict, pairwise_full_rank_check,
                                      perfect_monitoring, private_ci_monitoring, product_monitoring,
                                      public_monitoring)

GAME = game_from_matrix([["C", "D"], ["C", "D"]], [[[2, 2], [-1, 3]], [[3, -1], [0, 0]]])


def _dist(rng, k):
    w = rng.integers(1, 9, size=k)
    return [Fraction(int(x), int(w.sum())) for x in w]


def _random_public(seed, ny=3):
    rng = np.random.default_rng(seed)
    return public_monitoring(GAME, [f"y{k}" for k in range(ny)], {a: _dist(rng, ny) for a in GAME.profiles()})


def test_kernel_rows_must_sum_to_one():
    with pytest.raises(ValueError, match="sum to one"):
        MonitoringStructure("public", ("a", "b"), np.full((2, 2, 2), 0.4))
    with pytest.raises(ValueError):
        MonitoringStructure("telepathic", ("a",), np.ones((1, 1, 1)))


def test_product_and_private_properties():
    prod = product_monitoring(GAME, [("g", "b"), ("g", "b")],
                              [[(Fraction(9, 10), Fraction(1, 10)), (Fraction(1, 5), Fraction(4, 5))]] * 2)
    rep = check_properties(prod)
    assert rep.product and rep.conditional_independence and rep.full_support
    priv = private_ci_monitoring(GAME, [("g", "b"), ("g", "b")],
                                 [{a: (Fraction(1, 2 + a[0] + a[1]), 1 - Fraction(1, 2 + a[0] + a[1]))
                                   for a in GAME.profiles()}] * 2)
    rep = check_properties(priv)
    assert rep.conditional_independence and not rep.product
    # correlated public signals factor in neither sense
    corr = MonitoringStructure("public", (("g", "g"), ("g", "b"), ("b", "g"), ("b", "b")),
                               np.tile([0.5, 0, 0, 0.5], (2, 2, 1)), signal_sets=(("g", "b"), ("g", "b")))
    assert not check_properties(corr).conditional_independence


def test_product_factor_reproduces_kernel():
    f = [[(Fraction(9, 10), Fraction(1, 10)), (Fraction(1, 5), Fraction(4, 5))],
         [(Fraction(2, 3), Fraction(1, 3)), (Fraction(1, 4), Fraction(3, 4))]]
    ms = product_monitoring(GAME, [("g", "b"), ("g", "b")], f)
    for a in GAME.profiles():
        for y, (y1, y2) in enumerate(itertools.product(range(2), repeat=2)):
            assert ms.exact_kernel[a + (y,)] == f[0][a[0]][y1] * f[1][a[1]][y2]


@given(st.integers(0, 10_000))
def test_signal_distribution_of_mixed_profile(seed):
    ms = _random_public(seed)
    rng = np.random.default_rng(seed)
    p, q = _dist(rng, 2), _dist(rng, 2)
    dist = ms.signal_distribution(MixedProfile.from_probs([p, q]))
    want = sum(np.asarray(ms.exact_kernel[a], dtype=object) * p[a[0]] * q[a[1]] for a in GAME.profiles())
    assert list(dist) == list(want)
    assert sum(dist) == 1


@given(st.integers(0, 10_000), st.integers(2, 4))
def test_full_rank_checks_match_numpy(seed, ny):
    ms = _random_public(seed, ny)
    prof = MixedProfile.pure(GAME, (0, 0))
    ifr = ifr_check(ms, prof)
    for i in range(2):
        rows = np.asarray([ms.kernel[(k, 0) if i == 0 else (0, k)] for k in range(2)])
        assert ifr[i] == (np.linalg.matrix_rank(rows) == 2)
    pfr = pairwise_full_rank_check(ms, prof)[(0, 1)]
    stacked = np.asarray([ms.kernel[(k, 0)] for k in range(2)] + [ms.kernel[(0, k)] for k in range(2)])
    assert pfr == (np.linalg.matrix_rank(stacked) == 3)


@given(st.integers(0, 10_000), st.integers(2, 4))
def test_test_pair_search_is_optimal(seed, ny):
    ms = _random_public(seed, ny)
    found = find_test_pair(ms)
    best = None
    for a in GAME.profiles():
        for size in range(1, ny):
            for ev in itertools.combinations(range(ny), size):
                q = sum(ms.exact_kernel[a + (y,)] for y in ev)
                gaps = []
                for i in range(2):
                    b = list(a)
                    b[i] = 1 - a[i]
                    gaps.append(q - sum(ms.exact_kernel[tuple(b) + (y,)] for y in ev))
                if q < 1 and min(gaps) > 0 and (best is None or min(gaps) > best):
                    best = min(gaps)
    if best is None:
        assert found is None
    else:
        assert found is not None and found.rho == best and found.verify(ms)


def test_perfect_monitoring_has_full_rank():
    ms = perfect_monitoring(GAME)
    assert all(ifr_check(ms, MixedProfile.pure(GAME, (1, 1))))


def test_private_kinds_reject_public_checks():
    _, ms = load_bundled("pd_private_ci")
    with pytest.raises(ValueError):
        ifr_check(ms, MixedProfile.pure(GAME, (0, 0)))
    with pytest.raises(ValueError):
        find_test_pair(ms)


@pytest.mark.parametrize("name", ["prisoners_dilemma", "pd_product", "pd_private_ci", "hawk_dove"])
def test_monitoring_dict_round_trip(name):
    game, ms = load_bundled(name)
    again = monitoring_from_dict(game, monitoring_to_dict(ms, game))
    assert again.kind == ms.kind
    assert np.array_equal(again.exact_kernel, ms.exact_kernel)
