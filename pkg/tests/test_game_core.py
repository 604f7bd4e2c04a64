from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blackwell_kit.game_core import (DiscountGrid, GameFormatError, MixedAction, MixedProfile, PayoffStream,
                                     deviation_rewards, discounted_value, expected_reward, game_from_dict,
                                     game_from_matrix, game_to_dict, load_bundled, load_game, save_game,
                                     suffix_values)
from blackwell_kit.rational import rank_exact, rank_float, rref, solve_exact, to_fraction

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=12)
deltas = st.fractions(min_value=0, max_value=Fraction(49, 50), max_denominator=50)


def test_bundled_pd_layout(pd):
    game, ms = pd
    assert game.player_count == 2 and game.shape == (2, 2)
    assert game.payoff((0, 0)) == (2, 2)
    assert game.payoff((0, 1)) == (-1, 3)
    assert ms.kind == "public"


def test_expected_reward_of_mixed_profile_is_bilinear(example1):
    prof = MixedProfile.from_probs([(Fraction(1, 2), Fraction(1, 2)), (Fraction(3, 4), Fraction(1, 4), 0)])
    got = expected_reward(example1, prof)
    want = [sum(Fraction(p) * Fraction(q) * example1.payoffs[a, b, i]
                for a, p in enumerate(prof[0].probs) for b, q in enumerate(prof[1].probs)) for i in range(2)]
    assert list(got) == want


def test_deviation_rewards_match_pure_replacement(example1):
    prof = MixedProfile.from_probs([(Fraction(1, 3), Fraction(2, 3)), (0, Fraction(1, 2), Fraction(1, 2))])
    rows = deviation_rewards(example1, 0, prof)
    for k in range(2):
        alt = prof.replace(0, MixedAction.pure(k, 2))
        assert rows[k] == expected_reward(example1, alt)[0]


def test_mixed_action_rejects_bad_vectors():
    with pytest.raises(ValueError):
        MixedAction((Fraction(1, 2), Fraction(1, 3)))
    with pytest.raises(ValueError):
        MixedAction((Fraction(3, 2), Fraction(-1, 2)))


@given(st.lists(st.tuples(fractions, fractions), max_size=4), st.lists(st.tuples(fractions, fractions),
       min_size=1, max_size=4), deltas)
def test_closed_form_value_matches_truncated_series(pre, cyc, delta):
    stream = PayoffStream(tuple(pre), tuple(cyc))
    exact = discounted_value(stream, delta)
    horizon = 4000
    approx = stream.truncated_sum(float(delta), horizon)
    assert all(isinstance(x, Fraction) for x in exact)
    assert max(abs(float(a) - b) for a, b in zip(exact, approx)) < 1e-9


@given(st.lists(fractions, max_size=4), st.lists(fractions, min_size=1, max_size=4), deltas)
def test_suffix_values_satisfy_the_recursion(pre, cyc, delta):
    stream = PayoffStream.scalar(pre, cyc)
    vals = suffix_values(stream, delta)
    assert len(vals) == len(pre) + len(cyc)
    for t in range(len(vals)):
        nxt = vals[t + 1] if t + 1 < len(vals) else vals[len(pre)]
        assert vals[t][0] == (1 - delta) * stream[t][0] + delta * nxt[0]


def test_discounted_value_rejects_delta_one():
    with pytest.raises(ValueError):
        discounted_value(PayoffStream.scalar([], [1]), 1)


def test_discount_grid_parse_and_points():
    g = DiscountGrid.parse("0.5:0.9:5")
    assert np.allclose(g.points(), [0.5, 0.6, 0.7, 0.8, 0.9])
    for bad in ("0.9:0.5:3", "a:b:c", "0.1:0.2", "0.1:1.0:3", "0.1:0.2:1"):
        with pytest.raises(ValueError):
            DiscountGrid.parse(bad)


def test_round_trip_through_json(tmp_path, pd):
    game, ms = pd
    path = tmp_path / "pd.json"
    save_game(path, game, ms)
    g2, ms2 = load_game(path)
    assert g2.action_labels == game.action_labels
    assert all(g2.payoff(a) == game.payoff(a) for a in game.profiles())
    assert ms2.kind == ms.kind
    assert game_to_dict(g2, ms2) == game_to_dict(game, ms)


def test_float_entries_make_an_inexact_game():
    game, _ = game_from_dict({"players": 2, "actions": [["a", "b"], ["x"]], "payoffs": [[[0.1, 1]], [[2, 3]]]})
    assert not game.exact


@pytest.mark.parametrize("doc, fragment", [
    ({"actions": [["a"], ["b"]], "payoffs": [[[0, 0]]]}, "missing field 'players'"),
    ({"players": 2, "actions": [["a", "a"], ["b"]], "payoffs": [[[0, 0]], [[0, 0]]]}, "duplicate labels"),
    ({"players": 2, "actions": [["a"], ["b"]], "payoffs": [[[0]]]}, "payoffs[0][0] must be a list of 2"),
    ({"players": 2, "actions": [["a"], ["b"]], "payoffs": [[["x", 0]]]}, "payoffs[0][0][0]"),
])
def test_format_errors_name_the_location(doc, fragment):
    with pytest.raises(GameFormatError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
        game_from_dict(doc)


def test_parse_error_reports_line_and_column(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n "players": 2,\n "actions": [}\n')
    with pytest.raises(GameFormatError, match="line 3"):
        load_game(path)


def test_every_bundled_game_loads():
    for name in ("prisoners_dilemma", "pd_refined", "pd_product", "pd_private_ci", "example1",
                 "example1_product", "hawk_dove"):
        game, _ = load_bundled(name)
        assert game.player_count == 2


def test_game_from_matrix_checks_cell_length():
    with pytest.raises(ValueError):
        game_from_matrix([["a"], ["b"]], [[[1]]])


@given(st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=1, max_size=4))
def test_exact_rank_agrees_with_numpy(rows):
    assert rank_exact([[Fraction(x) for x in r] for r in rows]) == np.linalg.matrix_rank(np.array(rows, float))
    assert rank_float(np.array(rows, float)) == np.linalg.matrix_rank(np.array(rows, float))


def test_rref_and_solve_exact():
    a = [[Fraction(2), Fraction(1)], [Fraction(1), Fraction(3)]]
    b = [Fraction(3), Fraction(5)]
    x, free = solve_exact(a, b)
    assert free == []
    assert [sum(r * v for r, v in zip(row, x)) for row in a] == b
    red, piv = rref(a)
    assert piv == [0, 1] and red == [[1, 0], [0, 1]]
    assert solve_exact([[Fraction(1), Fraction(1)], [Fraction(2), Fraction(2)]], [Fraction(1), Fraction(3)]) is None


@pytest.mark.parametrize("raw, want", [("3/4", Fraction(3, 4)), (2, Fraction(2)), ("-1.5", Fraction(-3, 2))])
def test_to_fraction(raw, want):
    assert to_fraction(raw) == want


def test_json_file_is_plain_text(tmp_path, pd):
    game, ms = pd
    save_game(tmp_path / "g.json", game, ms)
    assert json.loads((tmp_path / "g.json").read_text())["players"] == 2
