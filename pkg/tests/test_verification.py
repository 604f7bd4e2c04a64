from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blackwell_kit.game_core import GameFormatError, MixedProfile, load_bundled
from blackwell_kit.verification import automata, checks, private, spne

PD, PD_MS = load_bundled("prisoners_dilemma")
HALF = Fraction(1, 2)


def grim():
    return automata.grim_trigger(PD, (0, 0), (1, 1))


# ---------------------------------------------------------------------------
# perfect monitoring
# ---------------------------------------------------------------------------

def test_grim_trigger_threshold_is_one_third():
    # cooperation pays 2; a deviation pays (1 - d) 3 + d 0, so d >= 1/3 is needed
    assert spne.verify_spne_grid(PD, grim(), [0.34, 0.6, 0.99]).verdict
    rep = spne.verify_spne_grid(PD, grim(), [0.3])
    assert not rep.verdict and rep.max_violation > 0


def test_exact_and_float_state_values_agree():
    aut = grim()
    ex = spne.exact_state_values(PD, aut, Fraction(2, 3))
    fl = spne.state_values(spne.compile_automaton(PD, aut), 2 / 3)
    assert all(isinstance(x, Fraction) for row in ex for x in row)
    assert np.allclose(np.asarray(ex, float), fl, atol=1e-12)
    assert ex[0] == (2, 2) and ex[1] == (0, 0)


@given(st.floats(0.05, 0.95))
def test_gains_match_closed_form(d):
    gains = spne.deviation_gains(PD, grim(), d, normalised=True)
    # at "cooperate" the defection gain is (1-d) 3 - 2 (normalised)
    assert gains.max() == pytest.approx(max((1 - d) * 3 - 2, 0.0), abs=1e-12)


def test_domain_errors():
    with pytest.raises(spne.DomainError):
        spne.verify_spne_grid(PD, grim(), [1.0])


def test_mi_everywhere_and_blackwell_indifference():
    game, _ = load_bundled("example1")
    mi = MixedProfile.from_probs([(1, 0), (HALF, HALF, 0)])
    good = automata.stationary(game, mi)
    assert checks.verify_mi_everywhere(game, good).verdict
    assert checks.blackwell_indifference(game, good, horizon=8).verdict
    bad = automata.stationary(game, MixedProfile.from_probs([(HALF, HALF), (1, 0, 0)]))
    assert not checks.verify_mi_everywhere(game, bad).verdict
    assert not checks.blackwell_indifference(game, bad, horizon=8).verdict


def test_ppe_candidate_screen():
    pure = automata.PublicAutomaton(("s",), (MixedProfile.pure(PD, (0, 0)),), ((0,) * PD_MS.signal_count,))
    assert checks.classify_ppe_candidate(PD, PD_MS, pure).verdict
    mixed = automata.PublicAutomaton(("s",), (MixedProfile.from_probs([(HALF, HALF), (1, 0)]),),
                                     ((0,) * PD_MS.signal_count,))
    rep = checks.classify_ppe_candidate(PD, PD_MS, mixed)
    assert not rep.verdict and any("generic" in n for n in rep.notes)


# ---------------------------------------------------------------------------
# power series identity
# ---------------------------------------------------------------------------

@given(st.lists(st.fractions(-3, 3, max_denominator=5), min_size=1, max_size=6))
def test_vandermonde_recovers_coefficients(coeffs):
    nodes = [Fraction(k, 10) for k in range(1, len(coeffs) + 1)]
    values = [sum(c * x ** t for t, c in enumerate(coeffs)) for x in nodes]
    assert checks.vandermonde_solve(nodes, values) == list(coeffs)


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=6), st.data())
def test_series_identity_equals_termwise_equality(a, data):
    b = data.draw(st.lists(st.integers(-3, 3), min_size=len(a), max_size=len(a)))
    samples = [Fraction(k, 11) for k in range(1, 10)]
    assert checks.series_identity_check(a, b, samples) == (a == b)


def test_series_identity_needs_enough_samples():
    with pytest.raises(ValueError):
        checks.series_identity_check([1, 2, 3], [1, 2, 3], [HALF, Fraction(1, 3)])


# ---------------------------------------------------------------------------
# private monitoring
# ---------------------------------------------------------------------------

def test_example2_values():
    game, ms, aut = automata.load_bundled_strategy("example2_private")
    thr = private.private_threshold(game, ms, aut)
    assert thr == pytest.approx(0.75, abs=1e-6)
    assert private.evaluate_private_automaton(game, ms, aut, [0.79, 0.9]).verdict
    assert not private.evaluate_private_automaton(game, ms, aut, [0.7]).verdict
    avg = private.onpath_average_profiles(game, ms, aut)
    # odd rounds play D; even rounds average to 1/2 H + 1/2 D for each player
    assert [[tuple(p) for p in prof] for prof in avg] == [[(0, 1), (0, 1)], [(HALF, HALF), (HALF, HALF)]]


def test_exact_values_match_simulation():
    game, ms, aut = automata.load_bundled_strategy("example2_private")
    d = 0.9
    exact = np.asarray([float(x) for x in private.exact_initial_values(game, ms, aut, Fraction(9, 10))])
    mean, se = private.monte_carlo_values(game, ms, aut, d, rounds=40_000, seed=7)
    assert np.all(np.abs(mean - exact) <= 5 * np.maximum(se, 1e-12))


def test_mi_check_for_private_automaton():
    game, ms, aut = automata.load_bundled_strategy("example2_private")
    rep = checks.verify_mi_everywhere(game, aut, ms)
    assert rep.verdict and rep.notes


def test_anti_folk_verdicts():
    game, ms = load_bundled("pd_private_ci")
    v = checks.anti_folk_verdict(game, ms)
    assert v.fires and v.nash.pure_profile() == (1, 1)
    game, ms = load_bundled("hawk_dove")
    v = checks.anti_folk_verdict(game, ms)
    assert not v.fires and v.failing() == ["A_MI_equals_A"]
    with pytest.raises(ValueError):
        checks.anti_folk_verdict(PD, PD_MS)


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["pd_grim", "example2_private"])
def test_strategy_round_trip(tmp_path, name):
    game, _, aut = automata.load_bundled_strategy(name)
    automata.save_automaton(tmp_path / "s.json", aut, game)
    again = automata.load_automaton(tmp_path / "s.json", game)
    assert again.to_dict(game) == aut.to_dict(game)


def test_strategy_errors_name_the_problem():
    data = json.loads(automata.bundled_strategy_path("pd_grim").read_text())
    data["automaton"]["on_path"] = ["cooperate", "nowhere"]
    with pytest.raises(GameFormatError, match="nowhere"):
        automata.automaton_from_dict(data, PD)
    del data["automaton"]["on_deviation"]
    data["automaton"]["on_path"] = ["cooperate", "punish"]
    with pytest.raises(GameFormatError, match="on_deviation"):
        automata.automaton_from_dict(data, PD)
    with pytest.raises(GameFormatError, match="unknown automaton kind"):
        automata.automaton_from_dict({"kind": "quantum"}, PD)


def test_report_serialisation():
    rep = spne.verify_spne_grid(PD, grim(), [0.5, 0.9])
    d = rep.to_dict()
    assert d["verdict"] in ("pass", True)
    assert "PASS" in rep.text()
