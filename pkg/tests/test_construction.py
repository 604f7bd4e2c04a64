from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.stats import binom

from blackwell_kit import equilibria as eqm
from blackwell_kit.construction import ball, binomial, lbp, reboot, rewards, sequences, simple
from blackwell_kit.game_core import PayoffStream, deviation_rewards, game_from_matrix, load_bundled
from blackwell_kit.verification.automata import load_bundled_strategy
from blackwell_kit.verification.spne import verify_spne_grid

PD = load_bundled("prisoners_dilemma")[0]
PD_PAY = np.array([[2, 2], [-1, 3], [3, -1], [0, 0]], float)


def truncated_values(game, seq, delta, horizon):
    """Brute-force discounted values of every suffix start within one period."""
    pay = np.asarray([[float(x) for x in game.payoffs[seq.at(t)]] for t in range(horizon + len(seq))])
    w = (1 - delta) * delta ** np.arange(horizon)
    return np.asarray([w @ pay[t:t + horizon] for t in range(len(seq))])


# ---------------------------------------------------------------------------
# target sequences
# ---------------------------------------------------------------------------

@given(st.lists(st.integers(1, 6), min_size=4, max_size=4), st.sampled_from([0.3, 0.6, 1.0]))
def test_sequence_contract_against_brute_force(weights, eps):
    w = np.asarray(weights, float) / sum(weights)
    v = tuple(w @ PD_PAY)
    dh = sequences.delta_hat(PD, v, eps)
    assume(dh <= 0.99)
    delta = max(dh, 0.8)
    seq = sequences.build_target_sequence(PD, v, eps, delta)
    horizon = int(math.log(1e-13) / math.log(delta)) + 1
    vals = truncated_values(PD, seq, delta, horizon)
    assert np.abs(vals[0] - v).max() < 1e-8
    assert np.linalg.norm(vals - v, axis=1).max() <= eps + 1e-8


def test_sequence_below_bound_asks_for_more_patience():
    v = (1.5, 1.5)
    dh = sequences.delta_hat(PD, v, 0.3)
    with pytest.raises(sequences.SequenceError, match="raise delta"):
        sequences.build_target_sequence(PD, v, 0.3, dh * 0.9)


def test_vertex_target_is_constant_play():
    seq = sequences.build_target_sequence(PD, (2, 2), 0.1, 0.5)
    assert seq.cycle == ((0, 0),) and seq.preamble == ()
    assert sequences.delta_hat(PD, (2, 2), 0.1) == 0.0


def test_patience_check_exact():
    stream = PayoffStream.scalar([Fraction(3)], [Fraction(0), Fraction(2)])
    # suffix values at 1/2: 3/2 + ..., all between 0 and 3
    assert sequences.patience_check(stream, (Fraction(0), Fraction(3)), Fraction(1, 2))
    assert not sequences.patience_check(stream, (Fraction(1), Fraction(3)), Fraction(1, 2))


# ---------------------------------------------------------------------------
# reward cycles and the simple profile
# ---------------------------------------------------------------------------

def test_reward_cycle_inequalities_hold_exactly():
    cyc = rewards.build_reward_cycles(PD, (Fraction(3, 2), Fraction(3, 2)))
    assert len({len(c) for c in cyc.cycles}) == 1
    for i, c in enumerate(cyc.cycles):
        mean = [sum(Fraction(PD.payoffs[a][k]) for a in c) / len(c) for k in range(2)]
        assert tuple(mean) == cyc.means[i]
        assert cyc.floors[i] + cyc.eps < mean[i]
        assert mean[i] + cyc.eps < cyc.target[i]
        for j in range(2):
            if j != i:
                own = cyc.means[j]
                assert mean[i] + cyc.eps < own[i]
        rew = [PD.payoffs[a][i] for a in c]
        assert rew == sorted(rew)


def test_reward_cycles_reject_bad_targets():
    with pytest.raises(rewards.TargetError):
        rewards.build_reward_cycles(PD, (0, 0))
    flat = game_from_matrix([["a", "b"], ["c", "d"]], [[[0, 0], [1, 1]], [[2, 2], [3, 3]]])
    with pytest.raises(rewards.DimensionError):
        rewards.build_reward_cycles(flat, (1, 1))


def _gain_oracle(game, aut, delta):
    """Largest one-shot deviation gain (normalised), by direct linear algebra."""
    S = len(aut.outputs)
    n = game.player_count
    P = np.zeros((S, S))
    R = np.zeros((S, n))
    for s, prof in enumerate(aut.outputs):
        for a in game.profiles():
            p = float(prof.probability(a))
            if p:
                P[s, aut.transition(s, a)] += p
                R[s] += p * game.g[a]
    V = np.linalg.solve(np.eye(S) - delta * P, (1 - delta) * R)
    worst = -np.inf
    for s, prof in enumerate(aut.outputs):
        for i in range(n):
            for k in range(game.shape[i]):
                dev = prof.replace(i, prof[i].__class__.pure(k, game.shape[i]))
                val = 0.0
                for a in game.profiles():
                    p = float(dev.probability(a))
                    if p:
                        val += p * ((1 - delta) * game.g[a][i] + delta * V[aut.transition(s, a), i])
                worst = max(worst, val - V[s, i])
    return worst


def test_simple_profile_is_subgame_perfect_on_its_grid():
    prof = simple.assemble_simple_profile(PD, (Fraction(3, 2), Fraction(3, 2)))
    aut = prof.to_automaton()
    lo = prof.delta_low
    rep = verify_spne_grid(PD, prof, [lo, (lo + 1) / 2, 0.9999])
    assert rep.verdict
    for d in (lo, 0.9999):
        assert _gain_oracle(PD, aut, d) <= 1e-9
    assert prof.constants.N >= 1 and lo < 1


def test_simple_profile_rejects_impatient_delta():
    with pytest.raises(simple.ConstantsError):
        simple.assemble_simple_profile(PD, (Fraction(3, 2), Fraction(3, 2)), delta=0.5)


def test_family_margins_at_the_threshold():
    cyc = rewards.build_reward_cycles(PD, (Fraction(3, 2), Fraction(3, 2)))
    const = simple.choose_constants(PD, (Fraction(3, 2), Fraction(3, 2)), cyc)
    assert all(val >= 0 for val in const.margins.values())
    lim = simple.family_limits(PD, cyc, const.N)
    # the punished player's phase-III margin carries a factor (1 - delta)
    assert lim.pop("IC-III(i)") == pytest.approx(0, abs=1e-12)
    assert all(val > 0 for val in lim.values())


# ---------------------------------------------------------------------------
# binomial tests
# ---------------------------------------------------------------------------

@given(st.integers(1, 300), st.floats(0.05, 0.95), st.data())
def test_exact_tail_matches_scipy(T, q, data):
    k = data.draw(st.integers(0, T))
    assert float(binomial.exact_tail(T, k, Fraction(q))) == pytest.approx(binom.sf(k - 1, T, q), rel=1e-9, abs=1e-15)
    assert binomial.log_tail(T, k, q) == pytest.approx(binom.sf(k - 1, T, q), rel=1e-9, abs=1e-15)


@given(st.floats(0.2, 0.8), st.floats(0.2, 0.8))
def test_designed_test_meets_its_tolerance(q, target):
    spec = binomial.design_binomial_test(q, target, 1e-2)
    assert abs(binom.sf(spec.k - 1, spec.T, q) - target) <= 1e-2 + 1e-12
    # no shorter test works
    for T in range(1, spec.T):
        tails = binom.sf(np.arange(T + 1) - 1, T, q)
        assert np.abs(tails - target).min() > 1e-2 * (1 - 1e-9)


def test_truncation_preserves_pass_probability():
    spec = binomial.design_binomial_test(Fraction(3, 5), 0.5, 1e-2)
    trunc = binomial.nash_truncate(spec, "stage-nash")
    assert trunc.pass_probability(exact=True) == spec.pass_probability(exact=True)
    assert trunc.expected_length() < spec.T


def test_cap_error_carries_best_test():
    with pytest.raises(binomial.CapError) as info:
        binomial.design_binomial_test(0.5, 0.3, 1e-12, cap=20)
    assert info.value.best is not None and info.value.best.T <= 20


# ---------------------------------------------------------------------------
# reboot
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("p", [Fraction(1, 10), Fraction(1, 2)])
def test_reboot_identities_on_grim_trigger(p):
    game, _, aut = load_bundled_strategy("pd_grim")
    assert reboot.reboot_gain_gap(game, aut, p, 0.9) < 1e-12
    u_p, u = reboot.reboot_value_identity(game, aut, p, Fraction(4, 5) * (1 - p))
    assert u_p == u


def test_reboot_probabilities_compose():
    game, _, aut = load_bundled_strategy("pd_grim")
    twice = reboot.reboot_transform(reboot.reboot_transform(aut, Fraction(1, 2)), Fraction(1, 3))
    assert twice.reboot == Fraction(2, 3)
    with pytest.raises(ValueError):
        reboot.reboot_transform(aut, 1)


# ---------------------------------------------------------------------------
# ball decomposition
# ---------------------------------------------------------------------------

def _check_passes(res, tol=1e-9):
    chk = res.check()
    assert chk["promise"] <= tol and chk["indifference"] <= tol
    assert chk["slack"] >= -tol
    assert chk["budget"] <= tol
    assert chk["ball"] <= tol
    assert chk["garble_expectation"] <= tol and chk["switch_spread"] <= tol
    return chk


def test_ball_points_on_pd_product():
    game, ms = load_bundled("pd_product")
    res = ball.decompose_ball_point(game, ms, (1, 1), 0.5, (0.5, 1.0))
    assert res.case == "boundary-nash"
    assert res.profile.pure_profile() == (1, 1)
    _check_passes(res)
    diag = (1 + 0.5 / math.sqrt(2), 1 + 0.5 / math.sqrt(2))
    res = ball.decompose_ball_point(game, ms, (1, 1), 0.5, diag)
    assert res.case == "boundary-score" and res.profile.pure_profile() == (0, 0)
    _check_passes(res)


def test_ball_point_with_mixed_witness():
    game, ms = load_bundled("example1_product")
    res = ball.decompose_ball_point(game, ms, (1.1, 1.35), 0.3, (0.8, 1.35))
    assert res.case == "boundary-score"
    assert not res.profile.is_pure
    assert res.garbling is not None
    assert eqm.is_mi(game, res.profile, tol=1e-9)
    _check_passes(res)
    assert res.delta < 1


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=6))
def test_garbling_preserves_expectations(values):
    gb = ball.garble(np.asarray(values))
    assert np.abs(gb.expectation() - values).max() <= 1e-9 * max(1.0, max(map(abs, values)))
    assert np.all((gb.switch >= 0) & (gb.switch <= 1))


def test_ball_needs_product_monitoring():
    game, ms = load_bundled("prisoners_dilemma")
    with pytest.raises((ValueError, ball.GeometryError)):
        ball.decompose_ball_point(game, ms, (1, 1), 0.5, (0.5, 1.0))


# ---------------------------------------------------------------------------
# long-run average plans
# ---------------------------------------------------------------------------

def test_lbp_plan_converges_for_pd():
    plan = lbp.build_lbp_plan(PD, (1, 1))
    chk = plan.check()
    assert chk["margin"] > 0 and chk["min_weight"] > 0 and chk["equal_lengths"]
    assert chk["combination"] < 1e-9
    assert chk["cesaro_error"] < 1e-3 and chk["discounted_error"] < 1e-3
    for m in (10, 11, 12):
        w = plan.dyadic_weights(m)
        assert sum(w) == 1 and all(x.denominator <= 2 ** m for x in w)
        assert len(plan.cycle(m)) == 2 ** m
    # every point of D is a dyadic mean of its subcycle
    for d, sub in zip(plan.points, plan.subcycles):
        mean = tuple(sum(Fraction(PD.payoffs[a][i]) for a in sub) / len(sub) for i in range(2))
        assert mean == d


def test_lbp_vertex_target_is_constant():
    plan = lbp.build_lbp_plan(PD, (2, 2))
    assert plan.constant


def test_lbp_rejects_points_at_the_floor():
    game, _ = load_bundled("hawk_dove")
    floors = eqm.minmax(game, "mi").values
    with pytest.raises(lbp.MarginError):
        lbp.build_lbp_plan(game, floors)


@given(st.lists(st.floats(0.01, 1), min_size=1, max_size=5), st.integers(0, 8))
def test_rounding_and_spread(weights, m):
    w = np.asarray(weights) / sum(weights)
    counts = lbp._round_counts(w, 2 ** m)
    assert sum(counts) == 2 ** m
    assert all(abs(c - x * 2 ** m) < 1 for c, x in zip(counts, w))
    seq = lbp._spread(counts)
    assert [seq.count(k) for k in range(len(counts))] == counts
    # prefix counts never drift more than one from proportional
    for t in range(1, len(seq) + 1):
        for k, c in enumerate(counts):
            assert abs(seq[:t].count(k) - t * c / 2 ** m) <= 1 + 1e-9


def test_deviation_rewards_of_punishers():
    wit = eqm.minmax(PD, "mi").witnesses
    for i, prof in enumerate(wit):
        assert max(deviation_rewards(PD, i, prof)) == 0
        # the punisher defects; the punished player's own component is free
        assert prof[1 - i].support == (1,)
