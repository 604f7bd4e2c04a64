"""Necessary-condition screens and the power-series identity test."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..config import settings
from ..equilibria import enumerate_mi_profiles, enumerate_stage_nash, is_nash, mi_gaps
from ..game_core import MixedProfile, StageGame, deviation_rewards
from ..monitoring import MonitoringStructure, check_properties
from .automata import PerfectAutomaton, PrivateAutomaton, PublicAutomaton
from .report import Violation, build_report

SERIES_TOL = 1e-9


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return f"{float(x):.6g}"


def _mi_items(game: StageGame, profile: MixedProfile, where: str) -> list:
    items = []
    for i, gap in enumerate(mi_gaps(game, profile)):
        vals = deviation_rewards(game, i, profile)
        sup = profile[i].support
        detail = ", ".join(f"{game.action_labels[i][k]}={_fmt(vals[k])}" for k in sup)
        items.append(Violation("myopic indifference", float(gap), where, i, None, None,
                               detail=f"rewards on support: {detail}"))
    return items


def verify_mi_everywhere(game: StageGame, automaton, ms: MonitoringStructure | None = None):
    """Every reachable state's output passes the myopic-indifference test.

    Perfect and public automata are checked state by state.  For private
    automata (``ms`` required) each player's state is private information, so
    the test applies to the players' average actions in every round of the
    on-path distribution, which is the object that must be MI.
    """
    tol = settings.tol
    items, notes = [], []
    if isinstance(automaton, (PerfectAutomaton, PublicAutomaton)):
        for s in automaton.reachable():
            items += _mi_items(game, automaton.outputs[s], automaton.states[s])
    elif isinstance(automaton, PrivateAutomaton):
        if ms is None:
            raise ValueError("private automata need the monitoring structure")
        from .private import onpath_average_profiles

        for t, avg in enumerate(onpath_average_profiles(game, ms, automaton)):
            prof = MixedProfile.from_probs(avg)
            items += _mi_items(game, prof, f"round {t}")
        notes.append("private automaton: tested the on-path average action of each round")
    else:
        raise TypeError(f"unsupported automaton type {type(automaton).__name__}")
    return build_report("mi-everywhere", items, tol, notes=notes)


def classify_ppe_candidate(game: StageGame, ms_public: MonitoringStructure, automaton: PublicAutomaton):
    """Every reachable state plays a pure profile or a stage Nash equilibrium.

    This is a necessary condition for generic games and monitoring; the
    classifier cannot tell whether a particular pair lies in the exceptional
    set, which the report notes.
    """
    if not isinstance(automaton, PublicAutomaton):
        raise TypeError("classify_ppe_candidate expects a public automaton")
    if ms_public.kind == "private":
        raise ValueError("classify_ppe_candidate needs public monitoring")
    items = []
    for s in automaton.reachable():
        prof = automaton.outputs[s]
        ok = prof.is_pure or is_nash(game, prof)
        items.append(Violation("pure or stage Nash", 0.0 if ok else 1.0, automaton.states[s],
                               detail=prof.describe(game)))
    return build_report("ppe-candidate", items, 0.5,
                        notes=["generic-case: the screen is necessary only for almost all games and signal kernels"])


@dataclass(frozen=True)
class AntiFolkVerdict:
    """Outcome of the anti-folk screen for private monitoring.

    ``premises`` maps each premise name to whether it holds; ``nash`` is the
    unique pure stage equilibrium when every premise holds.
    """

    premises: dict
    fires: bool
    nash: MixedProfile | None
    message: str
    details: dict = field(default_factory=dict)

    def failing(self) -> list:
        return [k for k, v in self.premises.items() if not v]

    def to_dict(self, game: StageGame | None = None) -> dict:
        out = {"premises": dict(self.premises), "fires": self.fires, "message": self.message}
        if self.nash is not None and game is not None:
            out["nash"] = self.nash.describe(game)
        return out


def anti_folk_verdict(game: StageGame, ms_private: MonitoringStructure) -> AntiFolkVerdict:
    """Check the premises of the anti-folk result and name the outcome.

    Premises: every MI profile is pure, signals are conditionally independent
    given the action profile, and every signal has positive probability.
    """
    if ms_private.kind != "private":
        raise ValueError("anti_folk_verdict needs private monitoring")
    mi = enumerate_mi_profiles(game)
    mixed = [m.profile for m in mi.members if not m.profile.is_pure]
    props = check_properties(ms_private)
    premises = {
        "A_MI_equals_A": mi.finite and not mixed,
        "conditional_independence": props.conditional_independence,
        "full_support": props.full_support,
    }
    details = {"mixed_mi_profiles": [p.describe(game) for p in mixed[:5]],
               "ci_violation": props.ci_violation, "min_probability": props.min_probability}
    if not all(premises.values()):
        bad = ", ".join(k for k, v in premises.items() if not v)
        return AntiFolkVerdict(premises, False, None, f"premise fails: {bad}", details)
    nash = enumerate_stage_nash(game)
    pure = [p for p in nash if p.is_pure]
    if len(nash) != 1 or len(pure) != 1:
        # guaranteed not to happen when the premises hold; report instead of asserting
        return AntiFolkVerdict(premises, False, None,
                               f"premises hold but the stage game has {len(nash)} equilibria", details)
    label = game.profile_label(pure[0].pure_profile())
    return AntiFolkVerdict(premises, True, pure[0], f"unique Blackwell outcome = ({label}) forever", details)


# ---------------------------------------------------------------------------
# power-series identity
# ---------------------------------------------------------------------------

def _rational(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def vandermonde_solve(nodes: Sequence[Fraction], values: Sequence[Fraction]) -> list:
    """Monomial coefficients of the interpolating polynomial, exactly.

    Newton divided differences followed by expansion, which solves the
    Vandermonde system in O(h^2) rational operations.
    """
    h = len(nodes)
    dd = list(values)
    for j in range(1, h):
        for k in range(h - 1, j - 1, -1):
            dd[k] = (dd[k] - dd[k - 1]) / (nodes[k] - nodes[k - j])
    coeffs = [Fraction(0)] * h
    for k in range(h - 1, -1, -1):
        # coeffs <- coeffs * (x - nodes[k]) + dd[k]
        new = [Fraction(0)] * h
        for t in range(h - 1):
            new[t + 1] += coeffs[t]
            new[t] -= nodes[k] * coeffs[t]
        new[0] += dd[k]
        coeffs = new
    return coeffs


def series_identity_check(stream_a: Sequence, stream_b: Sequence, delta_samples: Sequence,
                          tol: float = SERIES_TOL) -> bool:
    """Whether two finite reward sequences have equal discounted sums as functions of delta.

    The difference of the sums is a polynomial of degree below
    ``h = max(len(a), len(b))``.  Its values at the samples determine its
    coefficients through a Vandermonde system, solved in exact arithmetic
    (floats are converted exactly).  Returns true when every recovered
    coefficient is within ``tol`` of zero, which is the same as termwise
    equality of the sequences.

    Raises
    ------
    ValueError
        With fewer than ``h + 1`` distinct samples in (0, 1).
    """
    h = max(len(stream_a), len(stream_b))
    samples = sorted({_rational(d) for d in delta_samples})
    if any(not (0 < d < 1) for d in samples):
        raise ValueError("discount samples must lie in (0, 1)")
    if len(samples) < h + 1:
        raise ValueError(f"need at least {h + 1} distinct discount samples, got {len(samples)}")
    if h == 0:
        return True
    a = [_rational(x) for x in stream_a] + [Fraction(0)] * (h - len(stream_a))
    b = [_rational(x) for x in stream_b] + [Fraction(0)] * (h - len(stream_b))
    diff_at = []
    for d in samples:
        sa = sum(x * d ** t for t, x in enumerate(a))
        sb = sum(x * d ** t for t, x in enumerate(b))
        diff_at.append(sa - sb)
    coeffs = vandermonde_solve(samples[:h], diff_at[:h])
    # the remaining samples must agree with the interpolant
    for d, val in zip(samples[h:], diff_at[h:]):
        if abs(sum(c * d ** t for t, c in enumerate(coeffs)) - val) > tol:
            return False
    return all(abs(c) <= tol for c in coeffs)


def continuation_streams(game: StageGame, aut: PerfectAutomaton, state: int, player: int,
                         horizon: int = 64) -> dict:
    """Expected reward sequence of ``player`` after each support action at ``state``.

    The player plays action k once and the automaton is followed afterwards;
    the distribution over states is propagated exactly for rational outputs.
    """
    out = aut.outputs[state]
    pay = game.payoffs if game.exact else game.g
    res = {}
    for k in out[player].support:
        probs = [list(act.probs) for act in out.actions]
        probs[player] = [int(j == k) for j in range(len(probs[player]))]
        dist = {}
        first = 0
        for a in itertools.product(*(range(len(p)) for p in probs)):
            w = 1
            for j, aj in enumerate(a):
                w = w * probs[j][aj]
            if w == 0:
                continue
            first = first + w * pay[a][player]
            t = aut.transition(state, a)
            dist[t] = dist.get(t, 0) + w
        seq = [first]
        for _ in range(horizon - 1):
            r, nxt = 0, {}
            for s, p in dist.items():
                o = aut.outputs[s]
                for a in itertools.product(*(act.support for act in o.actions)):
                    w = p * o.probability(a)
                    r = r + w * pay[a][player]
                    t = aut.transition(s, a)
                    nxt[t] = nxt.get(t, 0) + w
            seq.append(r)
            dist = nxt
        res[k] = seq
    return res


def blackwell_indifference(game: StageGame, aut: PerfectAutomaton, horizon: int = 64):
    """Indifference between support actions for every discount factor at once.

    For each mixing state and player, the truncated reward streams after the
    support actions are compared by :func:`series_identity_check` on
    ``horizon + 1`` samples.  Streams that agree to the horizon differ by at
    most ``2 max|g| delta^horizon`` in normalised value, which is reported.
    """
    items = []
    gmax = float(abs(game.g).max())
    samples = [Fraction(k, horizon + 2) for k in range(1, horizon + 2)]
    for s in aut.reachable():
        out = aut.outputs[s]
        for i in range(game.player_count):
            if len(out[i].support) < 2:
                continue
            streams = continuation_streams(game, aut, s, i, horizon)
            keys = list(streams)
            same = all(series_identity_check(streams[keys[0]], streams[k], samples) for k in keys[1:])
            items.append(Violation("blackwell indifference", 0.0 if same else 1.0, aut.states[s], i,
                                   detail=f"truncated at {horizon}; tail bound 2*{gmax:g}*delta^{horizon}"))
    return build_report("blackwell-indifference", items, 0.5)
