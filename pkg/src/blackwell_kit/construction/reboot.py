"""Reboot wrapper: restart an automaton with probability p each round.

A public uniform draw ``omega`` is observed every round; when ``omega <= p``
the automaton returns to its initial state, otherwise it moves as before.
The wrapped profile at discount factor ``delta`` behaves like the original
at ``delta (1 - p)``: one-shot gains (unnormalised) coincide, and the value
at the initial state satisfies ``U(sigma^p, d / (1 - p)) = U(sigma, d)``.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..game_core import StageGame
from ..verification.automata import PerfectAutomaton, PublicAutomaton
from ..verification.spne import deviation_gains, exact_state_values


def reboot_transform(automaton, p):
    """Automaton that reboots with probability ``p`` on top of any existing reboot.

    Two independent reboots with probabilities ``q`` and ``p`` combine to
    ``1 - (1 - q)(1 - p)``.  ``p`` may be a float or a Fraction.
    """
    if not isinstance(automaton, (PerfectAutomaton, PublicAutomaton)):
        raise TypeError("reboot needs a public randomisation device, so only perfect or public automata qualify")
    if not (0 <= p < 1):
        raise ValueError(f"reboot probability must lie in [0, 1), got {p!r}")
    q = automaton.reboot
    combined = 1 - (1 - q) * (1 - p)
    return automaton.with_reboot(combined)


def reboot_gain_gap(game: StageGame, automaton, p, delta: float) -> float:
    """Largest difference between the rebooted gains at ``delta`` and the
    original gains at ``delta (1 - p)`` (unnormalised, all states and actions)."""
    wrapped = reboot_transform(automaton, p)
    a = deviation_gains(game, wrapped, delta)
    b = deviation_gains(game, automaton, delta * (1 - float(p)))
    return float(np.abs(a - b).max())


def reboot_value_identity(game: StageGame, automaton, p, delta0) -> tuple:
    """Exact initial-state values ``(U(sigma^p, delta0 / (1 - p)), U(sigma, delta0))``."""
    p = Fraction(p)
    delta0 = Fraction(delta0)
    high = delta0 / (1 - p)
    if high >= 1:
        raise ValueError("delta0 / (1 - p) must stay below 1")
    wrapped = reboot_transform(automaton, p)
    u_p = exact_state_values(game, wrapped, high)[wrapped.initial]
    u = exact_state_values(game, automaton, delta0)[automaton.initial]
    return u_p, u
