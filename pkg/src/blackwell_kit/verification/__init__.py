"""Automata and equilibrium checkers.  Nothing here imports the builders, so
checks stay independent of the code that produced the strategies."""
from __future__ import annotations

from .automata import (PerfectAutomaton, PlayerMachine, PrivateAutomaton, PublicAutomaton, automaton_from_dict,
                       grim_trigger, load_automaton, load_bundled_strategy, save_automaton, stationary)
from .checks import (AntiFolkVerdict, anti_folk_verdict, blackwell_indifference, classify_ppe_candidate,
                     series_identity_check, verify_mi_everywhere)
from .private import (SizeError, evaluate_private_automaton, exact_initial_values, monte_carlo_values,
                      onpath_average_profiles, private_threshold)
from .report import VerificationReport, Violation
from .spne import DomainError, deviation_gains, exact_state_values, verify_spne_grid

__all__ = [
    "AntiFolkVerdict", "DomainError", "PerfectAutomaton", "PlayerMachine", "PrivateAutomaton", "PublicAutomaton",
    "SizeError", "VerificationReport", "Violation", "anti_folk_verdict", "automaton_from_dict",
    "blackwell_indifference", "classify_ppe_candidate", "deviation_gains", "evaluate_private_automaton",
    "exact_initial_values", "exact_state_values", "grim_trigger", "load_automaton", "load_bundled_strategy",
    "monte_carlo_values", "onpath_average_profiles", "private_threshold", "save_automaton", "series_identity_check",
    "stationary", "verify_mi_everywhere", "verify_spne_grid",
]
