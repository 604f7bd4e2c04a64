"""Equilibrium builders: target paths, reward cycles, simple profiles,
ball decompositions, statistical tests, reboots and limit-of-means plans."""
from __future__ import annotations

from .ball import BallDecomposition, Garbling, GeometryError, IfrError, decompose_ball_point, garble
from .binomial import CapError, TestSpec, design_binomial_test, exact_tail, log_tail, nash_truncate
from .lbp import LbpPlan, MarginError, build_lbp_plan
from .reboot import reboot_gain_gap, reboot_transform, reboot_value_identity
from .rewards import DimensionError, RewardCycleSet, TargetError, build_reward_cycles
from .sequences import (ActionSequence, SequenceError, build_target_sequence, constant_sequence, delta_hat,
                        patience_check, verify_sequence)
from .simple import (Constants, ConstantsError, PunishmentSpec, SimpleStrategyProfile, assemble_simple_profile,
                     choose_constants)

__all__ = [
    "ActionSequence", "BallDecomposition", "CapError", "Constants", "ConstantsError", "DimensionError",
    "Garbling", "GeometryError", "IfrError", "LbpPlan", "MarginError", "PunishmentSpec", "RewardCycleSet",
    "SequenceError", "SimpleStrategyProfile", "TargetError", "TestSpec", "assemble_simple_profile",
    "build_lbp_plan", "build_reward_cycles", "build_target_sequence", "choose_constants", "constant_sequence",
    "decompose_ball_point", "delta_hat", "design_binomial_test", "exact_tail", "garble", "log_tail",
    "nash_truncate", "patience_check", "reboot_gain_gap", "reboot_transform", "reboot_value_identity",
    "verify_sequence",
]
