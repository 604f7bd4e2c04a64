"""Blackwell equilibria of finite repeated games.

Modules: ``game_core`` (games, profiles, discounting), ``equilibria`` (Nash,
myopic indifference, minmax notions), ``geometry`` (payoff polytopes),
``monitoring`` (signal structures), ``scoring`` (enforcement scores and limit
sets), ``construction`` (equilibrium builders), ``verification`` (checkers) and
``cli``.
"""
from __future__ import annotations

__version__ = "0.1.0"
