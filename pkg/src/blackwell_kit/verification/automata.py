"""Finite automata representing repeated-game strategy profiles.

Three kinds are supported:

* ``PerfectAutomaton``: one shared state, transitions on the realised pure
  profile.  Transitions are given by a simple rule (on-path successor, a
  per-player target for unilateral off-support deviations, a target for joint
  deviations) that explicit table entries may override.
* ``PublicAutomaton``: one shared state, transitions on the public signal.
* ``PrivateAutomaton``: one automaton per player, each moving on its owner's
  action and private signal.

Any of them may carry a reboot probability ``p``: after each round, with
probability ``p`` the state is reset to the initial state, driven by a public
uniform draw ``omega`` (reset when ``omega <= p``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from ..game_core import GameFormatError, MixedAction, MixedProfile, StageGame
from ..rational import format_fraction, to_fraction


def _enc(p):
    return format_fraction(p) if isinstance(p, Fraction) else float(p)


def _dec(p, exact: bool):
    if exact:
        return to_fraction(p)
    return float(p) if not isinstance(p, str) else float(to_fraction(p))


@dataclass(frozen=True, eq=False)
class PerfectAutomaton:
    """Shared-state automaton under perfect monitoring.

    Attributes
    ----------
    states : state names.
    outputs : the mixed profile played in each state.
    on_path : successor when no player leaves the support of the output.
    on_deviation : ``on_deviation[s][j]`` is the successor when exactly player
        ``j`` plays outside the support of their output action.
    multi_deviation : successor when two or more players leave the support
        (defaults to ``on_path``).
    overrides : explicit ``{(state, profile): successor}`` entries.
    initial : initial state index.
    reboot : reset probability per round.
    """

    states: tuple
    outputs: tuple
    on_path: tuple
    on_deviation: tuple
    multi_deviation: tuple | None = None
    overrides: dict = field(default_factory=dict)
    initial: int = 0
    reboot: object = 0
    kind: str = "perfect"

    def __post_init__(self):
        m = len(self.states)
        if not (len(self.outputs) == len(self.on_path) == len(self.on_deviation) == m):
            raise ValueError("automaton tables must have one entry per state")
        if not 0 <= self.initial < m:
            raise ValueError("initial state out of range")
        targets = list(self.on_path) + [t for row in self.on_deviation for t in row]
        targets += list(self.multi_deviation or ()) + list(self.overrides.values())
        if any(not (0 <= t < m) for t in targets):
            raise ValueError("transition target out of range")
        if not 0 <= self.reboot < 1:
            raise ValueError("reboot probability must lie in [0, 1)")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def player_count(self) -> int:
        return len(self.outputs[0])

    def transition(self, s: int, a: Sequence[int]) -> int:
        """Successor of state ``s`` after pure profile ``a`` (no reboot)."""
        a = tuple(int(k) for k in a)
        hit = self.overrides.get((s, a))
        if hit is not None:
            return hit
        out = self.outputs[s]
        deviators = [j for j, k in enumerate(a) if out[j][k] == 0]
        if not deviators:
            return self.on_path[s]
        if len(deviators) == 1:
            return self.on_deviation[s][deviators[0]]
        return (self.multi_deviation or self.on_path)[s]

    def step(self, s: int, a: Sequence[int], omega: float | None = None) -> int:
        """Transition including the reboot draw ``omega`` (uniform on [0, 1])."""
        if omega is not None and self.reboot > 0 and omega <= self.reboot:
            return self.initial
        return self.transition(s, a)

    def reachable(self, game: StageGame | None = None) -> list[int]:
        """States reachable from the initial state along any profile sequence."""
        import itertools

        seen = {self.initial}
        stack = [self.initial]
        while stack:
            s = stack.pop()
            shape = [len(act) for act in self.outputs[s].actions]
            for a in itertools.product(*(range(m) for m in shape)):
                t = self.transition(s, a)
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return sorted(seen)

    def with_reboot(self, p) -> "PerfectAutomaton":
        return replace(self, reboot=p)

    def to_dict(self, game: StageGame | None = None) -> dict:
        out = {
            "kind": "perfect",
            "states": list(self.states),
            "initial": self.initial,
            "outputs": [[[_enc(p) for p in act.probs] for act in prof.actions] for prof in self.outputs],
            "on_path": list(self.on_path),
            "on_deviation": [list(r) for r in self.on_deviation],
        }
        if self.multi_deviation is not None:
            out["multi_deviation"] = list(self.multi_deviation)
        if self.overrides:
            out["overrides"] = [{"state": s, "profile": list(a), "next": t}
                                for (s, a), t in sorted(self.overrides.items())]
        if self.reboot:
            out["reboot"] = _enc(self.reboot)
        return out


@dataclass(frozen=True, eq=False)
class PublicAutomaton:
    """Shared-state automaton moving on public signals ``transition[s][y]``."""

    states: tuple
    outputs: tuple
    transition_table: tuple
    initial: int = 0
    reboot: object = 0
    kind: str = "public"

    def __post_init__(self):
        m = len(self.states)
        if len(self.outputs) != m or len(self.transition_table) != m:
            raise ValueError("automaton tables must have one entry per state")
        if any(not (0 <= t < m) for row in self.transition_table for t in row):
            raise ValueError("transition target out of range")

    def __len__(self) -> int:
        return len(self.states)

    def transition(self, s: int, y: int) -> int:
        return self.transition_table[s][y]

    def step(self, s: int, y: int, omega: float | None = None) -> int:
        if omega is not None and self.reboot > 0 and omega <= self.reboot:
            return self.initial
        return self.transition(s, y)

    def reachable(self) -> list[int]:
        seen = {self.initial}
        stack = [self.initial]
        while stack:
            s = stack.pop()
            for t in self.transition_table[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return sorted(seen)

    def with_reboot(self, p) -> "PublicAutomaton":
        return replace(self, reboot=p)

    def to_dict(self, game: StageGame | None = None) -> dict:
        out = {
            "kind": "public",
            "states": list(self.states),
            "initial": self.initial,
            "outputs": [[[_enc(p) for p in act.probs] for act in prof.actions] for prof in self.outputs],
            "transitions": [list(r) for r in self.transition_table],
        }
        if self.reboot:
            out["reboot"] = _enc(self.reboot)
        return out


@dataclass(frozen=True, eq=False)
class PlayerMachine:
    """One player's private automaton.

    ``transition[s][a_i][y_i]`` is the successor after own action ``a_i`` and
    own signal ``y_i``.
    """

    states: tuple
    outputs: tuple            # MixedAction per state
    transition_table: tuple
    initial: int = 0

    def __post_init__(self):
        m = len(self.states)
        if len(self.outputs) != m or len(self.transition_table) != m:
            raise ValueError("player machine tables must have one entry per state")
        if any(not (0 <= t < m) for row in self.transition_table for r in row for t in r):
            raise ValueError("transition target out of range")


@dataclass(frozen=True, eq=False)
class PrivateAutomaton:
    """Profile of per-player private automata."""

    machines: tuple
    kind: str = "private"

    @property
    def player_count(self) -> int:
        return len(self.machines)

    def to_dict(self, game: StageGame | None = None) -> dict:
        return {
            "kind": "private",
            "players": [
                {"states": list(m.states), "initial": m.initial,
                 "outputs": [[_enc(p) for p in act.probs] for act in m.outputs],
                 "transitions": [[list(r) for r in row] for row in m.transition_table]}
                for m in self.machines
            ],
        }


Automaton = PerfectAutomaton | PublicAutomaton | PrivateAutomaton


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _profile(raw, game: StageGame | None, exact: bool, where: str) -> MixedProfile:
    try:
        acts = []
        for i, probs in enumerate(raw):
            if isinstance(probs, str):
                if game is None:
                    raise GameFormatError(f"{where}: action labels need a game")
                k = game.action_index(i, probs)
                acts.append(MixedAction.pure(k, game.shape[i]))
            else:
                acts.append(MixedAction(tuple(_dec(p, exact) for p in probs)))
        return MixedProfile(tuple(acts))
    except (ValueError, TypeError, KeyError) as exc:
        raise GameFormatError(f"{where}: bad output profile ({exc})") from exc


def _state_index(names, ref, where):
    if isinstance(ref, int) and not isinstance(ref, bool):
        return ref
    try:
        return names.index(ref)
    except ValueError as exc:
        raise GameFormatError(f"{where}: unknown state {ref!r}") from exc


def _profile_key(game, raw, where):
    if isinstance(raw, str):
        raw = raw.split(",")
    out = []
    for i, r in enumerate(raw):
        if isinstance(r, int):
            out.append(r)
        else:
            if game is None:
                raise GameFormatError(f"{where}: action labels need a game")
            out.append(game.action_index(i, str(r).strip()))
    return tuple(out)


def automaton_from_dict(data: dict, game: StageGame | None = None, source: str = "<dict>"):
    """Parse the strategy JSON format written by ``to_dict``."""
    if not isinstance(data, dict):
        raise GameFormatError(f"{source}: top level must be an object")
    if "automaton" in data:
        data = data["automaton"]
    kind = data.get("kind")
    exact = data.get("exact", True)
    try:
        if kind == "perfect":
            names = list(data["states"])
            outputs = tuple(_profile(o, game, exact, f"{source}: outputs[{k}]") for k, o in enumerate(data["outputs"]))
            n = len(outputs[0])
            on_path = tuple(_state_index(names, t, source) for t in data["on_path"])
            dev_raw = data.get("on_deviation")
            if dev_raw is None:
                raise GameFormatError(f"{source}: perfect automaton needs 'on_deviation'")
            on_dev = tuple(tuple(_state_index(names, t, source) for t in row) for row in dev_raw)
            if any(len(row) != n for row in on_dev):
                raise GameFormatError(f"{source}: 'on_deviation' rows need one entry per player")
            multi = data.get("multi_deviation")
            multi = None if multi is None else tuple(_state_index(names, t, source) for t in multi)
            overrides = {}
            for k, entry in enumerate(data.get("overrides", [])):
                s = _state_index(names, entry["state"], source)
                a = _profile_key(game, entry["profile"], f"{source}: overrides[{k}]")
                overrides[(s, a)] = _state_index(names, entry["next"], source)
            reboot = _dec(data.get("reboot", 0), exact)
            return PerfectAutomaton(tuple(names), outputs, on_path, on_dev, multi, overrides,
                                    _state_index(names, data.get("initial", 0), source), reboot)
        if kind == "public":
            names = list(data["states"])
            outputs = tuple(_profile(o, game, exact, f"{source}: outputs[{k}]") for k, o in enumerate(data["outputs"]))
            trans = tuple(tuple(_state_index(names, t, source) for t in row) for row in data["transitions"])
            reboot = _dec(data.get("reboot", 0), exact)
            return PublicAutomaton(tuple(names), outputs, trans, _state_index(names, data.get("initial", 0), source),
                                   reboot)
        if kind == "private":
            machines = []
            for i, pdata in enumerate(data["players"]):
                names = list(pdata["states"])
                outs = []
                for k, o in enumerate(pdata["outputs"]):
                    if isinstance(o, str):
                        if game is None:
                            raise GameFormatError(f"{source}: action labels need a game")
                        outs.append(MixedAction.pure(game.action_index(i, o), game.shape[i]))
                    else:
                        outs.append(MixedAction(tuple(_dec(p, exact) for p in o)))
                trans = tuple(tuple(tuple(_state_index(names, t, source) for t in r) for r in row)
                              for row in pdata["transitions"])
                machines.append(PlayerMachine(tuple(names), tuple(outs), trans,
                                              _state_index(names, pdata.get("initial", 0), source)))
            return PrivateAutomaton(tuple(machines))
    except KeyError as exc:
        raise GameFormatError(f"{source}: missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, GameFormatError):
            raise
        raise GameFormatError(f"{source}: {exc}") from exc
    raise GameFormatError(f"{source}: unknown automaton kind {kind!r}")


def load_automaton(path, game: StageGame | None = None):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise GameFormatError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return automaton_from_dict(data, game, str(path))


def save_automaton(path, automaton, game: StageGame | None = None, extra: dict | None = None) -> None:
    data = {"automaton": automaton.to_dict(game)}
    if extra:
        data.update(extra)
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


# ---------------------------------------------------------------------------
# common automata
# ---------------------------------------------------------------------------

def grim_trigger(game: StageGame, cooperate: Sequence[int], punish: Sequence[int]) -> PerfectAutomaton:
    """Play ``cooperate`` until any deviation, then ``punish`` forever."""
    coop = MixedProfile.pure(game, cooperate)
    pun = MixedProfile.pure(game, punish)
    n = game.player_count
    return PerfectAutomaton(("cooperate", "punish"), (coop, pun), (0, 1),
                            (tuple([1] * n), tuple([1] * n)), multi_deviation=(1, 1))


def stationary(game: StageGame, profile: MixedProfile, name: str = "static") -> PerfectAutomaton:
    """Play ``profile`` in every round regardless of history."""
    n = game.player_count
    return PerfectAutomaton((name,), (profile,), (0,), (tuple([0] * n),))


def bundled_strategy_path(name: str) -> Path:
    path = Path(__file__).resolve().parent.parent / "data" / "strategies" / f"{name}.json"
    if not path.exists():
        raise GameFormatError(f"no bundled strategy named {name!r}")
    return path


def load_bundled_strategy(name: str):
    """``(game, monitoring, automaton)`` for a strategy shipped with the package."""
    from ..game_core import load_bundled

    path = bundled_strategy_path(name)
    data = json.loads(path.read_text())
    game, ms = load_bundled(data["game"])
    return game, ms, automaton_from_dict(data, game, str(path))
