"""Stage games, mixed profiles, payoff streams and discounted evaluation.

Payoffs are kept twice: as exact ``Fraction`` objects whenever the input was
integral or written as ``"p/q"`` strings, and as a float64 tensor used by the
linear programs.  The exact copy drives everything that is tie-sensitive
(support enumeration, myopic-indifference tests, golden values).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .rational import format_fraction, to_fraction


class GameFormatError(ValueError):
    """Raised when a game file cannot be parsed; the message names the field."""


# ---------------------------------------------------------------------------
# stage games
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StageGame:
    """A finite normal-form game.

    Parameters
    ----------
    action_labels : per-player tuples of action names.
    payoffs : object array of shape ``(|A_1|, ..., |A_n|, n)``.  Entries are
        Fractions when ``exact`` is true and floats otherwise.
    """

    action_labels: tuple[tuple[str, ...], ...]
    payoffs: np.ndarray
    exact: bool = True
    name: str = ""
    g: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        labels = tuple(tuple(str(a) for a in acts) for acts in self.action_labels)
        object.__setattr__(self, "action_labels", labels)
        n = len(labels)
        if n < 2:
            raise ValueError("a stage game needs at least two players")
        shape = tuple(len(a) for a in labels)
        if min(shape) < 1:
            raise ValueError("every player needs at least one action")
        pay = np.asarray(self.payoffs, dtype=object)
        if pay.shape != shape + (n,):
            raise ValueError(f"payoff tensor has shape {pay.shape}, expected {shape + (n,)}")
        if self.exact:
            pay = np.vectorize(to_fraction, otypes=[object])(pay)
        gf = pay.astype(float)
        if not np.all(np.isfinite(gf)):
            raise ValueError("payoffs must be finite")
        object.__setattr__(self, "payoffs", pay)
        object.__setattr__(self, "g", gf)

    # basic shape information -------------------------------------------------
    @property
    def player_count(self) -> int:
        return len(self.action_labels)

    n = player_count

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.action_labels)

    def profiles(self) -> Iterator[tuple[int, ...]]:
        """All pure profiles in lexicographic order."""
        return itertools.product(*(range(k) for k in self.shape))

    def payoff(self, a: Sequence[int]) -> tuple:
        """Reward vector g(a), exact when the game is exact."""
        vals = self.payoffs[tuple(a)]
        return tuple(vals) if self.exact else tuple(float(v) for v in vals)

    def action_index(self, i: int, label: str) -> int:
        try:
            return self.action_labels[i].index(label)
        except ValueError as exc:
            raise KeyError(f"player {i} has no action {label!r}") from exc

    def profile_label(self, a: Sequence[int]) -> str:
        return ",".join(self.action_labels[i][k] for i, k in enumerate(a))

    def with_payoffs(self, payoffs, exact: bool | None = None) -> "StageGame":
        return StageGame(self.action_labels, payoffs, self.exact if exact is None else exact, self.name)


def game_from_matrix(labels, table, exact: bool = True, name: str = "") -> StageGame:
    """Build a game from nested lists ``table[a_1]...[a_n] = [g_1, ..., g_n]``."""
    shape = tuple(len(a) for a in labels) + (len(labels),)
    arr = np.empty(shape, dtype=object)
    for idx in itertools.product(*(range(k) for k in shape[:-1])):
        cell = table
        for k in idx:
            cell = cell[k]
        if len(cell) != len(labels):
            raise ValueError(f"cell {idx} has {len(cell)} rewards, expected {len(labels)}")
        for i, v in enumerate(cell):
            arr[idx + (i,)] = to_fraction(v) if exact else float(v)
    return StageGame(tuple(tuple(a) for a in labels), arr, exact, name)


# ---------------------------------------------------------------------------
# mixed actions and profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixedAction:
    """A probability vector over one player's actions."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(self.probs)
        if not probs:
            raise ValueError("empty mixed action")
        if any(p < 0 for p in probs):
            raise ValueError(f"negative probability in {probs}")
        total = sum(probs)
        if abs(float(total) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {float(total)!r}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def pure(cls, k: int, size: int, exact: bool = True) -> "MixedAction":
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        return cls(tuple(one if j == k else zero for j in range(size)))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(j for j, p in enumerate(self.probs) if p > 0)

    @property
    def exact(self) -> bool:
        return all(isinstance(p, (Fraction, int)) for p in self.probs)

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, k):
        return self.probs[k]

    def as_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])


@dataclass(frozen=True)
class MixedProfile:
    """One mixed action per player."""

    actions: tuple[MixedAction, ...]

    def __post_init__(self):
        acts = tuple(a if isinstance(a, MixedAction) else MixedAction(tuple(a)) for a in self.actions)
        object.__setattr__(self, "actions", acts)

    @classmethod
    def pure(cls, game: StageGame, a: Sequence[int]) -> "MixedProfile":
        return cls(tuple(MixedAction.pure(k, m) for k, m in zip(a, game.shape)))

    @classmethod
    def from_probs(cls, probs) -> "MixedProfile":
        return cls(tuple(MixedAction(tuple(p)) for p in probs))

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, i) -> MixedAction:
        return self.actions[i]

    @property
    def support(self) -> "SupportProfile":
        return SupportProfile(tuple(a.support for a in self.actions))

    @property
    def exact(self) -> bool:
        return all(a.exact for a in self.actions)

    @property
    def is_pure(self) -> bool:
        return all(len(a.support) == 1 for a in self.actions)

    def pure_profile(self) -> tuple[int, ...] | None:
        return tuple(a.support[0] for a in self.actions) if self.is_pure else None

    def replace(self, i: int, action: MixedAction) -> "MixedProfile":
        acts = list(self.actions)
        acts[i] = action
        return MixedProfile(tuple(acts))

    def probability(self, a: Sequence[int]):
        p = Fraction(1) if self.exact else 1.0
        for act, k in zip(self.actions, a):
            p = p * act.probs[k]
        return p

    def as_floats(self) -> list[np.ndarray]:
        return [a.as_array() for a in self.actions]

    def key(self) -> tuple:
        return tuple(tuple(a.probs) for a in self.actions)

    def describe(self, game: StageGame) -> str:
        parts = []
        for i, act in enumerate(self.actions):
            terms = [f"{format_fraction(p) if isinstance(p, Fraction) else p}{game.action_labels[i][k]}"
                     if p != 1 else game.action_labels[i][k]
                     for k, p in enumerate(act.probs) if p > 0]
            parts.append("+".join(terms))
        return "(" + ", ".join(parts) + ")"


@dataclass(frozen=True)
class SupportProfile:
    """Per-player nonempty sets of action indices."""

    sets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        sets = tuple(tuple(sorted(set(s))) for s in self.sets)
        if any(len(s) == 0 for s in sets):
            raise ValueError("supports must be nonempty")
        object.__setattr__(self, "sets", sets)

    def validate(self, game: StageGame) -> None:
        if len(self.sets) != game.player_count:
            raise ValueError("support profile length differs from player count")
        for s, m in zip(self.sets, game.shape):
            if s[0] < 0 or s[-1] >= m:
                raise ValueError(f"support {s} out of range for {m} actions")

    def __getitem__(self, i):
        return self.sets[i]

    def size(self) -> int:
        return sum(len(s) for s in self.sets)


def _check_profile(game: StageGame, profile: MixedProfile) -> None:
    if len(profile) != game.player_count:
        raise ValueError(f"profile has {len(profile)} players, game has {game.player_count}")
    for i, (act, m) in enumerate(zip(profile.actions, game.shape)):
        if len(act) != m:
            raise ValueError(f"player {i} mixes over {len(act)} actions, game has {m}")


def expected_reward(game: StageGame, profile: MixedProfile) -> tuple:
    """Expected reward vector g(alpha) = sum_a prod_i alpha_i(a_i) g(a)."""
    _check_profile(game, profile)
    if game.exact and profile.exact:
        total = [Fraction(0)] * game.player_count
        for a in itertools.product(*(act.support for act in profile.actions)):
            w = profile.probability(a)
            cell = game.payoffs[a]
            for i in range(game.player_count):
                total[i] += w * cell[i]
        return tuple(total)
    t = game.g
    for act in profile.actions:
        t = np.tensordot(act.as_array(), t, axes=(0, 0))
    return tuple(float(x) for x in t)


def deviation_reward(game: StageGame, i: int, a_i: int, profile: MixedProfile):
    """Reward g_i(a_i, alpha_{-i}) of player ``i`` switching to pure ``a_i``."""
    _check_profile(game, profile)
    if not 0 <= i < game.player_count:
        raise IndexError(f"player {i} out of range")
    if not 0 <= a_i < game.shape[i]:
        raise IndexError(f"action {a_i} out of range for player {i}")
    dev = profile.replace(i, MixedAction.pure(a_i, game.shape[i], exact=profile.exact))
    return expected_reward(game, dev)[i]


def deviation_rewards(game: StageGame, i: int, profile: MixedProfile) -> list:
    """``[g_i(a_i, alpha_{-i}) for a_i in A_i]``."""
    return [deviation_reward(game, i, k, profile) for k in range(game.shape[i])]


# ---------------------------------------------------------------------------
# streams and discounting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PayoffStream:
    """Eventually periodic stream: ``preamble`` once, then ``cycle`` forever."""

    preamble: tuple
    cycle: tuple

    def __post_init__(self):
        pre = tuple(tuple(v) if np.ndim(v) else (v,) for v in self.preamble)
        cyc = tuple(tuple(v) if np.ndim(v) else (v,) for v in self.cycle)
        if not cyc:
            raise ValueError("the cycle of a payoff stream must be nonempty")
        dims = {len(v) for v in pre + cyc}
        if len(dims) != 1:
            raise ValueError("all reward vectors in a stream must have the same length")
        object.__setattr__(self, "preamble", pre)
        object.__setattr__(self, "cycle", cyc)

    @classmethod
    def scalar(cls, preamble, cycle) -> "PayoffStream":
        return cls(tuple((x,) for x in preamble), tuple((x,) for x in cycle))

    @property
    def dim(self) -> int:
        return len(self.cycle[0])

    def __getitem__(self, t: int) -> tuple:
        if t < len(self.preamble):
            return self.preamble[t]
        return self.cycle[(t - len(self.preamble)) % len(self.cycle)]

    def truncated_sum(self, delta, horizon: int) -> tuple:
        """``(1-delta) * sum_{t<horizon} delta^t g_t``."""
        acc = [0] * self.dim
        w = 1
        for t in range(horizon):
            acc = [s + w * x for s, x in zip(acc, self[t])]
            w = w * delta
        return tuple((1 - delta) * s for s in acc)


def _check_delta(delta) -> None:
    if not (0 <= delta < 1):
        raise ValueError(f"discount factor must lie in [0, 1), got {delta!r}")


def cycle_value(cycle: Sequence[Sequence], delta) -> tuple:
    """Average discounted value of a cycle repeated forever, started at its head."""
    _check_delta(delta)
    acc = [0] * len(cycle[0])
    w = 1
    for vec in cycle:
        acc = [s + w * x for s, x in zip(acc, vec)]
        w = w * delta
    scale = (1 - delta) / (1 - w)  # w == delta**length
    return tuple(scale * s for s in acc)


def discounted_value(stream: PayoffStream, delta) -> tuple:
    """Normalised discounted value ``(1-delta) sum_t delta^t g_t`` in closed form.

    Exact when ``delta`` and the stream entries are Fractions.
    """
    _check_delta(delta)
    tail = cycle_value(stream.cycle, delta)
    acc = list(tail)
    for vec in reversed(stream.preamble):
        acc = [(1 - delta) * x + delta * s for x, s in zip(vec, acc)]
    return tuple(acc)


def suffix_values(stream: PayoffStream, delta) -> list[tuple]:
    """Continuation values at every distinct position (preamble then cycle)."""
    _check_delta(delta)
    length = len(stream.cycle)
    cyc_vals = [None] * length
    cyc_vals[0] = cycle_value(stream.cycle, delta)
    # walk the cycle backwards from its head: V_k = (1-d) c_k + d V_{k+1}
    nxt = cyc_vals[0]
    for k in range(length - 1, 0, -1):
        nxt = tuple((1 - delta) * x + delta * s for x, s in zip(stream.cycle[k], nxt))
        cyc_vals[k] = nxt
    pre_vals = []
    nxt = cyc_vals[0]
    for vec in reversed(stream.preamble):
        nxt = tuple((1 - delta) * x + delta * s for x, s in zip(vec, nxt))
        pre_vals.append(nxt)
    return pre_vals[::-1] + cyc_vals


@dataclass(frozen=True)
class DiscountGrid:
    """Evenly spaced discount factors ``low = d_0 < ... < d_{count-1} = high``."""

    low: float
    high: float
    count: int

    def __post_init__(self):
        if not (0 <= self.low < self.high < 1):
            raise ValueError(f"need 0 <= low < high < 1, got {self.low}, {self.high}")
        if self.count < 2:
            raise ValueError("a discount grid needs at least two points")

    def points(self) -> np.ndarray:
        return np.linspace(self.low, self.high, self.count)

    @classmethod
    def parse(cls, text: str) -> "DiscountGrid":
        try:
            lo, hi, k = text.split(":")
            return cls(float(lo), float(hi), int(k))
        except ValueError as exc:
            raise ValueError(f"bad discount grid {text!r}; expected LO:HI:K") from exc


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def _parse_number(value, where: str, exact_flag: list):
    if isinstance(value, bool) or value is None:
        raise GameFormatError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, float):
        if not math.isfinite(value):
            raise GameFormatError(f"{where}: non-finite number")
        exact_flag[0] = False
        return value
    try:
        return to_fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise GameFormatError(f"{where}: cannot parse {value!r} as a rational") from exc


def game_from_dict(data: dict, source: str = "<dict>"):
    """Parse the JSON document structure; returns ``(game, monitoring_or_None)``."""
    if not isinstance(data, dict):
        raise GameFormatError(f"{source}: top level must be an object")
    for key in ("players", "actions", "payoffs"):
        if key not in data:
            raise GameFormatError(f"{source}: missing field '{key}'")
    n = data["players"]
    if not isinstance(n, int) or n < 2:
        raise GameFormatError(f"{source}: field 'players' must be an integer >= 2")
    actions = data["actions"]
    if not isinstance(actions, list) or len(actions) != n:
        raise GameFormatError(f"{source}: field 'actions' must list {n} action-label lists")
    for i, acts in enumerate(actions):
        if not isinstance(acts, list) or not acts:
            raise GameFormatError(f"{source}: actions[{i}] must be a nonempty list")
        if len(set(map(str, acts))) != len(acts):
            raise GameFormatError(f"{source}: actions[{i}] has duplicate labels")
    shape = tuple(len(a) for a in actions)
    exact_flag = [True]
    arr = np.empty(shape + (n,), dtype=object)

    def walk(node, idx):
        where = "payoffs" + "".join(f"[{k}]" for k in idx)
        depth = len(idx)
        if depth == n:
            if not isinstance(node, list) or len(node) != n:
                raise GameFormatError(f"{source}: {where} must be a list of {n} rewards")
            for i, v in enumerate(node):
                arr[idx + (i,)] = _parse_number(v, f"{source}: {where}[{i}]", exact_flag)
            return
        if not isinstance(node, list) or len(node) != shape[depth]:
            raise GameFormatError(f"{source}: {where} must have {shape[depth]} entries")
        for k, child in enumerate(node):
            walk(child, idx + (k,))

    walk(data["payoffs"], ())
    exact = exact_flag[0]
    if not exact:
        arr = np.vectorize(float, otypes=[object])(arr)
    game = StageGame(tuple(tuple(map(str, a)) for a in actions), arr, exact, str(data.get("name", "")))
    monitoring = None
    if data.get("monitoring") is not None:
        from .monitoring import monitoring_from_dict

        monitoring = monitoring_from_dict(game, data["monitoring"], source)
    return game, monitoring


def load_game(path):
    """Read a game file; returns ``(StageGame, MonitoringStructure | None)``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GameFormatError(f"{path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return game_from_dict(data, str(path))


def _encode_number(v):
    if isinstance(v, Fraction):
        return format_fraction(v)
    return float(v)


def game_to_dict(game: StageGame, monitoring=None) -> dict:
    def nest(idx):
        if len(idx) == game.player_count:
            return [_encode_number(v) for v in game.payoffs[idx]]
        return [nest(idx + (k,)) for k in range(game.shape[len(idx)])]

    out = {"players": game.player_count, "actions": [list(a) for a in game.action_labels],
           "payoffs": nest(())}
    if game.name:
        out["name"] = game.name
    if monitoring is not None:
        from .monitoring import monitoring_to_dict

        out["monitoring"] = monitoring_to_dict(monitoring, game)
    return out


def save_game(path, game: StageGame, monitoring=None) -> None:
    Path(path).write_text(json.dumps(game_to_dict(game, monitoring), indent=1) + "\n")


def bundled_game_path(name: str) -> Path:
    """Path of a game shipped in ``blackwell_kit/data/games``."""
    base = Path(__file__).resolve().parent / "data" / "games"
    candidate = base / (name if name.endswith(".json") else name + ".json")
    if not candidate.exists():
        raise FileNotFoundError(f"no bundled game called {name!r}")
    return candidate


def load_bundled(name: str):
    return load_game(bundled_game_path(name))
