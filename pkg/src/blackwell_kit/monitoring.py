"""Monitoring structures and their identifiability properties.

A structure stores the joint kernel ``pi(y | a)`` as an array of shape
``game.shape + (|Y|,)``.  Public structures may declare a product signal
space ``Y = Y_1 x ... x Y_n`` (``public_product``); private structures always
have per-player signal sets and ``y = (y_1, ..., y_n)`` enumerates the joint
private observations in lexicographic order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .game_core import GameFormatError, MixedProfile, StageGame
from .rational import format_fraction, rank_exact, rank_float, to_fraction

KINDS = ("public", "public_product", "private")


@dataclass(frozen=True, eq=False)
class MonitoringStructure:
    """Signal technology of a repeated game.

    Parameters
    ----------
    kind : "public", "public_product" or "private".
    signals : labels of the joint signal space (tuples of per-player labels
        when ``signal_sets`` is given).
    kernel : float array ``pi[a_1, ..., a_n, y]``.
    exact_kernel : the same as Fractions, or ``None`` for float input.
    signal_sets : per-player signal labels for product and private kinds.
    factors : optional per-player factor kernels.  For ``public_product`` the
        factor of player i has shape ``(|A_i|, |Y_i|)``; for ``private`` it has
        shape ``game.shape + (|Y_i|,)``.
    """

    kind: str
    signals: tuple
    kernel: np.ndarray
    exact_kernel: np.ndarray | None = None
    signal_sets: tuple | None = None
    factors: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown monitoring kind {self.kind!r}")
        k = np.asarray(self.kernel, dtype=float)
        if k.shape[-1] != len(self.signals):
            raise ValueError("kernel width does not match the signal count")
        if np.any(k < 0):
            raise ValueError("negative signal probability")
        drift = np.abs(k.sum(axis=-1) - 1.0).max()
        if drift > 1e-12:
            raise ValueError(f"kernel rows do not sum to one (drift {drift:.3g})")
        object.__setattr__(self, "kernel", k)

    @property
    def action_shape(self) -> tuple[int, ...]:
        return self.kernel.shape[:-1]

    @property
    def signal_count(self) -> int:
        return len(self.signals)

    @property
    def exact(self) -> bool:
        return self.exact_kernel is not None

    def row(self, a: Sequence[int]):
        """Distribution over joint signals at pure profile ``a`` (exact if available)."""
        if self.exact_kernel is not None:
            return list(self.exact_kernel[tuple(a)])
        return list(self.kernel[tuple(a)])

    def signal_distribution(self, profile: MixedProfile):
        """``pi(. | alpha)`` for a mixed profile."""
        exact = self.exact and profile.exact
        acc = [Fraction(0) if exact else 0.0] * self.signal_count
        for a in itertools.product(*(act.support for act in profile.actions)):
            w = profile.probability(a)
            row = self.row(a) if exact else self.kernel[a]
            for y in range(self.signal_count):
                acc[y] += w * row[y]
        return acc

    def own_factor(self, i: int, exact: bool | None = None):
        """``pi_i(y_i | a_i)`` as a ``|A_i| x |Y_i|`` table (product structures).

        Read off the joint kernel with the other players at their first
        action, so it is exact whenever the kernel is.
        """
        if self.kind != "public_product":
            raise ValueError("own-action factors exist only for product structures")
        exact = self.exact if exact is None else exact and self.exact
        sizes = [len(s) for s in self.signal_sets]
        src = self.exact_kernel if exact else self.kernel
        n = len(self.action_shape)
        rows = []
        for k in range(self.action_shape[i]):
            a = [0] * n
            a[i] = k
            joint = np.asarray(src[tuple(a)], dtype=object).reshape(sizes)
            other = tuple(j for j in range(n) if j != i)
            rows.append(list(joint.sum(axis=other)) if other else list(joint))
        return rows if exact else np.asarray(rows, dtype=float)

    def player_marginal(self, i: int) -> np.ndarray:
        """Float array ``pi_i(y_i | a)`` of shape ``action_shape + (|Y_i|,)``."""
        if self.signal_sets is None:
            raise ValueError("structure has no per-player signal sets")
        sizes = [len(s) for s in self.signal_sets]
        k = self.kernel.reshape(self.action_shape + tuple(sizes))
        axes = tuple(len(self.action_shape) + j for j in range(len(sizes)) if j != i)
        return k.sum(axis=axes)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def _as_kernel(values, exact: bool):
    if exact:
        arr = np.vectorize(to_fraction, otypes=[object])(np.asarray(values, dtype=object))
        return arr.astype(float), arr
    return np.asarray(values, dtype=float), None


def public_monitoring(game: StageGame, signals: Sequence[str], table, exact: bool = True) -> MonitoringStructure:
    """Public monitoring from ``table[a] = distribution`` (dict keyed by profile tuples or array)."""
    shape = game.shape + (len(signals),)
    arr = np.empty(shape, dtype=object)
    for a in game.profiles():
        dist = table[a] if isinstance(table, dict) else np.asarray(table, dtype=object)[a]
        arr[a] = list(dist)
    k, ek = _as_kernel(arr, exact)
    return MonitoringStructure("public", tuple(signals), k, ek)


def product_monitoring(game: StageGame, signal_sets, factors, exact: bool = True) -> MonitoringStructure:
    """Public product structure ``pi(y|a) = prod_i pi_i(y_i | a_i)``.

    ``factors[i][a_i]`` is player i's signal distribution over ``signal_sets[i]``.
    """
    fac = [np.asarray([[to_fraction(p) if exact else float(p) for p in row] for row in f], dtype=object)
           for f in factors]
    sizes = [len(s) for s in signal_sets]
    arr = np.empty(game.shape + (int(np.prod(sizes)),), dtype=object)
    for a in game.profiles():
        dist = []
        for y in itertools.product(*(range(s) for s in sizes)):
            p = Fraction(1) if exact else 1.0
            for i, yi in enumerate(y):
                p = p * fac[i][a[i]][yi]
            dist.append(p)
        arr[a] = dist
    k, ek = _as_kernel(arr, exact)
    labels = tuple(itertools.product(*signal_sets))
    return MonitoringStructure("public_product", labels, k, ek, tuple(tuple(s) for s in signal_sets),
                               tuple(f.astype(float) for f in fac))


def private_ci_monitoring(game: StageGame, signal_sets, factors, exact: bool = True) -> MonitoringStructure:
    """Private monitoring with conditionally independent signals.

    ``factors[i]`` maps each pure profile ``a`` to player i's distribution over
    ``signal_sets[i]`` (dict keyed by profile tuples or an array).
    """
    sizes = [len(s) for s in signal_sets]
    fac = []
    for i, f in enumerate(factors):
        arr = np.empty(game.shape + (sizes[i],), dtype=object)
        for a in game.profiles():
            dist = f[a] if isinstance(f, dict) else np.asarray(f, dtype=object)[a]
            arr[a] = [to_fraction(p) if exact else float(p) for p in dist]
        fac.append(arr)
    joint = np.empty(game.shape + (int(np.prod(sizes)),), dtype=object)
    for a in game.profiles():
        dist = []
        for y in itertools.product(*(range(s) for s in sizes)):
            p = Fraction(1) if exact else 1.0
            for i, yi in enumerate(y):
                p = p * fac[i][a][yi]
            dist.append(p)
        joint[a] = dist
    k, ek = _as_kernel(joint, exact)
    labels = tuple(itertools.product(*signal_sets))
    return MonitoringStructure("private", labels, k, ek, tuple(tuple(s) for s in signal_sets),
                               tuple(f.astype(float) for f in fac))


def perfect_monitoring(game: StageGame) -> MonitoringStructure:
    """Public signals that reveal the action profile."""
    profiles = list(game.profiles())
    table = {a: [Fraction(int(a == b)) for b in profiles] for a in profiles}
    return public_monitoring(game, [game.profile_label(a) for a in profiles], table)


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def _profile_key(game: StageGame, key: str, where: str) -> tuple[int, ...]:
    parts = [p.strip() for p in key.split(",")]
    if len(parts) != game.player_count:
        raise GameFormatError(f"{where}: profile key {key!r} needs {game.player_count} labels")
    try:
        return tuple(game.action_index(i, p) for i, p in enumerate(parts))
    except KeyError as exc:
        raise GameFormatError(f"{where}: {exc.args[0]}") from exc


def _dist(values, size, where):
    if not isinstance(values, list) or len(values) != size:
        raise GameFormatError(f"{where}: expected a list of {size} probabilities")
    out, exact = [], True
    for k, v in enumerate(values):
        if isinstance(v, bool) or v is None:
            raise GameFormatError(f"{where}[{k}]: not a number")
        if isinstance(v, float):
            exact = False
        try:
            out.append(to_fraction(v))
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise GameFormatError(f"{where}[{k}]: cannot parse {v!r}") from exc
    if any(p < 0 for p in out):
        raise GameFormatError(f"{where}: negative probability")
    drift = abs(float(sum(out)) - 1.0)
    if drift > 1e-12:
        raise GameFormatError(f"{where}: probabilities sum to {float(sum(out))!r}")
    return out, exact


def monitoring_from_dict(game: StageGame, data: dict, source: str = "<dict>") -> MonitoringStructure:
    where = f"{source}: monitoring"
    if not isinstance(data, dict):
        raise GameFormatError(f"{where} must be an object")
    kind = data.get("kind")
    if kind not in KINDS:
        raise GameFormatError(f"{where}.kind must be one of {KINDS}")
    signals = data.get("signals")
    if kind == "public":
        if "factors" in data and "pi" not in data:
            raise GameFormatError(f"{where}: public kind needs 'pi'")
        if not isinstance(signals, list) or not signals:
            raise GameFormatError(f"{where}.signals must be a nonempty list")
        pi = data.get("pi")
        if not isinstance(pi, dict):
            raise GameFormatError(f"{where}.pi must map profile keys to distributions")
        table, exact = {}, True
        for key, dist in pi.items():
            a = _profile_key(game, key, f"{where}.pi")
            table[a], ex = _dist(dist, len(signals), f"{where}.pi[{key!r}]")
            exact = exact and ex
        missing = [game.profile_label(a) for a in game.profiles() if a not in table]
        if missing:
            raise GameFormatError(f"{where}.pi is missing profiles {missing}")
        if not exact:
            table = {a: [float(p) for p in d] for a, d in table.items()}
        return public_monitoring(game, [str(s) for s in signals], table, exact)
    if not isinstance(signals, list) or len(signals) != game.player_count or \
            not all(isinstance(s, list) and s for s in signals):
        raise GameFormatError(f"{where}.signals must list one signal set per player")
    factors = data.get("factors")
    if not isinstance(factors, list) or len(factors) != game.player_count:
        raise GameFormatError(f"{where}.factors must give one factor kernel per player")
    exact = True
    if kind == "public_product":
        fac = []
        for i, f in enumerate(factors):
            if not isinstance(f, dict):
                raise GameFormatError(f"{where}.factors[{i}] must map own actions to distributions")
            rows = []
            for k, label in enumerate(game.action_labels[i]):
                if label not in f:
                    raise GameFormatError(f"{where}.factors[{i}] lacks action {label!r}")
                d, ex = _dist(f[label], len(signals[i]), f"{where}.factors[{i}][{label!r}]")
                exact = exact and ex
                rows.append(d)
            fac.append(rows)
        return product_monitoring(game, signals, fac, exact)
    fac = []
    for i, f in enumerate(factors):
        if not isinstance(f, dict):
            raise GameFormatError(f"{where}.factors[{i}] must map profile keys to distributions")
        table = {}
        for key, dist in f.items():
            a = _profile_key(game, key, f"{where}.factors[{i}]")
            table[a], ex = _dist(dist, len(signals[i]), f"{where}.factors[{i}][{key!r}]")
            exact = exact and ex
        if len(table) != int(np.prod(game.shape)):
            raise GameFormatError(f"{where}.factors[{i}] must cover every profile")
        fac.append(table)
    return private_ci_monitoring(game, signals, fac, exact)


def monitoring_to_dict(ms: MonitoringStructure, game: StageGame | None = None) -> dict:
    def enc(p):
        return format_fraction(p) if isinstance(p, Fraction) else float(p)

    def key(a):
        if game is not None:
            return game.profile_label(a)
        return ",".join(str(k) for k in a)

    profiles = list(itertools.product(*(range(m) for m in ms.action_shape)))
    if ms.kind == "public":
        src = ms.exact_kernel if ms.exact else ms.kernel
        return {"kind": "public", "signals": list(ms.signals),
                "pi": {key(a): [enc(p) for p in src[a]] for a in profiles}}
    out = {"kind": ms.kind, "signals": [list(s) for s in ms.signal_sets]}
    if ms.kind == "public_product":
        facs = []
        for i, f in enumerate(ms.factors):
            labels = game.action_labels[i] if game is not None else [str(k) for k in range(f.shape[0])]
            facs.append({labels[k]: [enc(_maybe_exact(p, ms.exact)) for p in f[k]] for k in range(f.shape[0])})
        out["factors"] = facs
    else:
        out["factors"] = [{key(a): [enc(_maybe_exact(p, ms.exact)) for p in f[a]] for a in profiles}
                          for f in ms.factors]
    return out


def _maybe_exact(p, exact):
    return Fraction(p).limit_denominator(10 ** 12) if exact else p


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

@dataclass
class PropertyReport:
    product: bool
    conditional_independence: bool
    full_support: bool
    product_violation: float
    ci_violation: float
    min_probability: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _factorisation_violation(ms: MonitoringStructure, own_action_only: bool) -> float:
    """Largest ``|pi(y|a) - prod_i pi_i(y_i|a)|``; with ``own_action_only`` the
    marginals must also depend on the player's own action alone."""
    sizes = [len(s) for s in ms.signal_sets]
    shape = ms.action_shape
    joint = ms.kernel.reshape(shape + tuple(sizes))
    marg = [ms.player_marginal(i) for i in range(len(sizes))]
    worst = 0.0
    if own_action_only:
        for i, m in enumerate(marg):
            # marginal must not vary with the other players' actions
            moved = np.moveaxis(m, i, 0)
            ref = moved.reshape(shape[i], -1, sizes[i])
            worst = max(worst, float(np.abs(ref - ref[:, :1, :]).max()))
    prod = marg[0]
    n_act = len(shape)
    for m in marg[1:]:
        prod = prod[..., None] * m.reshape(m.shape[:n_act] + (1,) * (prod.ndim - n_act) + m.shape[n_act:])
    worst = max(worst, float(np.abs(prod - joint).max()))
    return worst


def check_properties(ms: MonitoringStructure) -> PropertyReport:
    """Product structure, conditional independence and full support."""
    min_p = float(ms.kernel.min())
    if ms.signal_sets is None:
        prod_v = ci_v = float("inf")
    else:
        prod_v = _factorisation_violation(ms, own_action_only=True)
        ci_v = _factorisation_violation(ms, own_action_only=False)
    tol = 1e-12
    return PropertyReport(product=prod_v <= tol and ms.kind != "private",
                          conditional_independence=ci_v <= tol,
                          full_support=min_p > 0.0,
                          product_violation=prod_v, ci_violation=ci_v, min_probability=min_p)


def _deviation_rows(ms: MonitoringStructure, i: int, profile: MixedProfile, exact: bool):
    rows = []
    for k in range(ms.action_shape[i]):
        acts = list(profile.actions)
        from .game_core import MixedAction

        acts[i] = MixedAction.pure(k, ms.action_shape[i], exact=exact)
        rows.append(ms.signal_distribution(MixedProfile(tuple(acts))))
    return rows


def _rank(rows, exact: bool) -> int:
    return rank_exact(rows) if exact else rank_float(np.array(rows, dtype=float))


def ifr_check(ms: MonitoringStructure, profile: MixedProfile) -> list[bool]:
    """Individual full rank of every player at ``profile``."""
    if ms.kind == "private":
        raise ValueError("individual full rank is defined for public monitoring")
    exact = ms.exact and profile.exact
    out = []
    for i in range(len(ms.action_shape)):
        rows = _deviation_rows(ms, i, profile, exact)
        out.append(_rank(rows, exact) == len(rows))
    return out


def pairwise_full_rank_check(ms: MonitoringStructure, profile: MixedProfile,
                             pairs: Sequence[tuple[int, int]] | None = None) -> dict:
    """Rank ``|A_i| + |A_j| - 1`` of the stacked deviation matrices, per pair."""
    if ms.kind == "private":
        raise ValueError("pairwise full rank is defined for public monitoring")
    n = len(ms.action_shape)
    pairs = list(itertools.combinations(range(n), 2)) if pairs is None else list(pairs)
    exact = ms.exact and profile.exact
    out = {}
    for i, j in pairs:
        if i == j:
            raise ValueError("pairwise full rank needs two distinct players")
        rows = _deviation_rows(ms, i, profile, exact) + _deviation_rows(ms, j, profile, exact)
        out[(i, j)] = _rank(rows, exact) == ms.action_shape[i] + ms.action_shape[j] - 1
    return out


@dataclass(frozen=True)
class TestPair:
    """A profile ``a_star`` and signal event ``y_star_set`` whose probability
    strictly drops under every unilateral deviation."""

    a_star: tuple[int, ...]
    y_star_set: tuple[int, ...]
    q_star: object
    rho: object

    __test__ = False  # not a pytest class

    def verify(self, ms: MonitoringStructure) -> bool:
        q = _event_prob(ms, self.a_star, self.y_star_set)
        if not (q == self.q_star and q < 1):
            return False
        gaps = _deviation_gaps(ms, self.a_star, self.y_star_set)
        return min(gaps) == self.rho and self.rho > 0


def _event_prob(ms, a, event):
    row = ms.row(a)
    return sum(row[y] for y in event)


def _deviation_gaps(ms, a, event):
    q = _event_prob(ms, a, event)
    gaps = []
    for i, m in enumerate(ms.action_shape):
        for k in range(m):
            if k == a[i]:
                continue
            b = list(a)
            b[i] = k
            gaps.append(q - _event_prob(ms, tuple(b), event))
    return gaps


def find_test_pair(ms: MonitoringStructure, diagnostics: dict | None = None) -> TestPair | None:
    """Search ``(a*, Y*)`` maximising the smallest deviation gap ``rho``.

    Exhaustive over all proper nonempty events when ``|Y| <= 16``; otherwise
    only singletons and their complements are scanned.  Ties in ``rho`` go to
    the lexicographically smallest ``(a*, Y*)``.  When nothing qualifies and a
    ``diagnostics`` dict is supplied it receives the best near miss.
    """
    if ms.kind == "private":
        raise ValueError("test pairs are defined for public monitoring")
    ny = ms.signal_count
    if ny <= 16:
        events = [e for size in range(1, ny) for e in itertools.combinations(range(ny), size)]
    else:
        singles = [(y,) for y in range(ny)]
        events = singles + [tuple(k for k in range(ny) if k != y) for y in range(ny)]
    best = None
    near = None
    for a in itertools.product(*(range(m) for m in ms.action_shape)):
        for event in events:
            q = _event_prob(ms, a, event)
            gaps = _deviation_gaps(ms, a, event)
            rho = min(gaps) if gaps else None
            if rho is None:
                continue
            if q < 1 and rho > 0:
                if best is None or rho > best.rho:
                    best = TestPair(a, event, q, rho)
            elif near is None or rho > near[2]:
                near = (a, event, rho, q)
    if best is None and diagnostics is not None and near is not None:
        diagnostics.update({"a": near[0], "event": near[1], "rho": near[2], "q": near[3]})
    return best
