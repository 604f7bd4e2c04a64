"""Golden reproduction checks behind ``blackwell-kit reproduce``.

Each check returns a :class:`CheckResult` with a PASS/FAIL verdict, the
measured numbers and the runtime.  The random property suites draw from a
seeded generator so a run is reproducible for a given seed.
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import equilibria as eqm
from . import scoring
from .game_core import MixedProfile, PayoffStream, game_from_matrix, load_bundled, suffix_values
from .monitoring import product_monitoring

SQRT15 = math.sqrt(15)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict)
    expected_red: bool = False

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = " (expected red: known discrepancy in the reference values)" if self.expected_red and not self.passed else ""
        return f"{tag} {self.name}: {self.detail} [{self.seconds:.1f}s]{extra}"


def _near(vertices, target, tol) -> bool:
    return any(max(abs(float(a) - b) for a, b in zip(p, target)) <= tol for p in vertices)


# ---------------------------------------------------------------------------
# criteria with fixed fixtures
# ---------------------------------------------------------------------------

def check_pd_pure() -> CheckResult:
    game, ms = load_bundled("prisoners_dilemma")
    t0 = time.perf_counter()
    P = scoring.limit_set_pure(game, ms)
    dt = time.perf_counter() - t0
    want = [(0.25, 1.75), (1.75, 0.25), (0.0, 0.0)]
    verts = [tuple(float(c) for c in p) for p in P.vertices]
    hits = len(verts) == 3 and all(_near(verts, w, 1e-6) for w in want)
    upper = [p for p in verts if p[0] + p[1] > 1]
    edge = len(upper) == 2 and all(abs(p[0] + p[1] - 2) <= 1e-9 for p in upper)
    ok = hits and edge and dt < 5
    eq = scoring.limit_set_pure(game, ms, budget="exact")
    eq_verts = [tuple(float(c) for c in p) for p in eq.vertices]
    eq_ok = len(eq_verts) == 3 and all(_near(eq_verts, w, 1e-6) for w in want)
    return CheckResult("pd-pure", ok, f"vertices {_fmt_pts(verts)}; equality-budget variant "
                       f"{'matches' if eq_ok else 'differs'}", dt,
                       {"vertices": verts, "equality_budget_vertices": eq_verts}, expected_red=True)


def check_pd_mixed() -> CheckResult:
    game, ms = load_bundled("prisoners_dilemma")
    t0 = time.perf_counter()
    M = scoring.limit_set_mixed(game, ms)
    dt = time.perf_counter() - t0
    verts = [tuple(float(c) for c in p) for p in M.vertices]
    s = (7 - SQRT15) / 3
    den = 36 - 3 * SQRT15
    asym = ((98 - 14 * SQRT15) / den, (14 - 2 * SQRT15) / den)
    sym_ok = _near(verts, (s, s), 1e-3)
    asym_ok = _near(verts, asym, 1e-3) and _near(verts, asym[::-1], 1e-3)
    ok = sym_ok and asym_ok and dt < 60
    return CheckResult("pd-mixed", ok, f"symmetric sqrt15 vertex {'found' if sym_ok else 'missing'}, "
                       f"asymmetric {'found' if asym_ok else 'missing'}; vertices {_fmt_pts(verts)}", dt,
                       {"vertices": verts}, expected_red=True)


def check_example1_minmax() -> CheckResult:
    game, _ = load_bundled("example1")
    t0 = time.perf_counter()
    table = eqm.minmax_table(game)
    row = tuple(table[k].values[0] for k in ("standard", "mi", "pure", "nash_worst"))
    dt = time.perf_counter() - t0
    want = (Fraction(1, 2), Fraction(3, 4), Fraction(1), Fraction(1))
    ok = all(isinstance(x, Fraction) for x in row) and row == want
    return CheckResult("example1-minmax", ok, "player 1 (standard, MI, pure, NE) = ("
                       + ", ".join(str(x) for x in row) + ")", dt)


def check_example2() -> CheckResult:
    from .verification.automata import load_bundled_strategy
    from .verification.private import analyse, evaluate_private_automaton

    game, ms, aut = load_bundled_strategy("example2_private")
    t0 = time.perf_counter()
    an = analyse(game, ms, aut)
    rep79 = evaluate_private_automaton(game, ms, aut, [Fraction(79, 100)], analysis=an)
    rep78 = evaluate_private_automaton(game, ms, aut, [Fraction(78, 100)], analysis=an)
    dt = time.perf_counter() - t0
    half = (Fraction(1, 2), Fraction(1, 2))
    avgs = rep79.details["onpath_average_actions"]
    avg_ok = any(all(tuple(a) == half for a in pos) for pos in avgs)
    rewards = {r["reward"] for r in rep79.details["next_round_reward"]}
    cont_ok = Fraction(21, 18) in rewards
    ok = avg_ok and cont_ok and rep79.verdict and not rep78.verdict
    return CheckResult("example2", ok, f"average 1/2H+1/2D {'exact' if avg_ok else 'missing'}; "
                       f"continuation 21/18 {'exact' if cont_ok else 'missing'}; "
                       f"0.79 {'pass' if rep79.verdict else 'fail'}, 0.78 {'pass' if rep78.verdict else 'fail'}",
                       dt, expected_red=True)


def check_anti_folk() -> CheckResult:
    from .verification.checks import anti_folk_verdict

    t0 = time.perf_counter()
    pd, pd_ms = load_bundled("pd_private_ci")
    hd, hd_ms = load_bundled("hawk_dove")
    v1 = anti_folk_verdict(pd, pd_ms)
    v2 = anti_folk_verdict(hd, hd_ms)
    dt = time.perf_counter() - t0
    ok = (v1.fires and v1.message == "unique Blackwell outcome = (D,D) forever"
          and v2.premises["A_MI_equals_A"] is False)
    return CheckResult("anti-folk", ok, f"PD: {v1.message}; hawk-dove A_MI_equals_A = {v2.premises['A_MI_equals_A']}",
                       dt)


def check_construction() -> CheckResult:
    from .construction.simple import assemble_simple_profile
    from .game_core import DiscountGrid
    from .verification.spne import verify_spne_grid

    game, _ = load_bundled("prisoners_dilemma")
    t0 = time.perf_counter()
    prof = assemble_simple_profile(game, (Fraction(3, 2), Fraction(3, 2)))
    rep = verify_spne_grid(game, prof, DiscountGrid(prof.delta_low, 0.9999, 128), tol=1e-9)
    dt = time.perf_counter() - t0
    ok = rep.verdict and not rep.violations and dt < 30
    return CheckResult("construction", ok, f"delta_low {prof.delta_low:.6f}, {len(prof.to_automaton())} states, "
                       f"max gain {rep.max_violation:.2e} at 128 points", dt)


def check_binomial(seed: int = 0, count: int = 100) -> CheckResult:
    from .construction.binomial import design_binomial_test, nash_truncate

    rng = random.Random(seed)
    t0 = time.perf_counter()
    bad = []
    for _ in range(count):
        q = rng.uniform(0.05, 0.95)
        target = rng.uniform(0.05, 0.95)
        tol = 10 ** rng.uniform(-3, -2)
        spec = design_binomial_test(q, target, tol)
        full = spec.pass_probability(exact=spec.T <= 512)
        trunc = nash_truncate(spec, "NE").pass_probability(exact=spec.T <= 512)
        same = full == trunc if spec.T <= 512 else abs(full - trunc) <= 1e-12
        if abs(float(full) - target) > tol or not same:
            bad.append((q, target, tol))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 10
    return CheckResult("binomial", ok, f"{count - len(bad)}/{count} designs within tolerance, truncation exact", dt)


# ---------------------------------------------------------------------------
# property suites
# ---------------------------------------------------------------------------

def random_stream(rng: random.Random) -> PayoffStream:
    pre = [Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(rng.randint(0, 4))]
    cyc = [Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(rng.randint(1, 5))]
    return PayoffStream.scalar(pre, cyc)


def patience_suite(rng: random.Random, count: int = 500, samples: int = 20) -> tuple[int, int]:
    """Counterexamples to: bounds that hold at delta keep holding above it."""
    from .construction.sequences import patience_check

    bad = 0
    for _ in range(count):
        s = random_stream(rng)
        d = Fraction(rng.randint(1, 99), 100)
        vals = [v[0] for v in suffix_values(s, d)]
        lo = min(vals) - Fraction(rng.randint(0, 3), 10)
        hi = max(vals) + Fraction(rng.randint(0, 3), 10)
        if not patience_check(s, (lo, hi), d):
            bad += 1
            continue
        for _ in range(samples):
            d2 = d + (1 - d) * Fraction(rng.randint(1, 999), 1000)
            if not patience_check(s, (lo, hi), d2):
                bad += 1
                break
    return bad, count


def random_feasible_point(rng: random.Random, game) -> tuple:
    pts = [np.asarray([float(x) for x in game.g[a]]) for a in game.profiles()]
    w = np.asarray([rng.expovariate(1.0) for _ in pts])
    w /= w.sum()
    return tuple(float(x) for x in sum(wi * p for wi, p in zip(w, pts)))


def dg_suite(rng: random.Random, count: int = 200, max_delta_hat: float = 0.999) -> tuple[int, int]:
    """Target-path contract re-verified by the independent evaluator.

    Draws with a patience bound above ``max_delta_hat`` (targets very close
    to the boundary of F with a small tolerance) are redrawn, because their
    paths run to hundreds of thousands of rounds.
    """
    from .construction.sequences import build_target_sequence, delta_hat, verify_sequence

    games = [load_bundled("prisoners_dilemma")[0], load_bundled("example1")[0]]
    bad = 0
    for k in range(count):
        game = games[k % 2]
        while True:
            v = random_feasible_point(rng, game)
            eps = rng.uniform(0.1, 0.5)
            dh = delta_hat(game, v, eps)
            if dh <= max_delta_hat:
                break
        d = max(dh, rng.uniform(0.5, 0.99))
        d = min(d + rng.uniform(0, 1) * (1 - d) / 2, 1 - 1e-9)
        seq = build_target_sequence(game, v, eps, d)
        if not verify_sequence(game, seq, v, eps, d)["ok"]:
            bad += 1
    return bad, count


def random_automaton(rng: random.Random, game, states: int):
    from .verification.automata import PerfectAutomaton

    outs, nxt, dev = [], [], []
    for _ in range(states):
        acts = []
        for m in game.shape:
            raw = [rng.randint(0, 3) for _ in range(m)]
            if sum(raw) == 0:
                raw[rng.randrange(m)] = 1
            acts.append([Fraction(r, sum(raw)) for r in raw])
        outs.append(MixedProfile.from_probs(acts))
        nxt.append(rng.randrange(states))
        dev.append(tuple(rng.randrange(states) for _ in range(game.player_count)))
    return PerfectAutomaton(tuple(f"s{k}" for k in range(states)), tuple(outs), tuple(nxt), tuple(dev))


def automaton_corpus(rng: random.Random) -> list:
    """Bundled, constructed and random perfect-monitoring automata."""
    from .construction.simple import assemble_simple_profile
    from .verification.automata import grim_trigger, load_bundled_strategy, stationary

    pd, _ = load_bundled("prisoners_dilemma")
    hd, _ = load_bundled("hawk_dove")
    corpus = [("pd_grim", pd, load_bundled_strategy("pd_grim")[2]),
              ("grim(C,C|D,D)", pd, grim_trigger(pd, (0, 0), (1, 1))),
              ("hawk-dove mixed NE", hd, stationary(hd, eqm.enumerate_stage_nash(hd)[-1]))]
    prof = assemble_simple_profile(pd, (Fraction(3, 2), Fraction(3, 2)))
    corpus.append(("simple PD (1.5,1.5)", pd, prof.to_automaton()))
    for k in range(6):
        game = pd if k % 2 == 0 else hd
        corpus.append((f"random-{k}", game, random_automaton(rng, game, rng.randint(2, 6))))
    return corpus


def reboot_suite(rng: random.Random, corpus=None) -> tuple[float, bool, int]:
    """Largest gain gap under delta -> delta (1 - p) and the exact value identity."""
    from .construction.reboot import reboot_gain_gap, reboot_value_identity

    corpus = automaton_corpus(rng) if corpus is None else corpus
    gap, identity, checked = 0.0, True, 0
    for _, game, aut in corpus:
        for p in (Fraction(1, 10), Fraction(3, 10), Fraction(1, 2)):
            d = rng.uniform(0.5, 0.99)
            gap = max(gap, reboot_gain_gap(game, aut, p, d))
            d0 = Fraction(rng.randint(1, 40), 100)
            u_p, u = reboot_value_identity(game, aut, p, d0)
            identity = identity and u_p == u
            checked += 1
    return gap, identity, checked


def random_product_game(rng: random.Random, exact: bool = True):
    """Random two-player game with a product signal structure satisfying
    individual full rank (own-signal matrices redrawn until full row rank)."""
    m1, m2 = rng.randint(2, 3), rng.randint(2, 3)
    table = [[(rng.randint(-3, 4), rng.randint(-3, 4)) for _ in range(m2)] for _ in range(m1)]
    game = game_from_matrix((tuple(f"a{k}" for k in range(m1)), tuple(f"b{k}" for k in range(m2))), table,
                            exact=exact)
    factors, sets = [], []
    for i, m in enumerate((m1, m2)):
        ny = m + rng.randint(0, 1)
        while True:
            rows = []
            for _ in range(m):
                raw = [rng.randint(1, 9) for _ in range(ny)]
                rows.append([Fraction(r, sum(raw)) for r in raw])
            if np.linalg.matrix_rank(np.asarray(rows, dtype=float), tol=1e-9) == m:
                break
        factors.append(rows)
        sets.append(tuple(f"y{i}{k}" for k in range(ny)))
    return game, product_monitoring(game, sets, factors, exact=exact)


def garbling_suite(rng: random.Random, count: int = 100) -> tuple[float, float]:
    """Expectation drift and support spread of the switch probability.

    Each instance draws an own-signal matrix, a support, and transfers whose
    expectation is equal across the support (as myopic indifference and
    exact indifference force) and lower off it.
    """
    from .construction.ball import garble

    drift = spread = 0.0
    for _ in range(count):
        m = rng.randint(2, 4)
        ny = m + rng.randint(0, 2)
        fac = np.asarray([[rng.randint(1, 9) for _ in range(ny)] for _ in range(m)], dtype=float)
        fac /= fac.sum(axis=1, keepdims=True)
        supp = sorted(rng.sample(range(m), rng.randint(1, m)))
        level = rng.uniform(-2, 2)
        target = np.asarray([level if k in supp else level - rng.uniform(0.1, 1) for k in range(m)])
        x, *_ = np.linalg.lstsq(fac, target, rcond=None)
        gb = garble(x)
        drift = max(drift, float(np.abs(fac @ gb.expectation() - fac @ x).max()))
        probs = fac @ gb.switch
        spread = max(spread, float(probs[supp].max() - probs[supp].min()))
    return drift, spread


def series_suite(rng: random.Random, count: int = 1000) -> int:
    """Disagreements between the series test and termwise comparison."""
    from .verification.checks import series_identity_check

    bad = 0
    for _ in range(count):
        h = rng.randint(1, 8)
        a = [Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(h)]
        b = list(a)
        if rng.random() < 0.5:
            k = rng.randrange(h)
            b[k] += Fraction(rng.choice([-1, 1]) * rng.randint(1, 5), rng.randint(1, 7))
        samples = [Fraction(rng.randint(1, 999), 1000) for _ in range(h + 4)]
        while len(set(samples)) < h + 1:
            samples.append(Fraction(rng.randint(1, 999), 1000))
        if series_identity_check(a, b, samples) != (a == b):
            bad += 1
    return bad


def mi_score_suite(rng: random.Random, count: int = 50) -> float:
    """Largest ``|mi_score(-e_i) + mi_prd_minmax(i)|`` over random product games."""
    worst = 0.0
    for _ in range(count):
        game, ms = random_product_game(rng)
        mi = eqm.enumerate_mi_profiles(game)
        for i in range(2):
            lam = tuple(-1 if k == i else 0 for k in range(2))
            k = scoring.mi_score(game, ms, lam, mi=mi).score
            v = scoring.mi_prd_minmax(game, ms, i, mi).value
            worst = max(worst, abs(float(k) + float(v)))
    return worst


def check_properties(seed: int = 0) -> CheckResult:
    rng = random.Random(seed)
    t0 = time.perf_counter()
    parts, ok = [], True
    bad, n = patience_suite(rng)
    parts.append(f"patience {bad}/{n} counterexamples")
    ok &= bad == 0
    bad, n = dg_suite(rng)
    parts.append(f"DG {bad}/{n} failures")
    ok &= bad == 0
    gap, ident, n = reboot_suite(rng)
    parts.append(f"reboot gap {gap:.1e} over {n}, identity {'exact' if ident else 'broken'}")
    ok &= gap <= 1e-9 and ident
    drift, spread = garbling_suite(rng)
    parts.append(f"garbling drift {drift:.1e}, spread {spread:.1e}")
    ok &= drift <= 1e-9 and spread <= 1e-9
    bad = series_suite(rng)
    parts.append(f"series {bad}/1000 disagreements")
    ok &= bad == 0
    worst = mi_score_suite(rng)
    parts.append(f"MI score gap {worst:.1e}")
    ok &= worst <= 1e-7
    return CheckResult("properties", ok, "; ".join(parts), time.perf_counter() - t0)


def _fmt_pts(pts) -> str:
    return "[" + ", ".join("(" + ", ".join(f"{c:.6g}" for c in p) + ")" for p in pts) + "]"


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "pd-pure": check_pd_pure,
    "pd-mixed": check_pd_mixed,
    "example1-minmax": check_example1_minmax,
    "example2": check_example2,
    "anti-folk": check_anti_folk,
    "construction": check_construction,
    "properties": check_properties,
    "binomial": check_binomial,
}


def run_checks(only=None, seed: int = 0) -> list[CheckResult]:
    names = list(CHECKS) if not only else list(only)
    for n in names:
        if n not in CHECKS:
            raise KeyError(f"unknown check {n!r}; choose from {', '.join(CHECKS)}")
    out = []
    for n in names:
        fn = CHECKS[n]
        out.append(fn(seed=seed) if n in ("properties", "binomial") else fn())
    return out

