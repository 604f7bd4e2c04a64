"""Command-line front end.

    blackwell-kit analyze GAME
    blackwell-kit limit-sets GAME
    blackwell-kit build-eq GAME --target V1,V2 [--delta D] [--reboot P]
    blackwell-kit verify STRATEGY [GAME]
    blackwell-kit reproduce [--only NAME ...]

``GAME`` is a JSON file or the name of a bundled game.  Reports are printed
and written as JSON under ``--out``.  Exit codes: 0 pass, 2 verification
failure, 3 input error, 4 internal invariant breach.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import settings

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3, 4
REBOOT_POINTS = 8


class InputError(Exception):
    """Bad user input; maps to exit code 3."""


# ---------------------------------------------------------------------------
# deterministic JSON
# ---------------------------------------------------------------------------

def _plain(obj):
    """Convert numbers and containers into JSON-ready values (Fractions as "p/q")."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Fraction):
        return str(obj.numerator) if obj.denominator == 1 else f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [_plain(x) for x in obj]
    return str(obj)


def _emit(obj, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return json.dumps(str(obj))
        return format(obj, ".17g")
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [f"{inner}{json.dumps(k)}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(x, (dict, list)) for x in obj):
            return "[" + ", ".join(_emit(x, indent, level + 1) for x in obj) + "]"
        return "[\n" + ",\n".join(inner + _emit(x, indent, level + 1) for x in obj) + "\n" + pad + "]"
    return json.dumps(obj)


def dumps(obj, indent: int = 1) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _emit(_plain(obj), indent, 0) + "\n"


def _write(out: Path, name: str, obj) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(dumps(obj))
    return path


# ---------------------------------------------------------------------------
# configuration and inputs
# ---------------------------------------------------------------------------

@dataclass
class CliConfig:
    command: str
    game: str | None
    out: Path
    tol: float | None
    directions: int
    delta_grid: object
    seed: int


def _load_game(spec: str):
    from .game_core import GameFormatError, bundled_game_path, load_game

    path = Path(spec)
    if not path.exists():
        try:
            path = bundled_game_path(spec)
        except FileNotFoundError:
            raise InputError(f"{spec}: no such file or bundled game") from None
    try:
        return load_game(path)
    except GameFormatError as exc:
        raise InputError(str(exc)) from None


def _parse_vector(text: str) -> tuple:
    try:
        return tuple(Fraction(x.strip()) for x in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"bad vector {text!r}; expected comma-separated numbers such as 3/2,3/2") from None


def _parse_grid(text: str | None):
    from .game_core import DiscountGrid

    if text is None:
        return None
    try:
        return DiscountGrid.parse(text)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return f"{float(x):.6g}"


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_analyze(cfg: CliConfig) -> int:
    from . import equilibria as eqm

    game, ms = _load_game(cfg.game)
    table = eqm.minmax_table(game)
    mi = eqm.enumerate_mi_profiles(game)
    nash = eqm.enumerate_stage_nash(game)
    notions = ("standard", "mi", "pure", "nash_worst")
    lines = [f"game {game.name or cfg.game}: {game.player_count} players, actions "
             + " x ".join(str(m) for m in game.shape)]
    lines.append("minmax    " + "  ".join(f"{n:>10}" for n in notions))
    for i in range(game.player_count):
        lines.append(f"player {i + 1}  " + "  ".join(f"{_fmt(table[n].values[i]):>10}" for n in notions))
    kind = "finite" if mi.finite else "with continuum cells"
    lines.append(f"A^MI: {len(mi.members)} listed profiles ({kind}, {sum(1 for m in mi.members if not m.profile.is_pure)} mixed)")
    for m in mi.members[:12]:
        lines.append(f"  {m.profile.describe(game)}")
    if len(mi.members) > 12:
        lines.append(f"  ... {len(mi.members) - 12} more")
    lines.append(f"stage Nash equilibria: {len(nash)}")
    for p in nash:
        lines.append(f"  {p.describe(game)}")
    print("\n".join(lines))
    report = {
        "game": game.name or cfg.game,
        "minmax": {n: {"values": list(table[n].values), "exact": table[n].exact,
                       "witnesses": [w.describe(game) if w is not None else None for w in table[n].witnesses]}
                   for n in notions},
        "a_mi": {"finite": mi.finite, "complete": mi.complete,
                 "profiles": [m.profile.describe(game) for m in mi.members],
                 "cells": len(mi.cells)},
        "stage_nash": [p.describe(game) for p in nash],
        "monitoring": None if ms is None else ms.kind,
    }
    _write(cfg.out, "analyze.json", report)
    return EXIT_PASS


# ---------------------------------------------------------------------------
# limit-sets
# ---------------------------------------------------------------------------

COLOURS = {"F": "#999999", "F_star": "#333333", "F_MI_pi": "#2a9d2a", "pure": "#1f4fd1", "mixed": "#d12f1f"}


def _svg(polys: dict, title: str) -> str:
    """Static overlay of two-dimensional polygons with labelled vertices."""
    pts = [np.asarray(p.float_vertices()) for p in polys.values() if p is not None and not p.empty]
    allp = np.vstack(pts) if pts else np.zeros((1, 2))
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    lo, hi = lo - 0.08 * span, hi + 0.08 * span
    W = H = 520
    m = 50

    def xy(p):
        x = m + (p[0] - lo[0]) / (hi[0] - lo[0]) * (W - 2 * m)
        y = H - m - (p[1] - lo[1]) / (hi[1] - lo[1]) * (H - 2 * m)
        return x, y

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>']
    x0, y0 = xy(lo)
    x1, y1 = xy(hi)
    out.append(f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x1:.1f}" y2="{y0:.1f}" stroke="black"/>')
    out.append(f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x0:.1f}" y2="{y1:.1f}" stroke="black"/>')
    for k in range(5):
        t = lo + (hi - lo) * k / 4
        xa, _ = xy((t[0], lo[1]))
        _, ya = xy((lo[0], t[1]))
        out.append(f'<text x="{xa:.1f}" y="{y0 + 16:.1f}" text-anchor="middle" font-size="10" '
                   f'font-family="sans-serif">{t[0]:.3g}</text>')
        out.append(f'<text x="{x0 - 6:.1f}" y="{ya + 3:.1f}" text-anchor="end" font-size="10" '
                   f'font-family="sans-serif">{t[1]:.3g}</text>')
    legend_y = 44
    for name, poly in polys.items():
        colour = COLOURS.get(name, "black")
        if poly is None or poly.empty:
            out.append(f'<text x="{W - m:.1f}" y="{legend_y}" text-anchor="end" font-size="11" '
                       f'font-family="sans-serif" fill="{colour}">{name}: empty set</text>')
            legend_y += 14
            continue
        verts = poly.float_vertices()
        path = " ".join(f"{a:.2f},{b:.2f}" for a, b in (xy(p) for p in verts))
        dash = ' stroke-dasharray="5,3"' if name in ("F", "F_star") else ""
        fill = "none" if name in ("F", "F_star") else colour
        out.append(f'<polygon points="{path}" fill="{fill}" fill-opacity="0.15" stroke="{colour}" '
                   f'stroke-width="1.5"{dash}/>')
        if name in ("pure", "mixed", "F_MI_pi"):
            for p in verts:
                a, b = xy(p)
                out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{colour}"/>')
                out.append(f'<text x="{a + 4:.2f}" y="{b - 4:.2f}" font-size="9" font-family="sans-serif" '
                           f'fill="{colour}">({p[0]:.4g}, {p[1]:.4g})</text>')
        out.append(f'<text x="{W - m:.1f}" y="{legend_y}" text-anchor="end" font-size="11" '
                   f'font-family="sans-serif" fill="{colour}">{name}</text>')
        legend_y += 14
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_limit_sets(cfg: CliConfig, skip_mixed: bool = False, budget: str = "inequality") -> int:
    from . import scoring
    from .geometry import feasible_set

    game, ms = _load_game(cfg.game)
    if ms is None or ms.kind == "private":
        raise InputError("limit-sets needs a game file with public monitoring")
    if game.player_count != 2:
        raise InputError("limit-sets draws two-player games only")
    polys = {"F": feasible_set(game)}
    bounded = scoring.bounded_sets(game, ms)
    polys["F_star"] = bounded.f_star
    if bounded.f_mi_pi is not None:
        polys["F_MI_pi"] = bounded.f_mi_pi
    polys["pure"] = scoring.limit_set_pure(game, ms, directions=cfg.directions, budget=budget)
    if not skip_mixed:
        polys["mixed"] = scoring.limit_set_mixed(game, ms, directions=cfg.directions, budget=budget)
    cfg.out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name, poly in polys.items():
        poly.to_csv(cfg.out / f"{name}.csv")
        summary[name] = {"empty": poly.empty, "vertices": [list(p) for p in poly.vertices]}
        verts = ", ".join("(" + ", ".join(_fmt(c) for c in p) + ")" for p in poly.vertices) or "empty"
        print(f"{name}: {verts}")
    (cfg.out / "limit_sets.svg").write_text(_svg(polys, f"limit payoff sets: {game.name or cfg.game}"))
    _write(cfg.out, "limit_sets.json", {"game": game.name or cfg.game, "budget": budget,
                                        "directions": cfg.directions, "sets": summary})
    return EXIT_PASS


# ---------------------------------------------------------------------------
# build-eq
# ---------------------------------------------------------------------------

def cmd_build_eq(cfg: CliConfig, target: str, delta: float | None, eps: str | None, reboot: float | None) -> int:
    from .construction import reboot as rb
    from .construction.simple import assemble_simple_profile
    from .game_core import DiscountGrid
    from .verification.spne import compile_automaton, state_values, verify_spne_grid

    game, _ = _load_game(cfg.game)
    v = _parse_vector(target)
    if len(v) != game.player_count:
        raise InputError(f"target has {len(v)} coordinates, the game has {game.player_count} players")
    prof = assemble_simple_profile(game, v, eps=None if eps is None else Fraction(eps), delta=delta)
    grid = cfg.delta_grid or DiscountGrid(prof.delta_low, max(0.9999, prof.delta_low + 1e-6), 128)
    tol = settings.tol if cfg.tol is None else cfg.tol
    report = verify_spne_grid(game, prof, grid, tol=tol)
    print(f"simple profile: N = {prof.constants.N}, delta_low = {prof.delta_low:.9g}, "
          f"{len(prof.to_automaton())} states")
    print(report.text())
    strategy = prof.export()
    strategy["game"] = game.name or cfg.game
    _write(cfg.out, "strategy.json", strategy)
    result = {"verification": report.to_dict()}
    ok = report.verdict
    if reboot is not None:
        aut = prof.to_automaton()
        wrapped = rb.reboot_transform(aut, reboot)
        pts = [float(d) for d in grid.points()] if hasattr(grid, "points") else list(grid)
        # the identity is checked at up to REBOOT_POINTS grid points, both ends included
        pts = [pts[k] for k in sorted(set(np.linspace(0, len(pts) - 1, REBOOT_POINTS).round().astype(int)))]
        gap = max(rb.reboot_gain_gap(game, aut, reboot, d) for d in pts)
        c0, c1 = compile_automaton(game, aut), compile_automaton(game, wrapped)
        d0 = pts[0] * (1 - reboot)
        vgap = float(np.abs(state_values(c1, d0 / (1 - reboot))[wrapped.initial]
                            - state_values(c0, d0)[aut.initial]).max())
        equiv = {"p": reboot, "points": pts, "max_gain_gap": gap, "value_gap": vgap, "delta0": d0,
                 "verdict": "pass" if gap <= 1e-9 and vgap <= 1e-9 else "fail"}
        print(f"reboot p = {reboot} at {len(pts)} discount factors: unnormalised gain gap {gap:.3e}, value gap {vgap:.3e} -> {equiv['verdict'].upper()}")
        reb = {"automaton": wrapped.to_dict(game), "construction": "simple+reboot", "game": game.name or cfg.game,
               "reboot": reboot}
        _write(cfg.out, "strategy_reboot.json", reb)
        result["reboot"] = equiv
        ok = ok and equiv["verdict"] == "pass"
    _write(cfg.out, "report.json", result)
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(cfg: CliConfig, strategy: str, game_spec: str | None) -> int:
    from .game_core import DiscountGrid, GameFormatError
    from .verification.automata import (PerfectAutomaton, PrivateAutomaton, PublicAutomaton, automaton_from_dict,
                                        bundled_strategy_path)
    from .verification.checks import classify_ppe_candidate, verify_mi_everywhere
    from .verification.private import (evaluate_private_automaton, exact_initial_values, monte_carlo_values,
                                       private_threshold)
    from .verification.spne import verify_spne_grid

    path = Path(strategy)
    if not path.exists():
        try:
            path = bundled_strategy_path(strategy)
        except GameFormatError:
            raise InputError(f"{strategy}: no such file or bundled strategy") from None
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    spec = game_spec or (data.get("game") if isinstance(data, dict) else None)
    if spec is None:
        raise InputError("the strategy names no game; pass GAME explicitly")
    game, ms = _load_game(spec)
    try:
        aut = automaton_from_dict(data, game, str(path))
    except GameFormatError as exc:
        raise InputError(str(exc)) from None
    tol = settings.tol if cfg.tol is None else cfg.tol
    out = {"strategy": str(path), "game": game.name or spec}
    low = float(data.get("delta_low", 0.5)) if isinstance(data, dict) else 0.5
    if isinstance(aut, PerfectAutomaton):
        grid = cfg.delta_grid or DiscountGrid(low, max(0.9999, low + 1e-6), 128)
        rep = verify_spne_grid(game, aut, grid, tol=tol)
        mi = verify_mi_everywhere(game, aut)
        print(rep.text())
        print(mi.text())
        out.update({"spne": rep.to_dict(), "mi_everywhere": mi.to_dict()})
        ok = rep.verdict
    elif isinstance(aut, PublicAutomaton):
        if ms is None:
            raise InputError("a public automaton needs a game file with monitoring")
        ppe = classify_ppe_candidate(game, ms, aut)
        mi = verify_mi_everywhere(game, aut)
        print(ppe.text())
        print(mi.text())
        out.update({"ppe_candidate": ppe.to_dict(), "mi_everywhere": mi.to_dict()})
        ok = ppe.verdict and mi.verdict
    elif isinstance(aut, PrivateAutomaton):
        if ms is None or ms.kind != "private":
            raise InputError("a private automaton needs a game file with private monitoring")
        thr = private_threshold(game, ms, aut)
        if cfg.delta_grid is None and thr is not None and thr < 0.99:
            low = max(low, float(thr))
        grid = cfg.delta_grid or DiscountGrid(low, 0.99, 50)
        rep = evaluate_private_automaton(game, ms, aut, grid, tol=tol)
        print(rep.text())
        print(f"threshold: one-shot tests pass for delta >= {thr:.9g}" if thr is not None
              else "threshold: the one-shot tests fail near delta = 1")
        d_mc = float(grid.points()[-1]) if hasattr(grid, "points") else float(list(grid)[-1])
        mc_mean, mc_se = monte_carlo_values(game, ms, aut, d_mc, rounds=200_000, seed=cfg.seed)
        exact = [float(x) for x in exact_initial_values(game, ms, aut, Fraction(d_mc))]
        print(f"initial values at delta = {d_mc:g}: exact {exact}, simulated {mc_mean.tolist()} "
              f"(s.e. {mc_se.tolist()})")
        out.update({"private": rep.to_dict(), "threshold": thr,
                    "monte_carlo": {"delta": d_mc, "mean": mc_mean, "se": mc_se, "exact": exact, "seed": cfg.seed}})
        ok = rep.verdict
    else:  # pragma: no cover - the parser only builds the three kinds
        raise InputError(f"unsupported automaton {type(aut).__name__}")
    _write(cfg.out, "verify.json", out)
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------

def cmd_reproduce(cfg: CliConfig, only: list[str] | None) -> int:
    from . import golden

    try:
        results = golden.run_checks(only, seed=cfg.seed)
    except KeyError as exc:
        raise InputError(exc.args[0]) from None
    for r in results:
        print(r.line())
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    _write(cfg.out, "reproduce.json", [{"name": r.name, "passed": r.passed, "detail": r.detail,
                                        "expected_red": r.expected_red, "data": r.data} for r in results])
    return EXIT_PASS if passed == len(results) else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="blackwell_out", help="directory for JSON, CSV and SVG outputs")
    common.add_argument("--tol", type=float, default=None, help="override the default tolerance 1e-9")
    common.add_argument("--directions", type=int, default=720, help="direction count of limit-set sweeps")
    common.add_argument("--delta-grid", default=None, metavar="LO:HI:K", help="discount grid for verification")
    common.add_argument("--seed", type=int, default=0, help="seed for random suites and simulations")

    p = argparse.ArgumentParser(prog="blackwell-kit", description="Blackwell equilibria of finite repeated games")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="minmax table, MI profiles and stage equilibria")
    a.add_argument("game")
    ls = sub.add_parser("limit-sets", parents=[common], help="pure and mixed limit sets with CSV and SVG output")
    ls.add_argument("game")
    ls.add_argument("--skip-mixed", action="store_true", help="omit the (slower) mixed-strategy set")
    ls.add_argument("--budget", choices=["inequality", "exact"], default="inequality")
    b = sub.add_parser("build-eq", parents=[common], help="build and verify a simple strategy profile")
    b.add_argument("game")
    b.add_argument("--target", required=True, help="target payoff, e.g. 3/2,3/2")
    b.add_argument("--delta", type=float, default=None, help="discount factor (default: certified threshold)")
    b.add_argument("--eps", default=None, help="continuation tolerance of the target path")
    b.add_argument("--reboot", type=float, default=None, metavar="P", help="also emit the reboot transform")
    v = sub.add_parser("verify", parents=[common], help="verify a strategy file")
    v.add_argument("strategy")
    v.add_argument("game", nargs="?", default=None)
    r = sub.add_parser("reproduce", parents=[common], help="run the golden checks and print a scoreboard")
    r.add_argument("--only", nargs="+", default=None, metavar="NAME")
    return p


def main(argv=None) -> int:
    from .construction.lbp import MarginError
    from .construction.rewards import DimensionError, TargetError
    from .construction.sequences import SequenceError
    from .construction.simple import ConstantsError
    from .verification.private import SizeError
    from .verification.spne import DomainError

    args = build_parser().parse_args(argv)
    saved = settings.tol
    if args.tol is not None:
        settings.tol = args.tol
    try:
        cfg = CliConfig(args.command, getattr(args, "game", None), Path(args.out), args.tol, args.directions,
                        _parse_grid(args.delta_grid), args.seed)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "limit-sets":
            return cmd_limit_sets(cfg, args.skip_mixed, args.budget)
        if args.command == "build-eq":
            return cmd_build_eq(cfg, args.target, args.delta, args.eps, args.reboot)
        if args.command == "verify":
            return cmd_verify(cfg, args.strategy, args.game)
        return cmd_reproduce(cfg, args.only)
    except (InputError, TargetError, DimensionError, ConstantsError, SequenceError, MarginError, DomainError,
            SizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - any other failure is an internal breach
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    finally:
        settings.tol = saved


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
