"""Compare the compiled simplex kernel with the pure-Python fallback.

Times three workloads on each available backend:

* random dense LPs through ``lp.linprog``;
* batched enforcement scores over a grid of mixed profiles in the prisoners'
  dilemma through ``lp.fl_scores_2p``;
* a full ``limit_set_pure`` sweep (the scoring module's default backend is
  swapped for the duration).

Usage::

    python benchmarks/bench_simplex.py [--repeat 3] [--lps 300]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from blackwell_kit import lp, scoring
from blackwell_kit.game_core import load_bundled


def _best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _random_lps(count: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n, m = rng.integers(3, 9), rng.integers(3, 12)
        A = rng.normal(size=(m, n))
        b = np.abs(rng.normal(size=m)) + 0.1
        c = rng.normal(size=n)
        out.append((c, A, b))
    return out


def bench_linprog(kernel, problems) -> None:
    for c, A, b in problems:
        lp.linprog(c, A, b, free=np.zeros(len(c), dtype=bool), kernel=kernel)


def bench_fl_scores(kernel, steps: int = 24) -> None:
    game, ms = load_bundled("prisoners_dilemma")
    G1, G2, PI = scoring._two_player_data(game, ms)
    grid = np.linspace(0.0, 1.0, steps)
    A1 = np.column_stack([grid, 1 - grid])
    A2 = A1.copy()
    for theta in np.linspace(0.0, 2 * np.pi, 8, endpoint=False):
        lp.fl_scores_2p(G1, G2, PI, float(np.cos(theta)), float(np.sin(theta)), A1, A2, False, kernel=kernel)


def bench_limit_set(kernel) -> None:
    game, ms = load_bundled("prisoners_dilemma")
    saved = lp.backend
    lp.backend = kernel
    try:
        scoring.limit_set_pure(game, ms)
    finally:
        lp.backend = saved


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--lps", type=int, default=300)
    args = parser.parse_args(argv)

    kernels = {"python": lp.get_backend("python")}
    try:
        kernels["compiled"] = lp.get_backend("compiled")
    except ImportError:
        print("compiled kernel not built; timing the pure-Python fallback only")
    problems = _random_lps(args.lps)
    workloads = {
        f"linprog x{args.lps}": lambda k: bench_linprog(k, problems),
        "fl_scores_2p 24x24 x8": bench_fl_scores,
        "limit_set_pure (PD)": bench_limit_set,
    }
    print(f"{'workload':<24}" + "".join(f"{name:>12}" for name in kernels) + f"{'speedup':>10}")
    for label, fn in workloads.items():
        times = {name: _best_of(lambda: fn(k), args.repeat) for name, k in kernels.items()}
        row = f"{label:<24}" + "".join(f"{t:>11.3f}s" for t in times.values())
        if "compiled" in times:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
