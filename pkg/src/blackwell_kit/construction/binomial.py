"""Statistical tests with a prescribed pass probability.

A test runs ``T`` rounds, each a success with probability ``q``, and passes
when at least ``k`` successes occur.  :func:`design_binomial_test` finds the
shortest test whose pass probability is within ``tol`` of a target.
:func:`nash_truncate` stops testing once the outcome is settled and plays a
fixed stage equilibrium for the remaining rounds, which leaves the pass
probability unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

T_CAP = 10 ** 5
EXACT_T = 512


class CapError(ValueError):
    """No test up to the length cap meets the tolerance; carries the best found."""

    def __init__(self, message: str, best: "TestSpec | None"):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class TestSpec:
    """A threshold test.

    Attributes
    ----------
    T, k : rounds and pass threshold (pass when successes >= k).
    q : per-round success probability.
    target, tol : requested pass probability and tolerance.
    tail : pass probability ``P[Bin(T, q) >= k]`` (float).
    exact_tail : the same as a Fraction when computed exactly, else None.
    nash : stage equilibrium played after the outcome is settled (truncated tests).
    """

    __test__ = False  # keep pytest from collecting the class

    T: int
    k: int
    q: float
    target: float
    tol: float
    tail: float
    exact_tail: Fraction | None = None
    nash: object = None

    @property
    def truncated(self) -> bool:
        return self.nash is not None

    def conclusive(self, t: int, successes: int) -> bool:
        """Whether the outcome is settled after ``t`` rounds with ``successes``."""
        return successes >= self.k or successes + (self.T - t) < self.k

    def passed(self, successes: int) -> bool:
        return successes >= self.k

    def pass_probability(self, exact: bool = True):
        """Pass probability of the test as it is run.

        A full test uses the closed-form binomial tail.  A truncated test is
        evaluated by dynamic programming over (round, successes) that stops
        at conclusive states, so agreement between the two is a real check.
        """
        if not self.truncated:
            return exact_tail(self.T, self.k, self.q) if exact else log_tail(self.T, self.k, float(self.q))
        q = Fraction(self.q) if exact else float(self.q)
        one = Fraction(1) if exact else 1.0
        live = {0: one}
        passed = 0 * one
        for t in range(self.T + 1):
            nxt = {}
            for s, p in live.items():
                if self.conclusive(t, s):
                    if s >= self.k:
                        passed += p
                    continue
                nxt[s + 1] = nxt.get(s + 1, 0) + p * q
                nxt[s] = nxt.get(s, 0) + p * (1 - q)
            live = nxt
            if not live:
                break
        return passed

    def expected_length(self) -> float:
        """Expected number of rounds until the outcome is settled."""
        q = float(self.q)
        live = {0: 1.0}
        total = 0.0
        for t in range(self.T + 1):
            nxt = {}
            for s, p in live.items():
                if self.conclusive(t, s):
                    total += p * t
                    continue
                nxt[s + 1] = nxt.get(s + 1, 0.0) + p * q
                nxt[s] = nxt.get(s, 0.0) + p * (1 - q)
            live = nxt
        return total


def exact_tail(T: int, k: int, q) -> Fraction:
    """``P[Bin(T, q) >= k]`` over the rationals (``q`` converted exactly)."""
    q = Fraction(q)
    r = 1 - q
    return sum((Fraction(math.comb(T, j)) * q ** j * r ** (T - j) for j in range(max(k, 0), T + 1)), Fraction(0))


def log_tail(T: int, k: int, q: float, reverse: bool = False) -> float:
    """``P[Bin(T, q) >= k]`` from log-space terms and compensated summation."""
    if k <= 0:
        return 1.0
    if k > T:
        return 0.0
    lq, lr = math.log(q), math.log1p(-q)
    js = range(T, k - 1, -1) if reverse else range(k, T + 1)
    terms = [math.exp(math.lgamma(T + 1) - math.lgamma(j + 1) - math.lgamma(T - j + 1) + j * lq + (T - j) * lr)
             for j in js]
    return math.fsum(terms)


def design_binomial_test(q_star: float, target_pass: float, tol: float, cap: int = T_CAP) -> TestSpec:
    """Shortest test with pass probability within ``tol`` of ``target_pass``.

    For each length ``T`` the pmf of ``Bin(T, q*)`` is updated incrementally;
    the tail closest to the target is examined and, when it is within ``tol``,
    recomputed independently (exactly for ``T <= 512``, otherwise from
    log-space terms) before being accepted.

    Raises
    ------
    CapError
        When no length up to ``cap`` works; ``best`` holds the closest test.
    """
    if not (0 < q_star < 1):
        raise ValueError("q* must lie in (0, 1)")
    if not (0 < target_pass < 1):
        raise ValueError("the target pass probability must lie in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = float(q_star)
    pmf = np.array([1.0])
    best = None
    for T in range(1, cap + 1):
        new = np.zeros(T + 1)
        new[:-1] += pmf * (1 - q)
        new[1:] += pmf * q
        pmf = new
        tails = np.cumsum(pmf[::-1])[::-1]   # tails[k] = P[X >= k]
        k = int(np.argmin(np.abs(tails - target_pass)))
        err = abs(float(tails[k]) - target_pass)
        if best is None or err < best[0]:
            best = (err, T, k, float(tails[k]))
        if err <= tol * (1 + 1e-9):
            if T <= EXACT_T:
                ex = exact_tail(T, k, q_star)
                tail = float(ex)
            else:
                ex = None
                tail = log_tail(T, k, q)
            if abs(tail - target_pass) <= tol:
                return TestSpec(T, k, q_star, target_pass, tol, tail, ex)
    _, T, k, tail = best
    spec = TestSpec(T, k, q_star, target_pass, tol, tail)
    raise CapError(f"no test of length <= {cap} within tol {tol:g}; best |tail - target| = {best[0]:.3g} at T={T}",
                   spec)


def nash_truncate(test: TestSpec, alpha_ne) -> TestSpec:
    """Stop testing at conclusive states and play ``alpha_ne`` afterwards.

    The pass/fail outcome at a conclusive state is already determined, so
    the pass probability is unchanged; :meth:`TestSpec.pass_probability`
    confirms it exactly.
    """
    return TestSpec(test.T, test.k, test.q, test.target, test.tol, test.tail, test.exact_tail, alpha_ne)
