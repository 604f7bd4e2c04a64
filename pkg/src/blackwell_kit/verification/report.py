"""Verification report shared by every checker."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Violation:
    """One failed (or binding) constraint.

    ``slack`` is the amount by which the constraint is violated; positive
    values above the report tolerance make the verdict fail.
    """

    check: str
    slack: float
    state: str | None = None
    player: int | None = None
    deviation: str | None = None
    delta: float | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None and v != ""}


@dataclass
class VerificationReport:
    """Outcome of a checker.

    Attributes
    ----------
    check : name of the checker.
    verdict : True when the worst violation is within ``tol``.
    tol : tolerance applied to violations.
    max_violation : worst violation found (``-inf`` when nothing was checked).
    violations : every constraint that exceeded ``tol``, worst first (capped).
    binding : the tightest constraints, reported even on a pass.
    notes : qualifiers such as "grid-certified" or "generic-case".
    details : checker-specific numbers.
    """

    check: str
    verdict: bool
    tol: float
    max_violation: float
    violations: list = field(default_factory=list)
    binding: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.verdict

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "verdict": "pass" if self.verdict else "fail",
            "tol": self.tol,
            "max_violation": self.max_violation,
            "violations": [v.to_dict() for v in self.violations],
            "binding": [v.to_dict() for v in self.binding],
            "notes": list(self.notes),
            "details": self.details,
        }

    def text(self) -> str:
        lines = [f"{self.check}: {'PASS' if self.verdict else 'FAIL'} "
                 f"(max violation {self.max_violation:.3e}, tol {self.tol:g})"]
        for note in self.notes:
            lines.append(f"  note: {note}")
        shown = self.violations if self.violations else self.binding
        label = "violation" if self.violations else "binding"
        for v in shown[:10]:
            where = ", ".join(f"{k}={val}" for k, val in v.to_dict().items() if k not in ("check", "slack"))
            lines.append(f"  {label}: {v.check} slack {v.slack:.3e} [{where}]")
        if len(shown) > 10:
            lines.append(f"  ... {len(shown) - 10} more")
        return "\n".join(lines)


def build_report(check: str, items: list, tol: float, keep: int = 50, notes=None, details=None) -> VerificationReport:
    """Assemble a report from candidate violations (any slack sign)."""
    items = sorted(items, key=lambda v: -v.slack)
    worst = items[0].slack if items else float("-inf")
    bad = [v for v in items if v.slack > tol]
    return VerificationReport(check, worst <= tol, tol, float(worst), bad[:keep], items[:5],
                              list(notes or []), dict(details or {}))
