"""Plain records returned by the hypothesis checkers and bound evaluations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple


@dataclass(frozen=True)
class ConditionDiagnostic:
    """Outcome of checking ``0 < modulus < covering <= operator_norm <= 1``.

    ``admissible_interval`` is the open range of alpha values for the error
    bound, or ``None`` when it is empty.  ``degenerate`` marks the zero
    perturbation case: the strict ``0 < modulus`` fails but nothing else does,
    so the equation is trivially solvable.
    """

    lipschitz_modulus: float
    covering_constant: float
    operator_norm: float
    admissible_interval: Optional[Tuple[float, float]]
    passes: bool
    reasons: List[str] = field(default_factory=list)
    degenerate: bool = False
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def kernel_norm(self) -> float:
        return self.lipschitz_modulus

    @property
    def lambda_abs(self) -> float:
        return self.operator_norm

    def midpoint_alpha(self) -> Optional[float]:
        if self.admissible_interval is None:
            return None
        lo, hi = self.admissible_interval
        return 0.5 * (lo + hi)

    def summary(self) -> str:
        verdict = "pass" if self.passes else "FAIL"
        if self.degenerate:
            verdict += " (degenerate)"
        interval = ("empty" if self.admissible_interval is None
                    else "({:.10g}, {:.10g})".format(*self.admissible_interval))
        lines = [
            f"conditions: {verdict}",
            f"  lipschitz modulus : {self.lipschitz_modulus:.12g}",
            f"  covering constant : {self.covering_constant:.12g}",
            f"  operator norm     : {self.operator_norm:.12g}",
            f"  admissible alpha  : {interval}",
        ]
        if self.reasons:
            lines.append("  reasons           : " + "; ".join(self.reasons))
        return "\n".join(lines)


@dataclass(frozen=True)
class BoundCheck:
    """One evaluation of an a-posteriori error bound at a given anchor."""

    anchor: str
    alpha: float
    lhs: float
    rhs: float
    passed: bool


def chain_diagnostic(modulus: float, covering: float, op_norm: float,
                     details: Optional[Dict[str, Any]] = None,
                     labels: Optional[Dict[str, str]] = None) -> ConditionDiagnostic:
    """Evaluate ``0 < modulus < covering <= op_norm <= 1`` and the alpha range.

    ``labels`` renames the generic reason codes into the caller's vocabulary,
    e.g. ``{"operator norm > 1": "|lambda| > 1"}``.
    """
    reasons = []
    degenerate = False
    if modulus == 0.0:
        degenerate = True
        reasons.append("zero-kernel")
    if not modulus < covering:
        reasons.append("modulus >= covering")
    if covering > op_norm:
        reasons.append("covering > operator norm")
    if op_norm > 1.0:
        reasons.append("operator norm > 1")
    if covering <= 0.0:
        reasons.append("covering constant = 0")
    hard = [r for r in reasons if r != "zero-kernel"]
    passes = not hard
    if labels:
        reasons = [labels.get(r, r) for r in reasons]
    interval = (modulus, covering) if modulus < covering else None
    return ConditionDiagnostic(
        lipschitz_modulus=float(modulus),
        covering_constant=float(covering),
        operator_norm=float(op_norm),
        admissible_interval=interval,
        passes=passes,
        reasons=reasons,
        degenerate=degenerate and passes,
        details=dict(details or {}),
    )
