"""One-inequality verdict records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# absolute tolerances: inequalities vs identities
INEQ_TOL = 1e-9
IDENT_TOL = 1e-12


@dataclass
class BoundReport:
    """Both sides of one inequality instance and its verdict.

    ``relation`` is ``"le"`` (lhs <= rhs), ``"eq"`` (lhs == rhs) or
    ``"sandwich"`` (lower <= lhs <= rhs).  Monte Carlo sides carry standard
    errors; the verdict allows ``z`` standard errors of slack on top of ``tol``.
    Diagnostic reports never count toward an aggregate verdict.
    """

    name: str
    lhs: float
    rhs: float
    relation: str = "le"
    lower: float | None = None
    lhs_se: float = 0.0
    rhs_se: float = 0.0
    tol: float = INEQ_TOL
    z: float = 2.0
    provenance: str = "exact"
    diagnostic: bool = False
    params: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        se = math.hypot(self.lhs_se or 0.0, self.rhs_se or 0.0)
        return self.tol + (self.z * se if math.isfinite(se) else 0.0)

    @property
    def margin(self) -> float:
        if self.relation == "eq":
            return -abs(self.rhs - self.lhs)
        if self.relation == "sandwich":
            return min(self.rhs - self.lhs, self.lhs - self.lower)
        return self.rhs - self.lhs

    @property
    def verdict(self) -> bool:
        return self.margin >= -self.slack

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "relation": self.relation,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "verdict": "pass" if self.verdict else "fail",
            "tol": self.tol,
            "provenance": self.provenance,
            "diagnostic": self.diagnostic,
        }
        if self.lower is not None:
            d["lower"] = self.lower
        if self.provenance == "montecarlo":
            d["lhs_se"] = self.lhs_se
            d["rhs_se"] = self.rhs_se
            d["z"] = self.z
        if self.params:
            d["params"] = self.params
        return d

    def line(self) -> str:
        tag = "PASS" if self.verdict else "FAIL"
        return f"[{tag}] {self.name}: lhs={self.lhs:.12g} rhs={self.rhs:.12g} margin={self.margin:.3g}"
