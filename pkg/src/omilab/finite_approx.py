"""Suprema over finite subsets of a countable index set.

``E~[sup |X|^p]`` is the supremum of ``E[max_{t in F} |X(t)|^p]`` over finite
``F``.  It is estimated along nested schedules built from disjointified
epsilon-nets, never from an arbitrary enumeration of the labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covering import PseudometricMatrix, covering_number, disjointify_cover, field_pseudometric
from .errors import BudgetExceeded, EmptySchedule, NotTotallyBoundedDeclared
from .reports import IDENT_TOL, INEQ_TOL, BoundReport
from .sampling import PathEnsemble, expectation


@dataclass(eq=False)
class RandomField:
    """Per-path values X(t) for an ordered label list, shape (L, R)."""

    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or len(self.values) != len(self.labels):
            raise ValueError("field values must have shape (labels, paths)")
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    def rows(self, labels) -> np.ndarray:
        return self.values[[self._index[lab] for lab in labels]]

    def metric(self, weights, p: float = 2) -> PseudometricMatrix:
        """rho_{X,p}(s, t) = (E|X(s) - X(t)|^p)^(1/p)."""
        return field_pseudometric(self.values, weights, p, self.labels)


@dataclass(eq=False)
class SupremumEstimate:
    p: float
    schedule: list
    values: list
    ses: list
    e_tilde: float
    e_tilde_se: float
    e_full: float | None
    provenance: str
    extra: dict = field(default_factory=dict)

    def to_rows(self) -> list[dict]:
        return [{"stage": j + 1, "size": len(F), "E_max_value": v, "se": s}
                for j, (F, v, s) in enumerate(zip(self.schedule, self.values, self.ses))]

    def summary(self) -> dict:
        out = {"p": self.p, "e_tilde": self.e_tilde, "e_tilde_se": self.e_tilde_se,
               "e_full": self.e_full if self.e_full is not None else "unavailable",
               "provenance": self.provenance, "stages": len(self.schedule)}
        if self.e_full is not None and self.e_tilde > 0:
            out["ratio"] = self.e_full / self.e_tilde
        out.update(self.extra)
        return out


def _check_nested(schedule) -> list[list]:
    stages = [list(F) for F in schedule]
    if not stages or any(len(F) == 0 for F in stages):
        raise EmptySchedule("schedule needs at least one nonempty stage")
    for a, b in zip(stages, stages[1:]):
        if not set(a) <= set(b):
            raise ValueError("schedule stages must be nested")
    return stages


def e_tilde_sup(fld: RandomField, ensemble: PathEnsemble, p: float, schedule,
                universe_finite: bool = True) -> SupremumEstimate:
    """Stagewise E[max_F |X|^p] along a nested schedule and their supremum.

    Stages share the same paths, so stage values are nondecreasing.  ``e_full``
    is reported only when the field's labels are the whole (finite) universe.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    stages = _check_nested(schedule)
    absp = np.abs(fld.values) ** p
    vals, ses = [], []
    for F in stages:
        est = expectation(ensemble, absp[[fld._index[lab] for lab in F]].max(axis=0))
        vals.append(est.value)
        ses.append(est.se)
    j = int(np.argmax(vals))
    e_full = expectation(ensemble, absp.max(axis=0)).value if universe_finite else None
    return SupremumEstimate(p, stages, vals, ses, vals[j], ses[j], e_full,
                            "exact" if ensemble.exact else "montecarlo")


def device_check_sequence(fld: RandomField, ensemble: PathEnsemble, p: float = 2) -> BoundReport:
    """E~ along F_m = {1..m} equals E[max over 1..K] for a sequence-indexed field."""
    K = len(fld.labels)
    if list(fld.labels) != list(range(1, K + 1)):
        raise ValueError("labels must be 1..K in order")
    est = e_tilde_sup(fld, ensemble, p, [list(range(1, m + 1)) for m in range(1, K + 1)])
    return BoundReport("finite-approx sequence E~ = E", est.e_tilde, est.e_full, relation="eq",
                       lhs_se=est.e_tilde_se, tol=IDENT_TOL, provenance=est.provenance,
                       params={"K": K, "p": p})


def net_schedule(metric: PseudometricMatrix, eps_sequence, budget: int | None = None) -> list[list]:
    """Nested representative sets of disjointified greedy covers at each epsilon."""
    eps_sequence = list(eps_sequence)
    if any(e <= 0 for e in eps_sequence):
        raise ValueError("epsilons must be positive")
    if any(b > a for a, b in zip(eps_sequence, eps_sequence[1:])):
        raise ValueError("epsilons must be nonincreasing")
    stages, current = [], []
    for eps in eps_sequence:
        cover = disjointify_cover(covering_number(metric, eps), metric)
        if budget is not None and cover.N > budget:
            raise BudgetExceeded(f"cover at eps={eps:g} needs {cover.N} > {budget} centers")
        seen = set(current) | set(cover.representatives)
        current = [lab for lab in metric.labels if lab in seen]
        stages.append(list(current))
    return stages


def default_eps_sequence(metric: PseudometricMatrix, factor: float = 0.5) -> list[float]:
    """Halving epsilons from above the diameter to below the smallest positive distance."""
    pos = metric.d[metric.d > 0]
    if pos.size == 0:
        return [1.0]
    eps, stop, out = 2 * float(pos.max()), float(pos.min()), []
    while True:
        out.append(eps)
        if eps <= stop:
            return out
        eps *= factor


def device_check_totally_bounded(fld: RandomField, ensemble: PathEnsemble, p: float = 2,
                                 metric: PseudometricMatrix | None = None, eps_sequence=None,
                                 universe_finite: bool = True,
                                 declared_totally_bounded: bool = False) -> BoundReport:
    """E~ <= E <= 2^(p-1) E~ with E~ estimated on an epsilon-net schedule."""
    if not universe_finite and not declared_totally_bounded:
        raise NotTotallyBoundedDeclared("an infinite universe needs a declared total-boundedness assumption")
    if metric is None:
        metric = fld.metric(ensemble.weights, p)
    if eps_sequence is None:
        eps_sequence = default_eps_sequence(metric)
    schedule = net_schedule(metric, eps_sequence)
    est = e_tilde_sup(fld, ensemble, p, schedule, universe_finite)
    if est.e_full is None:
        raise NotTotallyBoundedDeclared("E[sup] is unavailable on an infinite universe")
    factor = 2.0 ** (p - 1)
    return BoundReport("finite-approx sandwich", est.e_full, factor * est.e_tilde, relation="sandwich",
                       lower=est.e_tilde, lhs_se=0.0, rhs_se=factor * est.e_tilde_se, tol=INEQ_TOL,
                       provenance=est.provenance,
                       params={"p": p, "ratio": est.e_full / est.e_tilde if est.e_tilde else None,
                               "stages": [len(F) for F in schedule],
                               "total_boundedness": "finite universe" if universe_finite else "declared"})


def all_subsets_e_tilde(fld: RandomField, ensemble: PathEnsemble, p: float = 2) -> float:
    """Brute-force sup over every nonempty subset of a small universe."""
    L = len(fld.labels)
    if L > 12:
        raise BudgetExceeded("all-subsets search is limited to 12 labels")
    absp = np.abs(fld.values) ** p
    best = -np.inf
    for mask in range(1, 1 << L):
        rows = [j for j in range(L) if mask >> j & 1]
        best = max(best, expectation(ensemble, absp[rows].max(axis=0)).value)
    return float(best)
