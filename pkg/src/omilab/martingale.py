"""Discrete-time stochastic-basis objects on exact path ensembles.

Processes are arrays of shape (R, n+1): one row per path, column k holding the
value at time k.  Measurability of column k with respect to ``F_k`` means the
column is constant on every k-prefix block of the ensemble.  The convention
``F_{-1} = F_0`` is used throughout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    InvalidProcessShape,
    MeasurabilityViolation,
    NotSubmartingale,
    TimeKindError,
)
from .reports import IDENT_TOL, INEQ_TOL, BoundReport
from .sampling import PathEnsemble

SUBMARTINGALE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AdaptedProcess:
    values: np.ndarray
    ensemble: PathEnsemble

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.ensemble.size, self.ensemble.n_steps + 1):
            raise InvalidProcessShape(
                f"expected shape {(self.ensemble.size, self.ensemble.n_steps + 1)}, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def horizon(self) -> int:
        return self.values.shape[1] - 1

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=1)

    def adaptedness_defect(self, lag: int = 0) -> float:
        """max_k spread of X_k over (k-lag)-prefix blocks; 0 iff adapted (lag 0) / predictable (lag 1)."""
        return max(self.ensemble.measurable_defect(self.values[:, k], k - lag)
                   for k in range(self.horizon + 1))

    def to_csv(self, path) -> None:
        """Path x time grid, one row per path, weight in the first column."""
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["weight"] + [f"t{k}" for k in range(self.horizon + 1)])
            for w, row in zip(self.ensemble.weights, self.values):
                out.writerow([repr(float(w))] + [repr(float(v)) for v in row])


def _values(X, ensemble: PathEnsemble) -> np.ndarray:
    if isinstance(X, AdaptedProcess):
        return X.values
    return AdaptedProcess(X, ensemble).values


@dataclass(frozen=True, eq=False)
class DoobDecomposition:
    A: AdaptedProcess
    M: AdaptedProcess

    def martingale_defect(self) -> float:
        return martingale_defect(self.M, self.M.ensemble)


def conditional_increments(X, ensemble: PathEnsemble) -> np.ndarray:
    """E[X_k - X_{k-1} | F_{k-1}] for k = 1..n, shape (R, n)."""
    x = _values(X, ensemble)
    dx = np.diff(x, axis=1)
    out = np.empty_like(dx)
    for k in range(1, x.shape[1]):
        out[:, k - 1] = ensemble.condition(dx[:, k - 1], k - 1)
    return out


def martingale_defect(M, ensemble: PathEnsemble) -> float:
    """max over times and prefixes of |E[M_k - M_{k-1} | F_{k-1}]|."""
    x = _values(M, ensemble)
    if x.shape[1] < 2:
        return 0.0
    return float(np.max(np.abs(conditional_increments(x, ensemble))))


def doob_decompose(X, ensemble: PathEnsemble, tol: float = SUBMARTINGALE_TOL) -> DoobDecomposition:
    """Split a submartingale starting at 0 into predictable increasing A and martingale M."""
    x = _values(X, ensemble)
    if np.any(x[:, 0] != 0):
        raise InvalidProcessShape("the Doob decomposition here needs X_0 = 0")
    drift = conditional_increments(x, ensemble)
    if drift.size and drift.min() < -tol:
        r, j = np.unravel_index(np.argmin(drift), drift.shape)
        raise NotSubmartingale(
            f"negative drift {drift[r, j]:.3g} at time {j + 1}",
            time=int(j + 1), prefix=ensemble.prefix_of(int(r), int(j)), margin=float(drift[r, j]))
    A = np.zeros_like(x)
    np.cumsum(drift, axis=1, out=A[:, 1:])
    return DoobDecomposition(AdaptedProcess(A, ensemble), AdaptedProcess(x - A, ensemble))


def predictable_projection(Y, ensemble: PathEnsemble) -> AdaptedProcess:
    """pY_0 = Y_0 and pY_k = E[Y_k | F_{k-1}]."""
    y = _values(Y, ensemble)
    out = y.copy()
    for k in range(1, y.shape[1]):
        out[:, k] = ensemble.condition(y[:, k], k - 1)
    return AdaptedProcess(out, ensemble)


def predictable_compensator(Y, ensemble: PathEnsemble) -> AdaptedProcess:
    """Y^p_n = Y_0 + sum_{k<=n} E[Y_k - Y_{k-1} | F_{k-1}]."""
    y = _values(Y, ensemble)
    out = np.empty_like(y)
    out[:, 0] = y[:, 0]
    out[:, 1:] = y[:, :1] + np.cumsum(conditional_increments(y, ensemble), axis=1)
    return AdaptedProcess(out, ensemble)


# -- random times --------------------------------------------------------------


class PrefixView:
    """Read-only window on the first ``allowed`` innovations of every path.

    Reading anything later raises :class:`MeasurabilityViolation`; this is how
    time rules are audited.
    """

    def __init__(self, ensemble: PathEnsemble, allowed: int):
        self._ens = ensemble
        self.allowed = allowed

    def _gate(self, j: int):
        if j > self.allowed:
            raise MeasurabilityViolation(
                f"rule read time {j} but only the {self.allowed}-prefix is observable")

    def innovation(self, j: int, component: int | None = None) -> np.ndarray:
        """Innovation at time j (1-based)."""
        self._gate(j)
        x = self._ens.paths[:, j - 1]
        return x if component is None else x[..., component]

    def prefix(self, j: int | None = None) -> np.ndarray:
        j = self.allowed if j is None else j
        self._gate(j)
        return self._ens.paths[:, :j]

    def partial_sum(self, j: int, component: int | None = None) -> np.ndarray:
        self._gate(j)
        x = self._ens.paths[:, :j]
        if component is not None:
            x = x[..., component]
        return x.sum(axis=1) if j else np.zeros(self._ens.size)

    def value(self, process, j: int) -> np.ndarray:
        """Column j of an adapted process."""
        self._gate(j)
        return _values(process, self._ens)[:, j]


@dataclass(frozen=True)
class TimeRule:
    """T = first k in 0..bound at which ``rule(k, view)`` is true, else ``bound``.

    For ``kind="stopping"`` the view at k exposes the k-prefix; for
    ``kind="predictable"`` it exposes only the (k-1)-prefix ({T = k} in F_{k-1}).
    """

    kind: str
    rule: Callable
    bound: int
    name: str = "rule"

    def __post_init__(self):
        if self.kind not in ("stopping", "predictable"):
            raise ValueError(f"unknown time kind {self.kind!r}")
        if self.bound < 0:
            raise ValueError("bound must be nonnegative")


def evaluate_time(rule: TimeRule, ensemble: PathEnsemble) -> np.ndarray:
    """Per-path value of the random time, audited for measurability."""
    if rule.bound > ensemble.n_steps:
        raise ValueError(f"bound {rule.bound} exceeds horizon {ensemble.n_steps}")
    T = np.full(ensemble.size, rule.bound, dtype=int)
    open_ = np.ones(ensemble.size, dtype=bool)
    for k in range(rule.bound):
        allowed = k if rule.kind == "stopping" else max(k - 1, 0)
        hit = np.broadcast_to(np.asarray(rule.rule(k, PrefixView(ensemble, allowed)), dtype=bool),
                              (ensemble.size,))
        stop = open_ & hit
        T[stop] = k
        open_ &= ~stop
    return T


def time_defect(T: np.ndarray, ensemble: PathEnsemble, lag: int = 0) -> float:
    """0 iff {T = j} is F_{j-lag}-measurable for every j (lag 0 stopping, lag 1 predictable)."""
    T = np.asarray(T)
    return max((ensemble.measurable_defect((T == j).astype(float), j - lag)
                for j in range(int(T.max()) + 1)), default=0.0)


def constant_time(t: int, kind: str = "predictable") -> TimeRule:
    return TimeRule(kind, lambda k, view: k >= t, t, name=f"const{t}")


def threshold_time(process, level: float, bound: int, kind: str = "predictable",
                   start: int = 1, name: str | None = None) -> TimeRule:
    """First k >= start with process_{k-1} >= level (predictable) or process_k >= level (stopping)."""
    lag = 1 if kind == "predictable" else 0

    def rule(k, view):
        if k < start:
            return False
        return view.value(process, k - lag) >= level

    return TimeRule(kind, rule, bound, name=name or f"{kind}-hit{level:g}")


def predictable_battery(processes, horizon: int, size: int = 24, seed: int = 0,
                        kind: str = "predictable") -> list[TimeRule]:
    """Constants, threshold rules on each process and randomized threshold rules.

    ``processes`` are adapted (R, n+1) arrays observed with the rule's lag.
    """
    rules = [constant_time(t, kind) for t in range(1, horizon + 1)]
    for j, proc in enumerate(processes):
        p = np.asarray(proc)
        levels = np.unique(p[:, : horizon + 1])
        for lvl in levels[levels > 0][:3]:
            rules.append(threshold_time(p, float(lvl), horizon, kind, name=f"p{j}>={lvl:g}"))
    rng = np.random.default_rng(seed)
    while len(rules) < size:
        j = int(rng.integers(len(processes))) if processes else 0
        p = np.asarray(processes[j]) if processes else np.zeros((1, horizon + 1))
        lo, hi = float(p.min()), float(p.max())
        lvl = float(rng.uniform(lo, hi)) if hi > lo else lo
        start = int(rng.integers(1, horizon + 1))
        rules.append(threshold_time(p, lvl, horizon, kind, start=start,
                                    name=f"rand{len(rules)}:p{j}>={lvl:.3g}@{start}"))
    return rules


# -- domination and Lenglart ---------------------------------------------------


def _check_domination_shapes(x: np.ndarray, a: np.ndarray):
    if np.any(x < -IDENT_TOL) or np.any(x[:, 0] != 0):
        raise InvalidProcessShape("X must be nonnegative and start at 0")
    if np.any(a[:, 0] != 0) or np.any(np.diff(a, axis=1) < -IDENT_TOL):
        raise InvalidProcessShape("A must be increasing and start at 0")


def check_L_domination(X, A, ensemble: PathEnsemble, kind: str,
                       time_rules: list[TimeRule], tol: float = INEQ_TOL) -> list[BoundReport]:
    """E[X_T] <= E[A_T] for every supplied bounded time of the given kind."""
    x, a = _values(X, ensemble), _values(A, ensemble)
    _check_domination_shapes(x, a)
    rows = np.arange(ensemble.size)
    reports = []
    for rule in time_rules:
        if rule.kind != kind:
            raise TimeKindError(f"rule {rule.name} is {rule.kind}, expected {kind}")
        T = evaluate_time(rule, ensemble)
        lhs = float(np.sum(ensemble.weights * x[rows, T]))
        rhs = float(np.sum(ensemble.weights * a[rows, T]))
        reports.append(BoundReport(f"L-domination[{kind}] {rule.name}", lhs, rhs, tol=tol,
                                   provenance=_prov(ensemble),
                                   params={"rule": rule.name, "evidence": "sampled-rules"}))
    return reports


def _prov(ensemble: PathEnsemble) -> str:
    return "exact" if ensemble.exact else "montecarlo"


def _prob(ensemble: PathEnsemble, event: np.ndarray) -> tuple[float, float]:
    p = float(np.sum(ensemble.weights * event))
    if ensemble.exact:
        return p, 0.0
    return p, float(np.sqrt(max(p * (1 - p), 0.0) / ensemble.size))


def lenglart_check(X, A, ensemble: PathEnsemble, kind: str, T: TimeRule,
                   eps: float, gamma: float, tol: float = INEQ_TOL) -> BoundReport:
    """P(sup_{n<=T} X_n >= eps) <= gamma/eps + P(A_T >= gamma)."""
    if eps <= 0 or gamma <= 0:
        raise ValueError("eps and gamma must be positive")
    if T.kind != kind:
        raise TimeKindError(f"time {T.name} is {T.kind}, expected {kind}")
    x, a = _values(X, ensemble), _values(A, ensemble)
    _check_domination_shapes(x, a)
    tt = evaluate_time(T, ensemble)
    running = np.maximum.accumulate(x, axis=1)
    rows = np.arange(ensemble.size)
    lhs, lhs_se = _prob(ensemble, running[rows, tt] >= eps)
    tail, tail_se = _prob(ensemble, a[rows, tt] >= gamma)
    return BoundReport(f"lenglart[{kind}] {T.name} eps={eps:g} gamma={gamma:g}",
                       lhs, gamma / eps + tail, lhs_se=lhs_se, rhs_se=tail_se, tol=tol,
                       provenance=_prov(ensemble),
                       params={"eps": eps, "gamma": gamma, "time": T.name})
