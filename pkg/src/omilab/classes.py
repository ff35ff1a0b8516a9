"""Countable function classes on a sample space, with envelopes and centerings.

Builtin families:

* ``suzuki_class(m)`` -- indicators of m of the 2m cells of width 1/(2m) on [0, 1);
* ``suzuki_union(M)`` -- the union of the first M such families;
* ``indicator_intervals(k)`` -- 1[0, j/k) for j = 1..k;
* ``lipschitz_grid(k)`` -- x -> |x - t| for t on the grid j/k;
* ``explicit_table`` -- arbitrary values on a finite support.

Step classes integrate exactly under the uniform law by refining to a common
grid; table classes integrate exactly under their finite law.
"""

from __future__ import annotations

import itertools
import json
import math
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceeded, NoCentering, NoMomentSource
from .sampling import ProbabilityModel

DEFAULT_LABEL_BUDGET = 10**6


class FunctionClass:
    """An ordered family of real functions with a common envelope.

    ``func(label, x)`` evaluates one member on an array of sample points;
    ``mean(label, model)`` returns the analytic centering P h or ``None``.
    """

    def __init__(self, labels: Sequence, func: Callable, envelope: Callable,
                 mean: Callable | None = None, name: str = "class",
                 breakpoints: Callable | None = None):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be distinct")
        self.labels = labels
        self._func = func
        self._envelope = envelope
        self._mean = mean
        self._breakpoints = breakpoints
        self.name = name
        self._index = {lab: i for i, lab in enumerate(labels)}

    def __len__(self):
        return len(self.labels)

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, {len(self)} members)"

    def index(self, label) -> int:
        return self._index[label]

    def evaluate(self, labels, x) -> np.ndarray:
        """Values of each listed member at points x, shape (len(labels),) + x.shape."""
        x = np.asarray(x, dtype=float)
        return np.stack([np.asarray(self._func(lab, x), dtype=float) for lab in labels])

    def envelope(self, x) -> np.ndarray:
        return np.asarray(self._envelope(np.asarray(x, dtype=float)), dtype=float)

    def check_envelope(self, labels, x, tol: float = 1e-12) -> None:
        vals = self.evaluate(labels, x)
        if np.any(np.abs(vals) > self.envelope(x) + tol):
            raise ValueError(f"{self.name}: a member exceeds the envelope")

    def centering(self, labels, model: ProbabilityModel, quadrature: bool = False) -> np.ndarray:
        """P h for each label; analytic when known, quadrature only on request."""
        out = []
        for lab in labels:
            val = self._mean(lab, model) if self._mean is not None else None
            if val is None and model.is_finite:
                val = model.expect(lambda x, lab=lab: self._func(lab, x))
            if val is None:
                if not quadrature:
                    raise NoCentering(f"{self.name}: no analytic P h for {lab!r}")
                val = self.integrate([lab], lambda v: v[0], model)
            out.append(float(val))
        return np.array(out)

    def can_integrate(self, model: ProbabilityModel) -> bool:
        return model.is_finite or (model.law == "uniform" and self._breakpoints is not None)

    def integrate(self, labels, fn: Callable, model: ProbabilityModel) -> float:
        """E fn(h_1(X), ..., h_m(X)) for the listed members under ``model``.

        ``fn`` receives the stacked member values, shape (m, ...).
        """
        if model.is_finite:
            return model.expect(lambda x: fn(self.evaluate(labels, x)))
        if not self.can_integrate(model):
            raise NoMomentSource(f"{self.name}: no exact integration under {model.law}")
        pts = sorted(set(itertools.chain.from_iterable(self._breakpoints(lab) for lab in labels)))
        return model.expect(lambda x: fn(self.evaluate(labels, x)), points=pts)

    def sup_square_mean(self, labels, model: ProbabilityModel) -> float:
        """sup_h P h^2 over the listed members."""
        return max(self.integrate([lab], lambda v: v[0] ** 2, model) for lab in labels)

    def envelope_moments(self, model: ProbabilityModel) -> tuple[float, float]:
        """(P H, P H^2)."""
        if model.is_finite:
            env = self.envelope(model.support)
            return float(np.sum(model.probs * env)), float(np.sum(model.probs * env**2))
        return (model.expect(self.envelope), model.expect(lambda x: self.envelope(x) ** 2))


class StepClass(FunctionClass):
    """Members are step functions on equal cells of [0, 1).

    Each label maps to a vector of cell values; cell counts may differ
    between members.  Under the uniform law every integral is exact.
    """

    def __init__(self, labels, cells: dict, envelope_value: float = 1.0, name="step"):
        self.cells = {lab: np.asarray(v, dtype=float) for lab, v in cells.items()}
        if np.any([np.max(np.abs(v)) > envelope_value for v in self.cells.values()]):
            raise ValueError(f"{name}: a member exceeds the envelope")
        self.envelope_value = envelope_value

        def func(lab, x):
            v = self.cells[lab]
            idx = np.clip(np.floor(x * len(v)).astype(int), 0, len(v) - 1)
            return v[idx]

        super().__init__(labels, func, lambda x: np.full(np.shape(x), envelope_value),
                         mean=self._cell_mean, name=name,
                         breakpoints=lambda lab: [j / len(self.cells[lab]) for j in range(1, len(self.cells[lab]))])

    def _cell_mean(self, lab, model):
        if model.law == "uniform":
            return float(np.mean(self.cells[lab]))
        return None

    def refined(self, labels) -> np.ndarray:
        """Member values on the common refinement, shape (m, K)."""
        K = reduce(math.lcm, (len(self.cells[lab]) for lab in labels), 1)
        return np.stack([np.repeat(self.cells[lab], K // len(self.cells[lab])) for lab in labels])

    def can_integrate(self, model):
        return model.is_finite or model.law == "uniform"

    def integrate(self, labels, fn, model):
        if model.law == "uniform":
            return float(np.mean(np.asarray(fn(self.refined(labels)), dtype=float)))
        return super().integrate(labels, fn, model)

    def envelope_moments(self, model):
        e = self.envelope_value
        return float(e), float(e * e)

    def counts_matrix(self, labels) -> np.ndarray:
        """0/1-or-valued matrix on the common refinement (for fast empirical means)."""
        return self.refined(labels)


def suzuki_labels(m: int) -> list[tuple]:
    return [(m, pos) for pos in itertools.combinations(range(2 * m), m)]


def _suzuki_cells(m: int, pos: tuple) -> np.ndarray:
    v = np.zeros(2 * m)
    v[list(pos)] = 1.0
    return v


def suzuki_class(m: int, budget: int = DEFAULT_LABEL_BUDGET) -> StepClass:
    """All sums of m out of 2m cell indicators on [0, 1); every member has P h = 1/2."""
    if m < 1:
        raise ValueError("m must be at least 1")
    size = math.comb(2 * m, m)
    if size > budget:
        raise BudgetExceeded(f"C({2 * m},{m}) = {size} members exceeds budget {budget}")
    labels = suzuki_labels(m)
    return StepClass(labels, {lab: _suzuki_cells(*lab) for lab in labels}, name=f"suzuki[{m}]")


def suzuki_union(M: int, budget: int = DEFAULT_LABEL_BUDGET) -> StepClass:
    """H_1 u ... u H_M, ordered by m then by cell positions."""
    size = sum(math.comb(2 * m, m) for m in range(1, M + 1))
    if size > budget:
        raise BudgetExceeded(f"union up to m={M} has {size} members, budget {budget}")
    labels = [lab for m in range(1, M + 1) for lab in suzuki_labels(m)]
    return StepClass(labels, {lab: _suzuki_cells(*lab) for lab in labels}, name=f"suzuki-union[{M}]")


def suzuki_budget_level(label_budget: int) -> int:
    """Largest M whose union H_1..H_M fits in ``label_budget`` labels (0 if none)."""
    M, total = 0, 0
    while total + math.comb(2 * (M + 1), M + 1) <= label_budget:
        M += 1
        total += math.comb(2 * M, M)
    return M


def indicator_intervals(k: int) -> StepClass:
    """1[0, j/k) for j = 1..k (the distribution-function class on a grid)."""
    cells = {j: (np.arange(k) < j).astype(float) for j in range(1, k + 1)}
    return StepClass(list(cells), cells, name=f"intervals[{k}]")


def lipschitz_grid(k: int) -> FunctionClass:
    """x -> |x - t| for t = j/k, j = 0..k; 1-Lipschitz in t, envelope 1."""
    labels = [j / k for j in range(k + 1)]

    def mean(t, model):
        if model.law == "uniform":
            return (t * t + (1 - t) ** 2) / 2
        return None

    return FunctionClass(labels, lambda t, x: np.abs(x - t), lambda x: np.ones(np.shape(x)),
                         mean=mean, name=f"lipschitz[{k}]", breakpoints=lambda t: [t])


def explicit_table(support, probs, table: dict) -> tuple[FunctionClass, ProbabilityModel]:
    """Members given by their values on a finite support; returns (class, law)."""
    model = ProbabilityModel.finite(support, probs)
    pts = model.support
    values = {lab: np.asarray(v, dtype=float) for lab, v in table.items()}
    for lab, v in values.items():
        if v.shape != (len(pts),):
            raise ValueError(f"member {lab!r} needs one value per support point")
    env = np.max(np.abs(np.stack(list(values.values()))), axis=0)

    def lookup(x, arr):
        idx = np.searchsorted(pts, x)
        idx = np.clip(idx, 0, len(pts) - 1)
        if np.any(pts[idx] != x):
            raise ValueError("table classes are only defined on their support")
        return arr[idx]

    cls = FunctionClass(list(values), lambda lab, x: lookup(x, values[lab]),
                        lambda x: lookup(x, env), name="table")
    return cls, model


def from_description(doc) -> tuple[FunctionClass, ProbabilityModel]:
    """Build (class, law) from a JSON document or dict naming a builtin family."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    family = doc.get("family")
    if family == "suzuki":
        return suzuki_class(int(doc["m"])), ProbabilityModel.uniform()
    if family == "suzuki-union":
        return suzuki_union(int(doc["M"])), ProbabilityModel.uniform()
    if family == "indicator-intervals":
        return indicator_intervals(int(doc["k"])), ProbabilityModel.uniform()
    if family == "lipschitz-grid":
        return lipschitz_grid(int(doc["k"])), ProbabilityModel.uniform()
    if family == "table":
        return explicit_table(doc["support"], doc.get("probs"), doc["values"])
    raise ValueError(f"unknown class family {family!r}")
