"""Pseudometrics on finite label sets, covering, packing and bracketing numbers.

Balls are open: a label is covered by a center when their distance is
strictly below epsilon.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .classes import FunctionClass
from .errors import NoMomentSource, NotACover, TooLargeForExact
from .sampling import PathEnsemble, ProbabilityModel

EXACT_COVER_LIMIT = 20
EXACT_BRACKET_LIMIT = 12


@dataclass(eq=False)
class PseudometricMatrix:
    """Pairwise distances between an ordered list of labels."""

    labels: tuple
    d: np.ndarray
    p: float = 2
    provenance: str = "analytic"

    def __post_init__(self):
        self.labels = tuple(self.labels)
        d = np.asarray(self.d, dtype=float)
        L = len(self.labels)
        if d.shape != (L, L):
            raise ValueError(f"distance matrix must be {L}x{L}")
        if np.any(d < 0) or np.any(np.diag(d) != 0) or not np.array_equal(d, d.T):
            raise ValueError("distances must be symmetric, nonnegative, zero on the diagonal")
        self.d = d

    def __len__(self):
        return len(self.labels)

    @property
    def diameter(self) -> float:
        return float(self.d.max()) if self.d.size else 0.0

    def triangle_defect(self) -> float:
        """max_{i,j,k} d(i,j) - d(i,k) - d(k,j); nonpositive for a pseudometric."""
        d = self.d
        if len(d) == 0:
            return 0.0
        return float(np.max(d[:, None, :] - d[:, :, None] - d[None, :, :]))

    def sub(self, labels) -> "PseudometricMatrix":
        idx = [self.labels.index(lab) for lab in labels]
        return PseudometricMatrix(tuple(labels), self.d[np.ix_(idx, idx)], self.p, self.provenance)


def field_pseudometric(values: np.ndarray, weights: np.ndarray, p: float = 2,
                       labels=None, provenance: str = "analytic") -> PseudometricMatrix:
    """(E|X(s) - X(t)|^p)^(1/p) from per-path values of shape (L, R)."""
    values = np.asarray(values, dtype=float)
    L = len(values)
    d = np.zeros((L, L))
    for i in range(L):
        diff = np.abs(values[i + 1:] - values[i]) ** p
        d[i, i + 1:] = (diff @ weights) ** (1.0 / p)
    d = d + d.T
    return PseudometricMatrix(tuple(range(L)) if labels is None else tuple(labels), d, p, provenance)


def pseudometric_matrix(cls: FunctionClass, labels, model: ProbabilityModel, p: int = 2,
                        ensemble: PathEnsemble | None = None) -> PseudometricMatrix:
    """rho_{P,p}(h, h') = (P|h - h'|^p)^(1/p) for the listed members.

    Exact when the class integrates exactly under ``model``; otherwise the
    sample points of ``ensemble`` give an estimate.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    labels = tuple(labels)
    if cls.can_integrate(model):
        if hasattr(cls, "refined") and model.law == "uniform":
            grid = cls.refined(labels)
            w = np.full(grid.shape[1], 1.0 / grid.shape[1])
            return field_pseudometric(grid, w, p, labels, "analytic")
        if model.is_finite:
            x = model.support
            cls.check_envelope(labels, x)
            return field_pseudometric(cls.evaluate(labels, x), model.probs, p, labels, "analytic")
        L = len(labels)
        d = np.zeros((L, L))
        for i, j in itertools.combinations(range(L), 2):
            d[i, j] = d[j, i] = cls.integrate([labels[i], labels[j]],
                                              lambda v: np.abs(v[0] - v[1]) ** p, model) ** (1.0 / p)
        return PseudometricMatrix(labels, d, p, "analytic")
    if ensemble is None:
        raise NoMomentSource(f"{cls.name}: no analytic moments under {model.law} and no ensemble")
    x = ensemble.paths.reshape(-1)
    cls.check_envelope(labels, x)
    w = np.repeat(ensemble.weights, ensemble.paths[0].size) / ensemble.paths[0].size
    return field_pseudometric(cls.evaluate(labels, x), w, p, labels, "ensemble-estimated")


# -- covers --------------------------------------------------------------------


@dataclass(eq=False)
class CoverReport:
    """A cover of a finite label set by open epsilon-balls."""

    epsilon: float
    N: int
    centers: list
    method: str
    disjoint_cells: list | None = None
    representatives: list | None = None
    center_index: list = field(default_factory=list, repr=False)

    def to_row(self) -> dict:
        return {"epsilon": self.epsilon, "N": self.N, "method": self.method}


def _balls(metric: PseudometricMatrix, eps: float) -> np.ndarray:
    return metric.d < eps


def _greedy_centers(metric: PseudometricMatrix, eps: float) -> list[int]:
    L = len(metric)
    if L == 0:
        return []
    centers = [0]
    mind = metric.d[0].copy()
    while mind.max() >= eps:
        nxt = int(np.argmax(mind))
        centers.append(nxt)
        np.minimum(mind, metric.d[nxt], out=mind)
    return centers


def _exact_centers(metric: PseudometricMatrix, eps: float, upper: list[int]) -> list[int]:
    L = len(metric)
    if L > EXACT_COVER_LIMIT:
        raise TooLargeForExact(f"{L} labels; exact covering is limited to {EXACT_COVER_LIMIT}")
    full = (1 << L) - 1
    masks = [sum(1 << j for j in np.flatnonzero(row)) for row in _balls(metric, eps)]
    for k in range(1, len(upper)):
        for combo in itertools.combinations(range(L), k):
            acc = 0
            for c in combo:
                acc |= masks[c]
            if acc == full:
                return list(combo)
    return sorted(upper)


def covering_number(metric: PseudometricMatrix, epsilon: float, method: str = "greedy") -> CoverReport:
    """Greedy farthest-point cover (upper bound) or exhaustive minimum cover."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    centers = _greedy_centers(metric, epsilon)
    if method == "exact":
        centers = _exact_centers(metric, epsilon, centers)
    elif method != "greedy":
        raise ValueError(f"unknown covering method {method!r}")
    return CoverReport(epsilon, len(centers), [metric.labels[c] for c in centers], method,
                       center_index=list(centers))


def disjointify_cover(report: CoverReport, metric: PseudometricMatrix) -> CoverReport:
    """Partition the labels into cells, each inside its center's ball.

    A label in several balls goes to the lowest-ordered center.  Each cell's
    representative is its center when the center is a member, otherwise its
    lowest-ordered member.  Empty cells are dropped.
    """
    centers = sorted(report.center_index or [metric.labels.index(c) for c in report.centers])
    inside = _balls(metric, report.epsilon)[centers]
    if len(metric) and not np.all(inside.any(axis=0)):
        missing = [metric.labels[j] for j in np.flatnonzero(~inside.any(axis=0))]
        raise NotACover(f"labels not covered: {missing[:5]}")
    owner = np.argmax(inside, axis=0)
    cells, reps = [], []
    for ci, c in enumerate(centers):
        members = np.flatnonzero(owner == ci)
        if len(members) == 0:
            continue
        cells.append([metric.labels[j] for j in members])
        reps.append(metric.labels[c] if c in members else metric.labels[members[0]])
    return CoverReport(report.epsilon, report.N, [metric.labels[c] for c in centers], report.method,
                       disjoint_cells=cells, representatives=reps, center_index=centers)


def covering_curve(metric: PseudometricMatrix, eps_grid, method: str = "greedy") -> list[tuple[float, int]]:
    return [(float(e), covering_number(metric, e, method).N) for e in eps_grid]


def packing_number(metric: PseudometricMatrix, epsilon: float, method: str = "exact") -> tuple[int, list]:
    """Largest set of labels with pairwise distances at least epsilon.

    Returns (size, labels).  ``exact`` solves a maximum clique problem.
    """
    L = len(metric)
    if L == 0:
        return 0, []
    if method == "greedy":
        chosen = []
        for j in range(L):
            if all(metric.d[j, c] >= epsilon for c in chosen):
                chosen.append(j)
    else:
        g = nx.Graph()
        g.add_nodes_from(range(L))
        ii, jj = np.nonzero(np.triu(metric.d >= epsilon, 1))
        g.add_edges_from(zip(ii.tolist(), jj.tolist()))
        chosen, _ = nx.max_weight_clique(g, weight=None)
        chosen = sorted(chosen)
    return len(chosen), [metric.labels[j] for j in chosen]


def sudakov_diagnostic(curve) -> list[tuple[float, float]]:
    """(eps, eps^2 log N) for each (eps, N) pair."""
    out = []
    for eps, N in curve:
        if N < 1:
            raise ValueError("covering numbers must be at least 1")
        out.append((float(eps), float(eps) ** 2 * math.log(N)))
    return out


def difference_field(values: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """X(t) - X(s) for every ordered label pair; values (L, R) -> (L*L, R)."""
    values = np.asarray(values, dtype=float)
    L = len(values)
    pairs = [(t, s) for t in range(L) for s in range(L)]
    diff = (values[:, None, :] - values[None, :, :]).reshape(L * L, -1)
    return diff, pairs


# -- brackets ------------------------------------------------------------------


@dataclass(eq=False)
class BracketReport:
    """Brackets [min of cell, max of cell] covering a finite class."""

    epsilon: float
    N: int
    cells: list
    widths: list
    method: str = "greedy"

    @property
    def brackets(self) -> list[tuple[tuple, tuple]]:
        return [(("min", tuple(c)), ("max", tuple(c))) for c in self.cells]

    def check(self, cls: FunctionClass, points) -> bool:
        """Every member lies between some bracket's bounds at every point."""
        points = np.asarray(points, dtype=float)
        ok = {lab: False for lab in cls.labels}
        for cell in self.cells:
            v = cls.evaluate(cell, points)
            lo, hi = v.min(axis=0), v.max(axis=0)
            for lab in cls.labels:
                if not ok[lab]:
                    h = cls.evaluate([lab], points)[0]
                    ok[lab] = bool(np.all((lo <= h) & (h <= hi)))
        return all(ok.values()) and all(w < self.epsilon for w in self.widths)


def bracket_width(cls: FunctionClass, labels, model: ProbabilityModel, p: int = 2) -> float:
    """rho_{P,p}(max of members, min of members)."""
    return cls.integrate(list(labels), lambda v: (v.max(axis=0) - v.min(axis=0)) ** p, model) ** (1.0 / p)


def bracketing_number(cls: FunctionClass, labels, model: ProbabilityModel, epsilon: float,
                      p: int = 2, method: str = "greedy") -> BracketReport:
    """Greedy (upper bound) or exhaustive min/max-envelope bracketing."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    labels = list(labels)
    if method == "exact":
        return _exact_brackets(cls, labels, model, epsilon, p)
    if method != "greedy":
        raise ValueError(f"unknown bracketing method {method!r}")
    todo = list(labels)
    cells, widths = [], []
    while todo:
        cell = [todo.pop(0)]
        width = 0.0
        for lab in list(todo):
            w = bracket_width(cls, cell + [lab], model, p)
            if w < epsilon:
                cell.append(lab)
                todo.remove(lab)
                width = w
        cells.append(cell)
        widths.append(width)
    return BracketReport(epsilon, len(cells), cells, widths, "greedy")


def _exact_brackets(cls, labels, model, epsilon, p) -> BracketReport:
    """Minimum partition into min/max brackets of width < epsilon, by subset DP."""
    L = len(labels)
    if L > EXACT_BRACKET_LIMIT:
        raise TooLargeForExact(f"{L} labels; exact bracketing is limited to {EXACT_BRACKET_LIMIT}")
    full = (1 << L) - 1
    width = {}
    for mask in range(1, full + 1):
        members = [labels[j] for j in range(L) if mask >> j & 1]
        width[mask] = bracket_width(cls, members, model, p) if len(members) > 1 else 0.0
    best = {0: (0, None)}
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        cand = None
        sub = rest
        while True:
            cell = sub | low
            if width[cell] < epsilon:
                n = best[mask ^ cell][0] + 1
                if cand is None or n < cand[0]:
                    cand = (n, cell)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        best[mask] = cand
    cells, widths, mask = [], [], full
    while mask:
        cell = best[mask][1]
        cells.append([labels[j] for j in range(L) if cell >> j & 1])
        widths.append(width[cell])
        mask ^= cell
    order = sorted(range(len(cells)), key=lambda c: labels.index(cells[c][0]))
    return BracketReport(epsilon, len(cells), [cells[c] for c in order], [widths[c] for c in order], "exact")
