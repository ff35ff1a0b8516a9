"""Empirical processes over function classes and finite-n condition diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .classes import FunctionClass, StepClass, suzuki_budget_level, suzuki_union
from .covering import (PseudometricMatrix, covering_number, pseudometric_matrix,
                       sudakov_diagnostic)
from .errors import LipschitzViolation, OracleMissing
from .finite_approx import RandomField, default_eps_sequence, e_tilde_sup, net_schedule
from .reports import IDENT_TOL, BoundReport
from .sampling import PathEnsemble, ProbabilityModel, enumerate_paths, expectation, sample_paths


# -- empirical process ---------------------------------------------------------


@dataclass(eq=False)
class EmpiricalField:
    """G_n h = n^(-1/2) sum_k (h(X_k) - P h) for each label and replication.

    ``sample`` has shape (R, n); ``values`` has shape (L, R).
    """

    labels: tuple
    sample: np.ndarray
    centering: np.ndarray
    values: np.ndarray
    ensemble: PathEnsemble | None = None

    @property
    def n(self) -> int:
        return self.sample.shape[1]

    def recompute(self, cls: FunctionClass) -> np.ndarray:
        h = cls.evaluate(self.labels, self.sample)
        return (h.sum(axis=2) - self.n * self.centering[:, None]) / math.sqrt(self.n)

    def empirical_means(self) -> np.ndarray:
        """P_n h for each label and replication."""
        return self.values / math.sqrt(self.n) + self.centering[:, None]


def _step_sums(cls: StepClass, labels, sample: np.ndarray) -> np.ndarray:
    """sum_k h(X_k) via cell counts on the common refinement."""
    grid = cls.refined(labels)
    K = grid.shape[1]
    cell = np.clip(np.floor(sample * K).astype(int), 0, K - 1)
    counts = np.zeros((len(sample), K))
    np.add.at(counts, (np.arange(len(sample))[:, None], cell), 1.0)
    return grid @ counts.T


def empirical_field(cls: FunctionClass, labels, model: ProbabilityModel, n: int, seed: int,
                    R: int = 1, workers: int = 1, quadrature: bool = False,
                    ensemble: PathEnsemble | None = None) -> EmpiricalField:
    """Empirical process values on R independent samples of size n (common across labels)."""
    labels = tuple(labels)
    center = cls.centering(labels, model, quadrature=quadrature)
    ens = ensemble if ensemble is not None else sample_paths(model, n, R, seed, workers)
    sample = ens.paths
    if isinstance(cls, StepClass) and model.law == "uniform":
        sums = _step_sums(cls, labels, sample)
    else:
        sums = cls.evaluate(labels, sample).sum(axis=2)
    values = (sums - n * center[:, None]) / math.sqrt(n)
    return EmpiricalField(labels, sample, center, values, ens)


def iid_supremal_bound(cls: FunctionClass, labels, model: ProbabilityModel, n: int, R: int = 1000,
                       seed: int = 0, workers: int = 1) -> BoundReport:
    """E~[sup_h |sqrt(n) G_n h|] <= sqrt(3n sup P h^2 + 6 (P H^2 + 3 (P H)^2)).

    The left side is estimated along an epsilon-net schedule of rho_{P,2},
    with every label evaluated on the same samples.
    """
    labels = tuple(labels)
    sup_sq = cls.sup_square_mean(labels, model)
    PH, PH2 = cls.envelope_moments(model)
    rhs = math.sqrt(3 * n * sup_sq + 6 * (PH2 + 3 * PH**2))
    emp = empirical_field(cls, labels, model, n, seed, R, workers)
    metric = pseudometric_matrix(cls, labels, model, 2)
    schedule = net_schedule(metric, default_eps_sequence(metric))
    est = e_tilde_sup(RandomField(labels, math.sqrt(n) * emp.values), emp.ensemble, 1, schedule)
    return BoundReport(f"iid supremal {cls.name} n={n}", est.e_tilde, rhs, lhs_se=est.e_tilde_se,
                       provenance="montecarlo",
                       params={"n": n, "R": R, "seed": seed, "sup_Ph2": sup_sq, "PH": PH, "PH2": PH2,
                               "stages": [len(F) for F in schedule], "rhs_provenance": "closed-form"})


# -- the Suzuki exhibit --------------------------------------------------------


def suzuki_crude_bound(n: int) -> float:
    """sqrt(3/n + 24/n^2): the supremal bound with sup P h^2 <= 1, P H^2 = P H = 1, divided by n."""
    return math.sqrt(3 / n + 24 / n**2)


def suzuki_sharp_bound(n: int) -> float:
    return math.sqrt(1 / n + 1 / (4 * n**2))


def _cell_counts(sample: np.ndarray, cells: int) -> np.ndarray:
    idx = np.clip(np.floor(sample * cells).astype(int), 0, cells - 1)
    out = np.zeros((len(sample), cells), dtype=int)
    np.add.at(out, (np.arange(len(sample))[:, None], idx), 1)
    return out


def suzuki_level_sup(sample: np.ndarray, m: int) -> np.ndarray:
    """max over H_m of |P_n h - 1/2| per replication.

    The best member takes the m fullest of the 2m cells; by complementation the
    worst member gives the same distance from 1/2.
    """
    n = sample.shape[1]
    c = np.sort(_cell_counts(sample, 2 * m), axis=1)[:, ::-1]
    return c[:, :m].sum(axis=1) / n - 0.5


def suzuki_witness(points: np.ndarray, m: int) -> tuple[int, ...]:
    """Cells of an H_m member containing every sample point (needs m >= number of occupied cells)."""
    occ = sorted(set(np.clip(np.floor(points * 2 * m).astype(int), 0, 2 * m - 1).tolist()))
    if len(occ) > m:
        raise ValueError(f"{len(occ)} occupied cells exceed m = {m}")
    free = [j for j in range(2 * m) if j not in occ]
    return tuple(sorted(occ + free[: m - len(occ)]))


@dataclass(eq=False)
class SuzukiExhibit:
    n: int
    m_max: int
    R: int
    seed: int
    sup_values: np.ndarray          # (R,) sup over H_n of |P_n h - 1/2|
    witness_means: np.ndarray       # (R,) P_n of the constructed witness
    level_table: list               # (M, labels, E max over H_1..H_M, se)
    e_tilde: float
    e_tilde_se: float
    label_budget: int
    truncation: int
    schedule_sizes: list
    extra: dict = field(default_factory=dict)

    @property
    def crude(self) -> float:
        return suzuki_crude_bound(self.n)

    @property
    def sharp(self) -> float:
        return suzuki_sharp_bound(self.n)

    def reports(self) -> list[BoundReport]:
        dev = float(np.max(np.abs(self.sup_values - 0.5)))
        out = [
            BoundReport(f"suzuki n={self.n} sup|P_n h - 1/2| = 1/2 on every sample", 0.5 + dev, 0.5,
                        relation="eq", tol=IDENT_TOL, provenance="montecarlo",
                        params={"R": self.R, "seed": self.seed, "max_deviation": dev}),
            BoundReport(f"suzuki n={self.n} witness has P_n h = 1", float(self.witness_means.min()), 1.0,
                        relation="eq", tol=IDENT_TOL, provenance="montecarlo"),
            BoundReport(f"suzuki n={self.n} E~ truncated vs sharpened bound", self.e_tilde, self.sharp,
                        lhs_se=self.e_tilde_se, provenance="montecarlo",
                        params={"label_budget": self.label_budget, "truncation_M": self.truncation,
                                "stages": self.schedule_sizes, "rhs_provenance": "closed-form"}),
            BoundReport(f"suzuki n={self.n} crude bound", self.crude, self.crude, relation="eq",
                        provenance="closed-form", diagnostic=True),
            BoundReport(f"suzuki n={self.n} sharpened bound", self.sharp, self.sharp, relation="eq",
                        provenance="closed-form", diagnostic=True),
            BoundReport(f"suzuki n={self.n} E~ over the whole class vs sharpened bound", 0.5, self.sharp,
                        provenance="exact", diagnostic=True,
                        params={"note": "H_n is a finite subset with E max = 1/2"}),
        ]
        for M, size, val, se in self.level_table:
            out.append(BoundReport(f"suzuki n={self.n} truncation M={M} vs sharpened bound", val, self.sharp,
                                   lhs_se=se, provenance="montecarlo", diagnostic=True,
                                   params={"M": M, "labels": size}))
        return out

    def to_rows(self) -> list[dict]:
        return [{"n": self.n, "M": M, "labels": size, "E_max": val, "se": se,
                 "sharp_bound": self.sharp, "crude_bound": self.crude}
                for M, size, val, se in self.level_table]


def suzuki_exhibit(n: int, m_max: int | None = None, R: int = 1000, seed: int = 0,
                   label_budget: int = 100, workers: int = 1) -> SuzukiExhibit:
    """The Suzuki class on R uniform samples of size n.

    Checks that sup over H_n of |P_n h - 1/2| is exactly 1/2 on every sample
    (with an explicit witness), tabulates E[max over H_1..H_M] for
    M = 1..m_max, and estimates E~ on a net schedule of the largest union
    H_1..H_M with at most ``label_budget`` labels.
    """
    m_max = n if m_max is None else m_max
    if m_max < n:
        raise ValueError("m_max must be at least n")
    ens = sample_paths(ProbabilityModel.uniform(), n, R, seed, workers)
    sample = ens.paths
    sup_n = suzuki_level_sup(sample, n)
    wit = np.empty(R)
    for r in range(R):
        cells = np.zeros(2 * n)
        cells[list(suzuki_witness(sample[r], n))] = 1.0
        idx = np.clip(np.floor(sample[r] * 2 * n).astype(int), 0, 2 * n - 1)
        wit[r] = cells[idx].mean()

    running = np.zeros(R)
    table, size = [], 0
    for M in range(1, m_max + 1):
        running = np.maximum(running, suzuki_level_sup(sample, M))
        size += math.comb(2 * M, M)
        est = expectation(ens, running)
        table.append((M, size, est.value, est.se))

    M = suzuki_budget_level(label_budget)
    cls = suzuki_union(M)
    labels = cls.labels
    sums = _step_sums(cls, labels, sample)
    fld = RandomField(labels, np.abs(sums / n - 0.5))
    metric = pseudometric_matrix(cls, labels, ProbabilityModel.uniform(), 2)
    schedule = net_schedule(metric, default_eps_sequence(metric))
    est = e_tilde_sup(fld, ens, 1, schedule, universe_finite=False)
    return SuzukiExhibit(n, m_max, R, seed, sup_n, wit, table, est.e_tilde, est.e_tilde_se,
                         label_budget, M, [len(F) for F in schedule])


def suzuki_exact_truncations(n: int, M_values) -> dict[int, float]:
    """E[max over H_1..H_M of |P_n h - 1/2|] by exact enumeration of cell patterns."""
    K = math.lcm(*[2 * m for m in range(1, max(M_values) + 1)])
    model = ProbabilityModel.finite((np.arange(K) + 0.5) / K)
    ens = enumerate_paths(model, n)
    out, running = {}, np.zeros(ens.size)
    for M in range(1, max(M_values) + 1):
        running = np.maximum(running, suzuki_level_sup(ens.paths, M))
        if M in M_values:
            out[M] = float(ens.weights @ running)
    return out


# -- condition diagnostics ------------------------------------------------------


@dataclass(eq=False)
class IIDField:
    """X(t, V) over a finite label grid with V i.i.d. from ``model``.

    ``func(labels_array, v)`` returns values of shape (L,) + v.shape; the
    optional ``lipschitz(v)`` is a witness L with |X(s) - X(t)| <= L rho(s, t).
    Every conditional moment of the triangular array c_n X(t, V_k) is an
    unconditional moment of X, computed by quadrature or exact summation.
    """

    model: ProbabilityModel
    labels: tuple
    func: Callable
    lipschitz: Callable | None = None
    breakpoints: tuple = ()

    def values(self, v) -> np.ndarray:
        return np.asarray(self.func(np.asarray(self.labels, dtype=float), np.asarray(v, dtype=float)),
                          dtype=float)

    def expect(self, fn: Callable) -> float:
        return self.model.expect(lambda v: fn(self.values(v)), points=list(self.breakpoints) or None)

    def covariance(self) -> np.ndarray:
        L = len(self.labels)
        C = np.empty((L, L))
        for i in range(L):
            for j in range(i, L):
                C[i, j] = C[j, i] = self.expect(lambda x: x[i] * x[j])
        return C

    def metric(self) -> PseudometricMatrix:
        L = len(self.labels)
        d = np.zeros((L, L))
        for i in range(L):
            for j in range(i + 1, L):
                d[i, j] = d[j, i] = math.sqrt(self.expect(lambda x: (x[i] - x[j]) ** 2))
        return PseudometricMatrix(self.labels, d, 2, "analytic")


def linear_field(k: int = 10, law: str = "uniform") -> IIDField:
    """X(t) = t (2V - 1) on t = j/k; rho(s, t) = |s - t| / sqrt(3), L = |2V - 1| sqrt(3)."""
    model = ProbabilityModel.uniform() if law == "uniform" else ProbabilityModel.rademacher()
    z = (lambda v: 2 * v - 1) if law == "uniform" else (lambda v: v)
    scale = math.sqrt(3) if law == "uniform" else 1.0
    return IIDField(model, tuple(j / k for j in range(k + 1)),
                    lambda t, v: np.multiply.outer(t, z(v)),
                    lipschitz=lambda v: np.abs(z(v)) * scale,
                    breakpoints=(0.5,) if law == "uniform" else ())


@dataclass
class TightnessDiagnostics:
    n: int
    lindeberg_max: float
    modulus: dict
    partition_stat: list
    lipschitz_budget: float | None
    covariances: np.ndarray

    def to_dict(self) -> dict:
        return {"n": self.n, "lindeberg_max": self.lindeberg_max,
                "modulus": {repr(k): v for k, v in self.modulus.items()},
                "partition_stat": self.partition_stat, "lipschitz_budget": self.lipschitz_budget}


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log y against log x (nan when any y is 0)."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if np.any(ys <= 0):
        return math.nan
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def tightness_diagnostics(fld, n_grid, rho: PseudometricMatrix | None = None, partitions=(),
                          delta_grid=(), eps: float = 0.1) -> list[TightnessDiagnostics]:
    """Finite-n condition statistics for zeta^{n,t}_k = n^(-1/2) X_k(t), k <= n.

    With i.i.d. rows every sum over k of n^(-1) times a conditional moment
    collapses to that moment, so only the Lindeberg statistic depends on n:
    max_k E[sup zeta^2 1{sup|zeta| > eps}] = E[sup X^2 1{sup|X| > sqrt(n) eps}] / n.
    The modulus uses pairs with rho(s, t) <= delta.
    """
    if not isinstance(fld, IIDField):
        raise OracleMissing("diagnostics need an analytic i.i.d. field model")
    rho = fld.metric() if rho is None else rho
    L = len(fld.labels)
    pairvar = np.zeros((L, L))
    for i in range(L):
        for j in range(i + 1, L):
            pairvar[i, j] = pairvar[j, i] = fld.expect(lambda x: (x[i] - x[j]) ** 2)
    modulus = {}
    for delta in sorted(delta_grid):
        close = rho.d <= delta
        modulus[delta] = float(pairvar[close].max()) if close.any() else 0.0
    part = []
    for cells in partitions:
        vals = []
        for cell in cells:
            idx = [fld.labels.index(t) for t in cell]
            vals.append(fld.expect(lambda x: (x[idx].max(axis=0) - x[idx].min(axis=0)) ** 2))
        part.append(float(max(vals)))
    budget = fld.model.expect(lambda v: fld.lipschitz(v) ** 2) if fld.lipschitz else None
    cov = fld.covariance()
    out = []
    for n in n_grid:
        thr = math.sqrt(n) * eps

        def lind(x, thr=thr):
            s = np.abs(x).max(axis=0)
            return s**2 * (s > thr)

        pts = sorted(set(fld.breakpoints) | _level_points(fld, thr))
        val = fld.model.expect(lambda v: lind(fld.values(v)), points=pts or None) / n
        out.append(TightnessDiagnostics(int(n), float(val), modulus, part, budget, cov))
    return out


def _level_points(fld: IIDField, thr: float) -> set:
    # for the uniform linear field the indicator switches where |2v - 1| = thr
    if fld.model.law == "uniform" and 0 < thr < 1:
        return {(1 - thr) / 2, (1 + thr) / 2}
    return set()


def trend_summary(diags: list[TightnessDiagnostics]) -> dict:
    ns = [d.n for d in diags]
    vals = [d.lindeberg_max for d in diags]
    return {"n": ns, "lindeberg_max": vals, "loglog_slope": loglog_slope(ns, vals)}


def clt_marginal_check(fld: IIDField, pair, n_grid, R: int = 200, seed: int = 0, workers: int = 1) -> dict:
    """Covariance accumulations sum_k zeta^s_k zeta^t_k against C(s, t), plus a KS distance.

    The KS statistic compares the standardized G_n(s) across replications
    with the standard normal; it is a diagnostic only.
    """
    s, t = pair
    i, j = fld.labels.index(s), fld.labels.index(t)
    C = fld.expect(lambda x: x[i] * x[j])
    Css = fld.expect(lambda x: x[i] ** 2)
    rows = []
    for n in n_grid:
        ens = sample_paths(fld.model, int(n), R, seed, workers)
        x = fld.values(ens.paths)
        acc = (x[i] * x[j]).mean(axis=1)
        est = expectation(ens, acc)
        g = x[i].sum(axis=1) / math.sqrt(n)
        ks = float(stats.kstest(g / math.sqrt(Css), "norm").statistic) if Css > 0 else math.nan
        rows.append({"n": int(n), "accumulation": est.value, "se": est.se, "C": C,
                     "z": (est.value - C) / est.se if est.se > 0 else 0.0, "ks": ks})
    return {"pair": [s, t], "C": C, "rows": rows}


def jain_marcus_check(fld: IIDField, rho: PseudometricMatrix | None = None, lipschitz: Callable | None = None,
                      n_grid=(10, 100, 1000), R: int = 100, seed: int = 0, tol: float = 1e-12) -> dict:
    """Pathwise |X(s) - X(t)| <= L rho(s, t) on sampled points, and the L^2 budget per n.

    The budget sum_k E[(L^n_k)^2 | F_{k-1}] with L^n_k = n^(-1/2) L(V_k) is
    estimated from the sample at each n; it equals E[L^2] for every n.
    """
    rho = fld.metric() if rho is None else rho
    lip = lipschitz or fld.lipschitz
    if lip is None:
        raise ValueError("a Lipschitz witness is required")
    worst = (-math.inf, None, None)
    budget = []
    for n in n_grid:
        ens = sample_paths(fld.model, int(n), R, seed)
        v = ens.paths.reshape(-1)
        x = fld.values(v)
        Lv = np.asarray(lip(v), dtype=float)
        for a in range(len(fld.labels)):
            diff = np.abs(x[a] - x[a + 1:]) - Lv[None, :] * rho.d[a, a + 1:, None]
            if diff.size:
                b, r = np.unravel_index(np.argmax(diff), diff.shape)
                if diff[b, r] > worst[0]:
                    worst = (float(diff[b, r]), (fld.labels[a], fld.labels[a + 1 + b]), float(v[r]))
        est = expectation(ens, (Lv.reshape(ens.paths.shape) ** 2).sum(axis=1) / n)
        budget.append({"n": int(n), "budget": est.value, "se": est.se})
    if worst[0] > tol:
        raise LipschitzViolation(f"Lipschitz witness fails on pair {worst[1]} by {worst[0]:.3g}",
                                 pair=worst[1], path=worst[2], excess=worst[0])
    exact = fld.model.expect(lambda v: np.asarray(lip(v)) ** 2)
    return {"max_excess": worst[0], "budget": budget, "E_L2": exact}


def donsker_diagnostic(cls: FunctionClass, universes, model: ProbabilityModel, eps_grid,
                       method: str = "auto") -> dict:
    """Covering numbers and eps^2 log N across nested truncations of a class.

    ``method="auto"`` uses the exact search up to its size limit and the
    greedy cover beyond.
    """
    rows = []
    for labels in universes:
        metric = pseudometric_matrix(cls, labels, model, 2)
        m = method if method != "auto" else ("exact" if len(labels) <= 20 else "greedy")
        curve = [(float(e), covering_number(metric, e, m).N) for e in eps_grid]
        rows.append({"labels": len(labels), "method": m, "curve": curve,
                     "sudakov": sudakov_diagnostic(curve)})
    growth = {}
    for j, e in enumerate(eps_grid):
        Ns = [r["curve"][j][1] for r in rows]
        growth[float(e)] = "growth" if Ns[-1] > Ns[0] else "flat"
    return {"class": cls.name, "rows": rows, "trend": growth}
