"""Oracle maximal inequality constructions and martingale supremal bounds.

For a finite family of submartingales X^i = A^i + M^i started at 0, the
selector Y^i_n marks the (lowest-labelled) maximizer of X^i_n.  From its
predictable projection pY and compensator Y^p two martingales M', M'' are
built, and the pathwise oracle inequality

    max_i X^i_n <= 2 sum_{k<=n} max_i dA^i_k + E[max_i dX^i_n | F_{n-1}]
                   + M'_n + (M''_n - M''_{n-1})

is evaluated on every path and time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .covering import covering_number, field_pseudometric
from .errors import CaseUndeclared, InvalidProcessShape, ModeError, OracleMissing, TimeKindError
from .finite_approx import RandomField, e_tilde_sup
from .martingale import (AdaptedProcess, TimeRule, doob_decompose, evaluate_time,
                         martingale_defect, predictable_compensator, predictable_projection)
from .reports import IDENT_TOL, INEQ_TOL, BoundReport
from .sampling import PathEnsemble, ProbabilityModel, enumerate_paths, expectation

OMI_VARIANTS = ("literal", "single-max", "lagged")


# -- martingale arrays ---------------------------------------------------------


class IIDOracle:
    """Conditional moments of xi^i_k = g_i(V_k) with V_k i.i.d.: constants in k."""

    def __init__(self, model: ProbabilityModel, funcs: Sequence[Callable]):
        self.model = model
        self.funcs = list(funcs)

    def _stack(self, idx, v):
        return np.stack([np.asarray(self.funcs[i](v), dtype=float) for i in idx])

    def second_moments(self, idx) -> np.ndarray:
        return np.array([self.model.expect(lambda v, i=i: np.asarray(self.funcs[i](v)) ** 2) for i in idx])

    def max_second_moment(self, idx) -> float:
        return self.model.expect(lambda v: (self._stack(idx, v) ** 2).max(axis=0))


@dataclass(eq=False)
class MartingaleArray:
    """Martingale differences xi^i_k, shape (L, R, n+1) with xi^i_0 = 0.

    Conditional second moments come from the exact ensemble or from an
    analytic ``oracle``.
    """

    ensemble: PathEnsemble
    labels: tuple
    xi: np.ndarray
    oracle: IIDOracle | None = None
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.xi = np.asarray(self.xi, dtype=float)
        n1 = self.ensemble.n_steps + 1
        if self.xi.shape != (len(self.labels), self.ensemble.size, n1):
            raise InvalidProcessShape(f"xi must have shape ({len(self.labels)}, {self.ensemble.size}, {n1})")
        if np.any(self.xi[:, :, 0] != 0):
            raise InvalidProcessShape("xi_0 must be 0")
        if not np.all(np.isfinite(self.xi)):
            raise InvalidProcessShape("xi must be finite")
        if not self.ensemble.exact and self.oracle is None:
            raise OracleMissing("a Monte Carlo array needs an analytic conditional-moment oracle")
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        if self.ensemble.exact and self.martingale_defect() > IDENT_TOL:
            raise InvalidProcessShape("xi is not a martingale difference array")

    @classmethod
    def from_innovations(cls, ensemble: PathEnsemble, funcs: Sequence[Callable], labels=None):
        """xi^i_k = funcs[i](V_k); the oracle is attached in Monte Carlo mode."""
        labels = tuple(range(len(funcs))) if labels is None else tuple(labels)
        xi = np.zeros((len(funcs), ensemble.size, ensemble.n_steps + 1))
        for i, g in enumerate(funcs):
            xi[i, :, 1:] = np.asarray(g(ensemble.paths), dtype=float).reshape(ensemble.size, -1)
        oracle = None if ensemble.exact else IIDOracle(ensemble.model, funcs)
        return cls(ensemble, labels, xi, oracle)

    @classmethod
    def walks(cls, ensemble: PathEnsemble, labels=None):
        """One label per innovation component (a single label for scalar innovations)."""
        d = 1 if ensemble.paths.ndim == 2 else ensemble.paths.shape[2]
        if ensemble.paths.ndim == 2:
            funcs = [lambda v: v]
        else:
            funcs = [lambda v, j=j: v[..., j] for j in range(d)]
        return cls.from_innovations(ensemble, funcs, labels)

    def idx(self, labels=None) -> list[int]:
        if labels is None:
            return list(range(len(self.labels)))
        return [self._index[lab] for lab in labels]

    @property
    def horizon(self) -> int:
        return self.ensemble.n_steps

    def sums(self, labels=None) -> np.ndarray:
        """S^i_n = sum_{k<=n} xi^i_k, shape (m, R, n+1)."""
        return np.cumsum(self.xi[self.idx(labels)], axis=2)

    def martingale_defect(self) -> float:
        ens = self.ensemble
        if not ens.exact:
            raise ModeError("martingale tests need an exact ensemble")
        return max((float(np.max(np.abs(ens.condition(self.xi[:, :, k], k - 1))))
                    for k in range(1, ens.n_steps + 1)), default=0.0)

    def cond_sq(self, labels=None) -> np.ndarray:
        """E[(xi^i_k)^2 | F_{k-1}], shape (m, R, n+1), zero at k = 0."""
        idx = self.idx(labels)
        ens = self.ensemble
        out = np.zeros((len(idx), ens.size, ens.n_steps + 1))
        if ens.exact:
            sq = self.xi[idx] ** 2
            for k in range(1, ens.n_steps + 1):
                out[:, :, k] = ens.condition(sq[:, :, k], k - 1)
        else:
            out[:, :, 1:] = self.oracle.second_moments(idx)[:, None, None]
        return out

    def cond_max_sq(self, labels=None) -> np.ndarray:
        """E[max_i (xi^i_k)^2 | F_{k-1}], shape (R, n+1), zero at k = 0."""
        idx = self.idx(labels)
        ens = self.ensemble
        out = np.zeros((ens.size, ens.n_steps + 1))
        if ens.exact:
            mx = (self.xi[idx] ** 2).max(axis=0)
            for k in range(1, ens.n_steps + 1):
                out[:, k] = ens.condition(mx[:, k], k - 1)
        else:
            out[:, 1:] = self.oracle.max_second_moment(idx)
        return out

    def dominating_terms(self, labels=None) -> tuple[np.ndarray, np.ndarray]:
        """(sum_{k<=n} max_i E[xi^2|F_{k-1}], max_{k<=n} E[max_i xi^2|F_{k-1}]), each (R, n+1)."""
        cs = self.cond_sq(labels).max(axis=0)
        return np.cumsum(cs, axis=1), np.maximum.accumulate(self.cond_max_sq(labels), axis=1)


def fair_walks(n_steps: int, count: int = 1) -> MartingaleArray:
    """``count`` independent fair +-1 walks, exactly enumerated."""
    model = ProbabilityModel.product(*[ProbabilityModel.rademacher()] * count) if count > 1 \
        else ProbabilityModel.rademacher()
    return MartingaleArray.walks(enumerate_paths(model, n_steps))


def _provenance(ens: PathEnsemble) -> str:
    return "exact" if ens.exact else "montecarlo"


# -- OMI certificate -----------------------------------------------------------


@dataclass(eq=False)
class OmiCertificate:
    """Every object of the oracle-inequality construction, on every path.

    Arrays indexed by label have shape (L, R, n+1); per-path processes have
    shape (R, n+1).  ``lhs`` and ``rhs`` are defined for n >= 1 (column 0 is 0).
    """

    ensemble: PathEnsemble
    labels: tuple
    variant: str
    X: np.ndarray
    A: np.ndarray
    M: np.ndarray
    Y: np.ndarray
    pY: np.ndarray
    Yp: np.ndarray
    Mprime: np.ndarray
    Mdoubleprime: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    drift_term: np.ndarray
    oracle_term: np.ndarray

    @property
    def margins(self) -> np.ndarray:
        """rhs - lhs, shape (R, n)."""
        return (self.rhs - self.lhs)[:, 1:]

    @property
    def min_margin(self) -> float:
        return float(self.margins.min()) if self.margins.size else 0.0

    def holds(self, tol: float = INEQ_TOL) -> bool:
        return self.min_margin >= -tol

    def violations(self, tol: float = INEQ_TOL) -> list[dict]:
        """Every (path, time) with margin below -tol, with the path prefix."""
        r, k = np.nonzero(self.margins < -tol)
        return [{"path": self.ensemble.paths[i].tolist(), "n": int(j + 1),
                 "margin": float(self.margins[i, j]), "weight": float(self.ensemble.weights[i])}
                for i, j in zip(r, k)]

    def selector_defect(self) -> int:
        """Number of (path, time) cells where Y fails to be a lowest-label argmax indicator."""
        bad = np.abs(self.Y.sum(axis=0) - 1) > 0
        bad |= np.any((self.Y == 1) & (self.X < self.X.max(axis=0)), axis=0)
        bad |= np.any((self.Y != 0) & (self.Y != 1), axis=0)
        return int(bad.sum())

    def martingale_defects(self) -> tuple[float, float]:
        return (martingale_defect(self.Mprime, self.ensemble),
                martingale_defect(self.Mdoubleprime, self.ensemble))

    def expectation_form(self) -> tuple[np.ndarray, np.ndarray]:
        """E[max_i X_n] and E[2 sum max dA + max dX_n] for n = 1..N (martingale terms dropped)."""
        w = self.ensemble.weights
        return w @ self.lhs[:, 1:], w @ (self.drift_term + self.oracle_term)[:, 1:]

    def reports(self, family: str = "family", tol: float = INEQ_TOL) -> list[BoundReport]:
        """Worst pathwise margin per time, plus the two martingale certificates."""
        out = []
        size = len(self.labels)
        for n in range(1, self.ensemble.n_steps + 1):
            j = int(np.argmin(self.rhs[:, n] - self.lhs[:, n]))
            out.append(BoundReport(f"omi {family} n={n}", float(self.lhs[j, n]), float(self.rhs[j, n]),
                                   tol=tol, params={"family": family, "n": n, "size": size,
                                                    "worst_path": self.ensemble.paths[j].tolist(),
                                                    "variant": self.variant}))
        d1, d2 = self.martingale_defects()
        out.append(BoundReport(f"omi {family} M' martingale", d1, 0.0, relation="eq", tol=IDENT_TOL,
                               params={"family": family}))
        out.append(BoundReport(f"omi {family} M'' martingale", d2, 0.0, relation="eq", tol=IDENT_TOL,
                               params={"family": family}))
        return out

    def to_rows(self, family: str = "family") -> list[dict]:
        rows = []
        for n in range(1, self.ensemble.n_steps + 1):
            for r in range(self.ensemble.size):
                m = float(self.rhs[r, n] - self.lhs[r, n])
                rows.append({"family": family, "n": n, "size": len(self.labels), "path": r,
                             "lhs": float(self.lhs[r, n]), "rhs": float(self.rhs[r, n]),
                             "margin": m, "verdict": "pass" if m >= -INEQ_TOL else "fail"})
        return rows


def _selector(X: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximizer: ties go to the lowest label
    am = np.argmax(X, axis=0)
    return (np.arange(len(X))[:, None, None] == am[None]).astype(float)


def omi_construct(X, ensemble: PathEnsemble, labels=None, variant: str = "literal") -> OmiCertificate:
    """Build Y, pY, Y^p, M', M'' and both sides of the oracle inequality.

    ``variant`` selects the reading of the construction:

    * ``"literal"``: M' uses the coefficient pY_{k-1} - dY^p_k and every
      label's m_k term carries its own copy of the centred max increment;
    * ``"single-max"``: as literal, but the centred max increment enters once;
    * ``"lagged"``: M' uses the coefficient pY_{k-1} - Y^p_{k-1}, with a
      single max increment.
    """
    if variant not in OMI_VARIANTS:
        raise ValueError(f"variant must be one of {OMI_VARIANTS}")
    if not ensemble.exact:
        raise ModeError("the oracle construction needs exact conditional expectations")
    X = np.asarray([x.values if isinstance(x, AdaptedProcess) else x for x in X], dtype=float)
    L = len(X)
    if L == 0:
        raise ValueError("need at least one process")
    labels = tuple(range(L)) if labels is None else tuple(labels)
    n = ensemble.n_steps
    R = ensemble.size

    A = np.empty_like(X)
    M = np.empty_like(X)
    for i in range(L):
        dec = doob_decompose(X[i], ensemble)
        A[i], M[i] = dec.A.values, dec.M.values

    Y = _selector(X)
    pY = np.stack([predictable_projection(Y[i], ensemble).values for i in range(L)])
    Yp = np.stack([predictable_compensator(Y[i], ensemble).values for i in range(L)])

    dX, dA, dM, dYp = (np.diff(v, axis=2) for v in (X, A, M, Yp))
    if variant == "lagged":
        coef = pY[:, :, :-1] - Yp[:, :, :-1]
    else:
        coef = pY[:, :, :-1] - dYp
    innov = X[:, :, :-1] * (Y[:, :, 1:] - pY[:, :, 1:])
    dMprime = (coef * (dX - dA)).sum(axis=0) + innov.sum(axis=0)
    Mprime = np.zeros((R, n + 1))
    np.cumsum(dMprime, axis=1, out=Mprime[:, 1:])

    mx = dX.max(axis=0)
    Emx = np.stack([ensemble.condition(mx[:, k - 1], k - 1) for k in range(1, n + 1)], axis=1) \
        if n else np.zeros((R, 0))
    copies = L if variant == "literal" else 1
    dMpp = (-pY[:, :, 1:] * dM + innov).sum(axis=0) + copies * (mx - Emx)
    Mpp = np.zeros((R, n + 1))
    np.cumsum(dMpp, axis=1, out=Mpp[:, 1:])

    drift = np.zeros((R, n + 1))
    np.cumsum(2 * dA.max(axis=0), axis=1, out=drift[:, 1:])
    oracle_term = np.zeros((R, n + 1))
    oracle_term[:, 1:] = Emx
    lhs = X.max(axis=0)
    lhs[:, 0] = 0.0
    rhs = drift + oracle_term + Mprime
    rhs[:, 1:] += dMpp
    return OmiCertificate(ensemble, labels, variant, X, A, M, Y, pY, Yp, Mprime, Mpp,
                          lhs, rhs, drift, oracle_term)


# -- generated battery ---------------------------------------------------------


@dataclass(frozen=True)
class OmiFamily:
    """A generated submartingale family: transforms of walks driven by one dyadic law."""

    name: str
    model: ProbabilityModel
    n_steps: int
    steps: tuple        # per label: innovation values, one per atom
    transforms: tuple   # per label: "square" | "abs" | "positive"

    def build(self) -> tuple[np.ndarray, PathEnsemble]:
        ens = enumerate_paths(self.model, self.n_steps)
        X = np.zeros((len(self.steps), ens.size, self.n_steps + 1))
        for i, (vals, kind) in enumerate(zip(self.steps, self.transforms)):
            S = np.zeros((ens.size, self.n_steps + 1))
            np.cumsum(np.asarray(vals)[ens.atoms], axis=1, out=S[:, 1:])
            X[i] = {"square": S**2, "abs": np.abs(S), "positive": np.maximum(S, 0)}[kind]
        return X, ens


def omi_battery(count: int = 60, seed: int = 0, max_labels: int = 4, max_steps: int = 6,
                max_paths: int = 4096) -> list[OmiFamily]:
    """Random families with dyadic laws: atom probabilities in eighths, centred dyadic steps."""
    rng = np.random.default_rng(seed)
    kinds = ("square", "abs", "positive")
    out = []
    while len(out) < count:
        s = int(rng.integers(2, 5))
        counts = np.ones(s, dtype=int)
        counts += np.bincount(rng.integers(0, s, 8 - s), minlength=s)
        probs = counts / 8.0
        n = int(rng.integers(1, max_steps + 1))
        if s**n > max_paths:
            continue
        L = int(rng.integers(1, max_labels + 1))
        steps = []
        for _ in range(L):
            a = rng.integers(-4, 5, s).astype(float) / 2
            steps.append(tuple((a - a @ probs).tolist()))
        fam = OmiFamily(f"gen{len(out):03d}", ProbabilityModel.finite(np.arange(s, dtype=float), probs),
                        n, tuple(steps), tuple(kinds[int(k)] for k in rng.integers(0, 3, L)))
        out.append(fam)
    return out


# -- second-moment maximal inequality -----------------------------------------


def _require_predictable(T: TimeRule):
    if T.kind != "predictable":
        raise TimeKindError(f"time {T.name} must be predictable, got {T.kind}")


def second_moment_bound(arr: MartingaleArray, labels=None, T: TimeRule | None = None) -> BoundReport:
    """E[max_i S^i_T^2] <= E[3 sum_{k<=T} max_i E[xi^2|F_{k-1}] + 6 max_{k<=T} E[max_i xi^2|F_{k-1}]]."""
    ens = arr.ensemble
    if T is None:
        T = TimeRule("predictable", lambda k, view: False, ens.n_steps, name=f"const{ens.n_steps}")
    _require_predictable(T)
    tt = evaluate_time(T, ens)
    rows = np.arange(ens.size)
    S = arr.sums(labels)
    lhs = expectation(ens, (S[:, rows, tt] ** 2).max(axis=0))
    sum_cs, max_cm = arr.dominating_terms(labels)
    rhs = expectation(ens, 3 * sum_cs[rows, tt] + 6 * max_cm[rows, tt])
    size = len(arr.idx(labels))
    return BoundReport(f"second-moment maximal T={T.name} |I|={size}", lhs.value, rhs.value,
                       lhs_se=lhs.se, rhs_se=rhs.se, provenance=_provenance(ens),
                       params={"time": T.name, "size": size})


def scalar_implication_check(x: float, y: float, z: float, tol: float = 1e-12) -> bool:
    """False only when x <= 2y + 2 sqrt(xz) + z holds but x <= 3y + 6z fails."""
    premise = x <= 2 * y + 2 * math.sqrt(x) * math.sqrt(z) + z + tol
    return (not premise) or x <= 3 * y + 6 * z + tol


@dataclass
class ScalarSearch:
    triples: int
    premise_true: int
    violations: int
    min_conclusion_margin: float
    worst: tuple | None

    def report(self) -> BoundReport:
        return BoundReport("scalar implication search", float(self.violations), 0.0, tol=0.0,
                           params={"triples": self.triples, "premise_true": self.premise_true,
                                   "min_conclusion_margin": self.min_conclusion_margin})


def scalar_implication_search(count: int = 10**6, seed: int = 0, tol: float = 1e-12) -> ScalarSearch:
    """Vectorized random search for premise-true, conclusion-false triples.

    A third of the triples are uniform on [0, 10]^3, a third log-uniform over
    twelve decades, and a third placed on or just inside the premise boundary.
    """
    rng = np.random.default_rng(seed)
    k = count // 3
    parts = [rng.uniform(0, 10, (k, 3)), 10.0 ** rng.uniform(-6, 6, (k, 3))]
    yz = 10.0 ** rng.uniform(-6, 6, (count - 2 * k, 2))
    y, z = yz[:, 0], yz[:, 1]
    # largest x with x <= 2y + 2 sqrt(x z) + z
    xmax = (np.sqrt(z) + np.sqrt(2 * y + 2 * z)) ** 2
    x = xmax * np.where(rng.random(len(y)) < 0.5, 1.0, rng.uniform(0.9, 1.0, len(y)))
    parts.append(np.column_stack([x, y, z]))
    t = np.concatenate(parts)
    x, y, z = t[:, 0], t[:, 1], t[:, 2]
    premise = x <= 2 * y + 2 * np.sqrt(x) * np.sqrt(z) + z + tol
    concl = 3 * y + 6 * z + tol - x
    bad = premise & (concl < 0)
    marg = concl[premise]
    worst = None
    if bad.any():
        j = int(np.flatnonzero(bad)[np.argmin(concl[bad])])
        worst = (float(x[j]), float(y[j]), float(z[j]))
    return ScalarSearch(len(t), int(premise.sum()), int(bad.sum()),
                        float(marg.min()) if marg.size else math.inf, worst)


# -- countable-index results ---------------------------------------------------


def supremal_inequality_infinite(arr: MartingaleArray, schedule, n: int | None = None, p: int = 2,
                                 case: str | None = None) -> BoundReport:
    """||sup_t |S^t_n| ||_p <= sqrt(2^(p-1)) sqrt(E[3 sum sup E[xi^2|F] + 6 max E[sup xi^2|F]]).

    The left side is the finite-approximation supremum along ``schedule``.
    ``case`` must declare the index structure: ``"a"`` for labels in the
    natural numbers, ``"b"`` for a totally bounded index set (checked on the
    supplied labels by finite covering numbers of rho_{xi_k, 2}).
    """
    if case not in ("a", "b"):
        raise CaseUndeclared("declare case 'a' (labels in N) or 'b' (totally bounded)")
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    ens = arr.ensemble
    n = ens.n_steps if n is None else n
    if not 0 <= n <= ens.n_steps:
        raise ValueError("n outside the horizon")
    union = [lab for lab in arr.labels if any(lab in F for F in schedule)]
    params = {"case": case, "p": p, "n": n, "labels": len(union)}
    if case == "a":
        if not all(isinstance(lab, (int, np.integer)) and lab >= 0 for lab in union):
            raise ValueError("case 'a' needs labels in the natural numbers")
    else:
        idx = arr.idx(union)
        counts = []
        for k in range(1, n + 1):
            met = field_pseudometric(arr.xi[idx, :, k], ens.weights, 2, union)
            eps = met.diameter / 4 if met.diameter > 0 else 1.0
            counts.append(covering_number(met, eps).N)
        params["cover_counts_quarter_diameter"] = counts
    S = arr.sums(union)[:, :, n]
    est = e_tilde_sup(RandomField(union, S), ens, p, schedule, universe_finite=len(union) == len(arr.labels))
    lhs = est.e_tilde ** (1.0 / p)
    lhs_se = est.e_tilde_se / (p * est.e_tilde ** ((p - 1) / p)) if est.e_tilde > 0 else 0.0
    sum_cs, max_cm = arr.dominating_terms(union)
    inner = expectation(ens, 3 * sum_cs[:, n] + 6 * max_cm[:, n])
    factor = math.sqrt(2.0 ** (p - 1))
    rhs = factor * math.sqrt(inner.value)
    rhs_se = factor * inner.se / (2 * math.sqrt(inner.value)) if inner.value > 0 else 0.0
    return BoundReport(f"supremal p={p} n={n}", lhs, rhs, lhs_se=lhs_se, rhs_se=rhs_se,
                       provenance=_provenance(ens), params=params)


def predictable_domination_pair(arr: MartingaleArray, labels=None,
                                horizon: int | None = None) -> tuple[AdaptedProcess, AdaptedProcess]:
    """X^_n = max_i (S^i_n)^2 and A^_n = 6 sum max_i E[xi^2|F] + 12 max E[max_i xi^2|F].

    Both processes are stopped at ``horizon``.
    """
    ens = arr.ensemble
    h = ens.n_steps if horizon is None else horizon
    if not 0 <= h <= ens.n_steps:
        raise ValueError("horizon outside the ensemble")
    xh = (arr.sums(labels) ** 2).max(axis=0)
    sum_cs, max_cm = arr.dominating_terms(labels)
    ah = 6 * sum_cs + 12 * max_cm
    xh[:, h + 1:] = xh[:, [h]]
    ah[:, h + 1:] = ah[:, [h]]
    return AdaptedProcess(xh, ens), AdaptedProcess(ah, ens)


def lenglart_infinite(arr: MartingaleArray, labels=None, c: float = 1.0, T: TimeRule | None = None,
                      eps: float = 1.0, gamma: float = 1.0) -> BoundReport:
    """P(max_{n<=T} sup_i |c S^i_n| >= eps) <= gamma/eps^2 + P(c^2 A^_T >= gamma)."""
    if T is None:
        raise ValueError("a predictable time is required")
    _require_predictable(T)
    if eps <= 0 or gamma <= 0:
        raise ValueError("eps and gamma must be positive")
    ens = arr.ensemble
    tt = evaluate_time(T, ens)
    if np.any(tt < 1):
        raise ValueError("the time must be at least 1 on every path")
    rows = np.arange(ens.size)
    run = np.maximum.accumulate(np.abs(c * arr.sums(labels)).max(axis=0), axis=1)
    _, ah = predictable_domination_pair(arr, labels)
    lhs = expectation(ens, (run[rows, tt] >= eps).astype(float))
    tail = expectation(ens, (c * c * ah.values[rows, tt] >= gamma).astype(float))
    se = (lambda e: 0.0 if ens.exact else math.sqrt(max(e.value * (1 - e.value), 0.0) / ens.size))
    return BoundReport(f"lenglart-sup {T.name} eps={eps:g} gamma={gamma:g}", lhs.value,
                       gamma / eps**2 + tail.value, lhs_se=se(lhs), rhs_se=se(tail),
                       provenance=_provenance(ens),
                       params={"c": c, "eps": eps, "gamma": gamma, "time": T.name})
