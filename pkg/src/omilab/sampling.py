"""Innovation laws, exact path enumeration and seeded path sampling.

Every expectation in omilab is taken over a :class:`PathEnsemble`.  Exact
ensembles enumerate the full product support of a finitely supported law in
lexicographic order, so the paths sharing a ``k``-prefix form one contiguous
block of ``s**(n-k)`` rows.  Conditional expectations given ``F_k`` are then
block-wise weighted means, which is all the martingale machinery needs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, special

from .errors import (
    BudgetExceeded,
    ModeError,
    NonFiniteValue,
    NotFinite,
    UnknownPrefix,
)

DEFAULT_PATH_BUDGET = 10**7
ANALYTIC_LAWS = ("uniform", "normal")
_SEED_LIMIT = 2**64
# replications per RNG chunk; chunking never changes which draws a replication sees
_CHUNK = 4096


class Estimate(NamedTuple):
    value: float
    se: float
    provenance: str


@dataclass(frozen=True, eq=False)
class ProbabilityModel:
    """Law of one innovation.

    Either a finite support (scalars, or rows of a 2-D array for vector
    innovations) with matching probabilities, or a named analytic law.
    """

    support: np.ndarray | None = None
    probs: np.ndarray | None = None
    law: str | None = None

    def __post_init__(self):
        if self.law is not None:
            if self.law not in ANALYTIC_LAWS:
                raise ValueError(f"unknown analytic law {self.law!r}")
            if self.support is not None or self.probs is not None:
                raise ValueError("analytic laws take no support/probs")
            return
        if self.support is None:
            raise ValueError("need a finite support or an analytic law")
        support = np.asarray(self.support, dtype=float)
        if support.ndim not in (1, 2) or len(support) == 0:
            raise ValueError("support must be a non-empty 1-D or 2-D array")
        if self.probs is None:
            probs = np.full(len(support), 1.0 / len(support))
        else:
            probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (len(support),):
            raise ValueError("probs must match the support length")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        rows = support.reshape(len(support), -1)
        if len(np.unique(rows, axis=0)) != len(rows):
            raise ValueError("support values must be distinct")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    # -- constructors -------------------------------------------------------

    @classmethod
    def finite(cls, support, probs=None) -> "ProbabilityModel":
        return cls(support=support, probs=probs)

    @classmethod
    def rademacher(cls) -> "ProbabilityModel":
        return cls(support=[-1.0, 1.0], probs=[0.5, 0.5])

    @classmethod
    def coin(cls, p: float = 0.5, values=(0.0, 1.0)) -> "ProbabilityModel":
        return cls(support=list(values), probs=[1.0 - p, p])

    @classmethod
    def uniform(cls) -> "ProbabilityModel":
        return cls(law="uniform")

    @classmethod
    def normal(cls) -> "ProbabilityModel":
        return cls(law="normal")

    @classmethod
    def product(cls, *models: "ProbabilityModel") -> "ProbabilityModel":
        """Independent coordinates: the joint law on the product support."""
        if not models:
            raise ValueError("product of zero laws")
        for m in models:
            if not m.is_finite:
                raise NotFinite("product laws need finite coordinates")
        support = np.zeros((1, 0))
        probs = np.ones(1)
        for m in models:
            rows = m.support.reshape(len(m.support), -1)
            support = np.concatenate(
                [np.repeat(support, len(rows), axis=0), np.tile(rows, (len(support), 1))],
                axis=1,
            )
            probs = np.outer(probs, m.probs).ravel()
        return cls(support=support, probs=probs)

    # -- queries ------------------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.law is None

    @property
    def n_atoms(self) -> int:
        if not self.is_finite:
            raise NotFinite(f"{self.law} law has no atoms")
        return len(self.support)

    @property
    def dim(self) -> int:
        """0 for scalar innovations, d for d-vectors."""
        if self.is_finite and self.support.ndim == 2:
            return self.support.shape[1]
        return 0

    def values_from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Quantile transform of uniforms in [0, 1)."""
        u = np.asarray(u, dtype=float)
        if self.law == "uniform":
            return u
        if self.law == "normal":
            # shift onto the open interval so ndtri stays finite
            return special.ndtri(u + 2.0**-54)
        return self.support[self.atoms_from_uniform(u)]

    def atoms_from_uniform(self, u: np.ndarray) -> np.ndarray:
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, u, side="right")
        # guard against cum[-1] rounding below 1
        return np.minimum(idx, self.n_atoms - 1)

    def expect(self, f: Callable[[np.ndarray], np.ndarray], points=None) -> float:
        """E f(V) for one innovation V; exact on finite laws, quadrature otherwise."""
        if self.is_finite:
            vals = np.asarray(f(self.support), dtype=float)
            return float(np.sum(self.probs * vals))

        def scalar(x):
            return float(np.asarray(f(np.atleast_1d(x)), dtype=float).ravel()[0])

        if self.law == "uniform":
            pts = None if points is None else sorted(p for p in points if 0 < p < 1)
            val, _ = integrate.quad(scalar, 0.0, 1.0, points=pts or None, limit=500,
                                    epsabs=1e-13, epsrel=1e-12)
            return float(val)
        pdf = lambda x: scalar(x) * math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
        if points:
            lo, hi = min(points), max(points)
            total = integrate.quad(pdf, -np.inf, lo, limit=500)[0]
            knots = sorted(points)
            for a, b in zip(knots[:-1], knots[1:]):
                total += integrate.quad(pdf, a, b, limit=500)[0]
            total += integrate.quad(pdf, hi, np.inf, limit=500)[0]
            return float(total)
        return float(integrate.quad(pdf, -np.inf, np.inf, limit=500)[0])

    def to_dict(self) -> dict:
        if not self.is_finite:
            return {"law": self.law}
        return {"support": self.support.tolist(), "probs": self.probs.tolist()}


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """R innovation paths of length ``n_steps`` with their probabilities.

    ``paths`` has shape (R, n) for scalar innovations and (R, n, d) for vector
    ones.  Exact ensembles also carry ``atoms`` (atom index per step) and
    ``branching`` (number of positive-probability atoms).
    """

    mode: str
    model: ProbabilityModel
    n_steps: int
    paths: np.ndarray
    weights: np.ndarray
    seed: int | None = None
    atoms: np.ndarray | None = None
    branching: int | None = None

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def partial_sums(self, component: int | None = None) -> np.ndarray:
        """S_k = sum of the first k innovations, shape (R, n+1), S_0 = 0."""
        x = self.paths if component is None else self.paths[..., component]
        if x.ndim != 2:
            raise ValueError("vector innovations need a component index")
        out = np.zeros((self.size, self.n_steps + 1))
        np.cumsum(x, axis=1, out=out[:, 1:])
        return out

    def _require_exact(self):
        if not self.exact:
            raise ModeError("conditional expectations need an exact ensemble")

    def condition(self, values: np.ndarray, k: int) -> np.ndarray:
        """E[values | F_k] evaluated on every path (k < 0 means F_0).

        ``values`` has shape (..., R); the result has the same shape.
        """
        self._require_exact()
        values = np.asarray(values, dtype=float)
        k = min(max(k, 0), self.n_steps)
        blocks = self.branching**k
        lead = values.shape[:-1]
        v = values.reshape(lead + (blocks, -1))
        w = self.weights.reshape(blocks, -1)
        mean = np.sum(v * w, axis=-1) / np.sum(w, axis=-1)
        return np.repeat(mean, self.size // blocks, axis=-1).reshape(values.shape)

    def measurable_defect(self, values: np.ndarray, k: int) -> float:
        """Largest spread of ``values`` inside one k-prefix block (0 iff F_k-measurable)."""
        self._require_exact()
        values = np.asarray(values, dtype=float)
        k = min(max(k, 0), self.n_steps)
        v = values.reshape(values.shape[:-1] + (self.branching**k, -1))
        if v.size == 0:
            return 0.0
        return float(np.max(v.max(axis=-1) - v.min(axis=-1)))

    def prefix_block(self, prefix) -> int:
        """Index of the k-prefix block whose paths start with ``prefix``."""
        self._require_exact()
        prefix = np.asarray(prefix, dtype=float)
        k = len(prefix)
        if k > self.n_steps:
            raise UnknownPrefix(f"prefix longer than horizon {self.n_steps}")
        step = self.size // self.branching**k
        heads = self.paths[::step, :k]
        hit = np.all(heads.reshape(len(heads), -1) == prefix.reshape(1, -1), axis=1)
        found = np.flatnonzero(hit)
        if len(found) == 0:
            raise UnknownPrefix(f"no path starts with {prefix.tolist()}")
        return int(found[0])

    def prefix_of(self, path_index: int, k: int) -> list:
        return self.paths[path_index, :k].tolist()


def enumerate_paths(model: ProbabilityModel, n_steps: int,
                    budget: int = DEFAULT_PATH_BUDGET) -> PathEnsemble:
    """Every path of ``n_steps`` i.i.d. innovations, with product weights."""
    if not model.is_finite:
        raise NotFinite(f"cannot enumerate the {model.law} law")
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    keep = np.flatnonzero(model.probs > 0)
    s = len(keep)
    count = s**n_steps
    if count > budget:
        raise BudgetExceeded(f"{s}**{n_steps} = {count} paths exceeds budget {budget}")
    atoms = np.indices((s,) * n_steps).reshape(n_steps, -1).T if n_steps else np.zeros((1, 0), int)
    atoms = keep[atoms]
    weights = np.prod(model.probs[atoms], axis=1) if n_steps else np.ones(1)
    return PathEnsemble(
        mode="exact",
        model=model,
        n_steps=n_steps,
        paths=model.support[atoms],
        weights=weights,
        atoms=atoms,
        branching=s,
    )


def _uniform_block(seed: int, start: int, stop: int, n_steps: int) -> np.ndarray:
    bitgen = np.random.Philox(key=seed)
    gen = np.random.Generator(bitgen)
    template = bitgen.state
    out = np.empty((stop - start, n_steps))
    for r in range(start, stop):
        # counter word 2 carries the replication index: one substream per replication
        state = dict(template)
        state["state"] = {"counter": np.array([0, 0, r, 0], dtype=np.uint64),
                          "key": template["state"]["key"]}
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        bitgen.state = state
        out[r - start] = gen.random(n_steps)
    return out


def replication_uniforms(seed: int, n_steps: int, R: int, workers: int = 1) -> np.ndarray:
    """(R, n_steps) uniforms; row r depends only on (seed, r)."""
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError("seed must be a 64-bit unsigned integer")
    chunks = [(a, min(a + _CHUNK, R)) for a in range(0, R, _CHUNK)]
    if workers <= 1 or len(chunks) == 1:
        parts = [_uniform_block(seed, a, b, n_steps) for a, b in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: _uniform_block(seed, ab[0], ab[1], n_steps), chunks))
    return np.concatenate(parts, axis=0) if parts else np.empty((0, n_steps))


def sample_paths(model: ProbabilityModel, n_steps: int, R: int, seed: int,
                 workers: int = 1) -> PathEnsemble:
    """R equally weighted paths drawn from counter-based per-replication substreams."""
    if R < 1:
        raise ValueError("R must be at least 1")
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    u = replication_uniforms(seed, n_steps, R, workers)
    atoms = model.atoms_from_uniform(u) if model.is_finite else None
    paths = model.support[atoms] if atoms is not None else model.values_from_uniform(u)
    return PathEnsemble(
        mode="montecarlo",
        model=model,
        n_steps=n_steps,
        paths=paths,
        weights=np.full(R, 1.0 / R),
        seed=seed,
        atoms=atoms,
    )


def _evaluate(ensemble: PathEnsemble, f) -> np.ndarray:
    vals = f(ensemble.paths) if callable(f) else f
    vals = np.asarray(vals, dtype=float)
    if vals.shape != (ensemble.size,):
        raise ValueError(f"path functional must give shape ({ensemble.size},), got {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("path functional produced NaN or infinity")
    return vals


def expectation(ensemble: PathEnsemble, f) -> Estimate:
    """E f over the ensemble; ``f`` is a callable on ``paths`` or per-path values."""
    vals = _evaluate(ensemble, f)
    if ensemble.exact:
        return Estimate(float(np.sum(ensemble.weights * vals)), 0.0, "exact")
    R = ensemble.size
    se = float(np.std(vals, ddof=1) / math.sqrt(R)) if R > 1 else math.nan
    return Estimate(float(np.mean(vals)), se, "montecarlo")


def conditional_expectation(ensemble: PathEnsemble, prefix_len: int, f, prefix) -> float:
    """E[f | first ``prefix_len`` innovations equal ``prefix``] by weight ratios."""
    if not ensemble.exact:
        raise ModeError("nested Monte Carlo conditioning is refused; use an exact ensemble")
    if len(prefix) != prefix_len:
        raise ValueError("prefix length must equal prefix_len")
    vals = _evaluate(ensemble, f)
    block = ensemble.prefix_block(prefix)
    width = ensemble.size // ensemble.branching**prefix_len
    sl = slice(block * width, (block + 1) * width)
    w = ensemble.weights[sl]
    return float(np.sum(w * vals[sl]) / np.sum(w))
