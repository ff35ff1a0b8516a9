"""Experiment configurations, dispatch and run reports.

A configuration is one JSON object with a ``schema`` version, a ``kind`` and
kind-specific fields.  ``run`` returns a :class:`RunReport` whose JSON form is
bit-identical for identical configurations, whatever the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classes import from_description, suzuki_union
from .empirical import (clt_marginal_check, donsker_diagnostic, iid_supremal_bound, jain_marcus_check,
                        linear_field, suzuki_exact_truncations, suzuki_exhibit,
                        tightness_diagnostics, trend_summary)
from .errors import ConfigError, LipschitzViolation, ManifestError, NotSubmartingale, OmilabError
from .finite_approx import (RandomField, all_subsets_e_tilde, default_eps_sequence,
                            device_check_sequence, device_check_totally_bounded, e_tilde_sup, net_schedule)
from .martingale import (check_L_domination, constant_time, lenglart_check, predictable_battery,
                         threshold_time)
from .oracle import (MartingaleArray, OmiFamily, fair_walks, lenglart_infinite, omi_battery, omi_construct,
                     predictable_domination_pair, scalar_implication_search, second_moment_bound)
from .reports import IDENT_TOL, BoundReport
from .sampling import ProbabilityModel, enumerate_paths, sample_paths

SCHEMA_VERSION = 1
KINDS = ("omi", "second-moment", "lenglart", "finite-approx", "suzuki", "supremal", "donsker",
         "tightness", "jain-marcus")
OUT_DIR_ENV = "OMILAB_OUT_DIR"
DEFAULT_OUT_DIR = "omilab-out"
SEEDED_KINDS = ("suzuki", "supremal", "jain-marcus")


# -- config helpers ------------------------------------------------------------


class _Cfg:
    """Typed access to a config dict that reports the failing field path."""

    def __init__(self, data, path: str = ""):
        if not isinstance(data, dict):
            raise ConfigError(path or "<root>", "expected a JSON object")
        self.data = data
        self.path = path

    def _field(self, key) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, kind=None, default=..., check=None, what="invalid value"):
        if key not in self.data:
            if default is ...:
                raise ConfigError(self._field(key), "missing required field")
            return default
        val = self.data[key]
        if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
            raise ConfigError(self._field(key), "expected an integer")
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
                raise ConfigError(self._field(key), "expected a finite number")
            val = float(val)
        if kind is str and not isinstance(val, str):
            raise ConfigError(self._field(key), "expected a string")
        if kind is list and (not isinstance(val, list) or not val):
            raise ConfigError(self._field(key), "expected a nonempty list")
        if check is not None and not check(val):
            raise ConfigError(self._field(key), what)
        return val

    def int(self, key, default=..., lo=None, hi=None):
        ok = (lambda v: (lo is None or v >= lo) and (hi is None or v <= hi))
        bounds = f"an integer in [{lo}, {hi if hi is not None else 'inf'}]"
        return self.get(key, int, default, ok, f"expected {bounds}")

    def num(self, key, default=..., positive=False):
        return self.get(key, float, default, (lambda v: v > 0) if positive else None, "expected a positive number")

    def grid(self, key, default=..., positive=True, kind=float):
        vals = self.get(key, list, default)
        out = []
        for j, v in enumerate(vals):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) \
                    or (positive and v <= 0) or (kind is int and not isinstance(v, int)):
                raise ConfigError(f"{self._field(key)}[{j}]",
                                  "expected a positive " + ("integer" if kind is int else "number"))
            out.append(kind(v))
        return out

    def sub(self, key, default=...):
        if key not in self.data:
            if default is ...:
                raise ConfigError(self._field(key), "missing required field")
            return _Cfg(default, self._field(key))
        return _Cfg(self.data[key], self._field(key))


def parse_model(desc, path: str = "model") -> ProbabilityModel:
    """Law from {"law": name, ...}, {"support": [...], "probs": [...]} or {"product": [...]}."""
    c = _Cfg(desc, path)
    try:
        if "product" in desc:
            parts = c.get("product", list)
            return ProbabilityModel.product(*[parse_model(p, f"{path}.product[{j}]") for j, p in enumerate(parts)])
        if "support" in desc:
            return ProbabilityModel.finite(c.get("support", list), desc.get("probs"))
        law = c.get("law", str)
        if law == "rademacher":
            return ProbabilityModel.rademacher()
        if law == "coin":
            return ProbabilityModel.coin(c.num("p", 0.5), tuple(desc.get("values", (0.0, 1.0))))
        if law == "uniform":
            return ProbabilityModel.uniform()
        if law == "normal":
            return ProbabilityModel.normal()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.law", f"unknown law {law!r}")


def validate(config: dict) -> dict:
    """Check the common fields; kind-specific fields are checked when run."""
    c = _Cfg(config)
    schema = c.get("schema", int)
    if schema != SCHEMA_VERSION:
        raise ConfigError("schema", f"unsupported schema version {schema}")
    kind = c.get("kind", str, check=lambda k: k in KINDS, what=f"kind must be one of {KINDS}")
    if "name" in config:
        c.get("name", str, check=lambda s: bool(re.fullmatch(r"[A-Za-z0-9][A-Za-z0-9_.-]*", s)),
              what="name must be a nonempty file-safe string")
    if kind in SEEDED_KINDS:
        c.get("seed", int, check=lambda s: 0 <= s < 2**64, what="seed must be a 64-bit unsigned integer")
    elif "seed" in config:
        c.get("seed", int, check=lambda s: 0 <= s < 2**64, what="seed must be a 64-bit unsigned integer")
    if "path_budget" in config:
        c.int("path_budget", lo=1)
    if "label_budget" in config:
        c.int("label_budget", lo=1)
    return config


# -- reports -------------------------------------------------------------------


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


@dataclass
class RunReport:
    """Checks, diagnostics and tables of one experiment.

    ``wall_clock`` is kept out of :meth:`to_json` so that identical
    configurations give byte-identical JSON.
    """

    name: str
    config: dict
    checks: list[BoundReport]
    diagnostics: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    error: str | None = None
    wall_clock: float = 0.0

    @property
    def verdict(self) -> bool:
        return self.error is None and all(c.verdict for c in self.checks if not c.diagnostic)

    @property
    def failures(self) -> list[BoundReport]:
        return [c for c in self.checks if not c.diagnostic and not c.verdict]

    def to_dict(self) -> dict:
        return _clean({
            "name": self.name,
            "tool_version": __version__,
            "config": self.config,
            "verdict": "pass" if self.verdict else "fail",
            "checks": [c.to_dict() for c in self.checks],
            "n_checks": sum(not c.diagnostic for c in self.checks),
            "n_failed": len(self.failures),
            "diagnostics": self.diagnostics,
            "assumption_flags": self.flags,
            "error": self.error,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def checks_csv(self) -> str:
        rows = [{"name": c.name, "relation": c.relation, "lhs": c.lhs, "rhs": c.rhs, "margin": c.margin,
                 "verdict": "pass" if c.verdict else "fail", "provenance": c.provenance,
                 "diagnostic": c.diagnostic, "lhs_se": c.lhs_se, "rhs_se": c.rhs_se}
                for c in self.checks]
        return rows_to_csv(rows)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_clean(v))
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    """CSV with shortest round-trip float formatting."""
    buf = io.StringIO()
    if not rows:
        return ""
    cols = list(rows[0])
    for r in rows[1:]:
        cols += [k for k in r if k not in cols]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(k, "")) for k in cols])
    return buf.getvalue()


# -- kind handlers -------------------------------------------------------------


def _family_from_spec(desc, path) -> OmiFamily:
    c = _Cfg(desc, path)
    model = parse_model(c.get("model"), f"{path}.model")
    if not model.is_finite:
        raise ConfigError(f"{path}.model", "the oracle construction needs a finite law")
    n = c.int("n", lo=1)
    steps, kinds = [], []
    for j, lab in enumerate(c.get("labels", list)):
        lc = _Cfg(lab, f"{path}.labels[{j}]")
        if "steps" in lab:
            vals = lc.get("steps", list, check=lambda v: len(v) == model.n_atoms,
                          what="one step value per atom")
        else:
            comp = lc.int("component", 0, lo=0, hi=max(model.dim, 1) - 1)
            sup = model.support if model.support.ndim == 2 else model.support[:, None]
            vals = sup[:, comp].tolist()
        steps.append(tuple(float(v) for v in vals))
        kinds.append(lc.get("transform", str, "square", lambda t: t in ("square", "abs", "positive"),
                            "transform must be square, abs or positive"))
    return OmiFamily(c.get("name", str, path), model, n, tuple(steps), tuple(kinds))


def _run_omi(c: _Cfg, workers: int):
    variant = c.get("variant", str, "literal", lambda v: v in ("literal", "single-max", "lagged"),
                    "variant must be literal, single-max or lagged")
    families = [_family_from_spec(f, f"families[{j}]") for j, f in enumerate(c.get("families", list, []))]
    if "battery" in c.data:
        b = c.sub("battery")
        families += omi_battery(b.int("count", 60, lo=1), b.int("seed", 0, lo=0), b.int("max_labels", 4, lo=1),
                                b.int("max_steps", 6, lo=1), b.int("max_paths", 4096, lo=1))
    if not families:
        raise ConfigError("families", "no families given")
    checks, rows = [], []
    exp_rows = []
    for fam in families:
        X, ens = fam.build()
        cert = omi_construct(X, ens, variant=variant)
        checks += cert.reports(fam.name)
        margins = cert.margins
        rows.append({"family": fam.name, "size": len(fam.steps), "n": fam.n_steps, "paths": ens.size,
                     "min_margin": cert.min_margin, "violations": int((margins < -1e-9).sum()),
                     "cells": int(margins.size), "selector_defect": cert.selector_defect(),
                     "M1_defect": cert.martingale_defects()[0], "M2_defect": cert.martingale_defects()[1]})
        el, er = cert.expectation_form()
        for n in range(len(el)):
            exp_rows.append({"family": fam.name, "n": n + 1, "E_lhs": el[n], "E_rhs_without_martingales": er[n]})
            checks.append(BoundReport(f"omi {fam.name} expectation form n={n + 1}", float(el[n]), float(er[n]),
                                      diagnostic=True))
    failed = [r["family"] for r in rows if r["violations"]]
    return checks, {"families": len(families), "variant": variant, "families_with_violations": failed}, \
        {"omi": rows, "omi_expectation": exp_rows}, {}


def _array(c: _Cfg, workers: int, seed: int) -> MartingaleArray:
    n = c.int("n", lo=0)
    mode = c.get("mode", str, "exact", lambda m: m in ("exact", "montecarlo"), "mode must be exact or montecarlo")
    if "model" in c.data:
        model = parse_model(c.get("model"))
    else:
        k = c.int("walks", 1, lo=1)
        model = ProbabilityModel.product(*[ProbabilityModel.rademacher()] * k) if k > 1 \
            else ProbabilityModel.rademacher()
    if mode == "exact":
        ens = enumerate_paths(model, n, c.int("path_budget", 10**7, lo=1))
    else:
        ens = sample_paths(model, n, c.int("R", 10000, lo=1), seed, workers)
    return MartingaleArray.walks(ens)


def _run_second_moment(c: _Cfg, workers: int):
    seed = c.int("seed", 0, lo=0)
    arr = _array(c, workers, seed)
    times = c.grid("T", [arr.horizon], positive=False, kind=int)
    checks = []
    for t in times:
        if not 0 <= t <= arr.horizon:
            raise ConfigError("T", f"time {t} outside [0, {arr.horizon}]")
        checks.append(second_moment_bound(arr, None, constant_time(t, "predictable")))
    diag = {}
    if "scalar_search" in c.data:
        s = c.sub("scalar_search")
        res = scalar_implication_search(s.int("count", 10**6, lo=1), s.int("seed", 0, lo=0))
        checks.append(res.report())
        diag["scalar_search"] = {"triples": res.triples, "premise_true": res.premise_true,
                                 "violations": res.violations, "min_conclusion_margin": res.min_conclusion_margin}
    return checks, diag, {}, {}


def _run_lenglart(c: _Cfg, workers: int):
    variant = c.get("variant", str, "pair", lambda v: v in ("pair", "supremum"),
                    "variant must be pair or supremum")
    eps = c.grid("eps")
    gamma = c.grid("gamma")
    checks, diag = [], {}
    if variant == "pair":
        n = c.int("n", lo=1, hi=20)
        kinds = c.get("kinds", list, ["stopping", "predictable"],
                      lambda ks: all(k in ("stopping", "predictable") for k in ks), "unknown time kind")
        arr = fair_walks(n)
        ens = arr.ensemble
        X = arr.sums()[0] ** 2
        A = np.broadcast_to(np.arange(n + 1, dtype=float), X.shape).copy()
        for kind in kinds:
            rules = predictable_battery([X], n, c.int("battery_size", 12, lo=1), c.int("battery_seed", 0, lo=0), kind)
            checks += check_L_domination(X, A, ens, kind, rules)
            for rule in rules:
                for e in eps:
                    for g in gamma:
                        checks.append(lenglart_check(X, A, ens, kind, rule, e, g))
        diag["rules"] = len(rules)
    else:
        h = c.int("horizon", lo=1, hi=12)
        arr = fair_walks(h, c.int("walks", 2, lo=1))
        ens = arr.ensemble
        cc = c.num("c", 1.0, positive=True)
        xh, ah = predictable_domination_pair(arr, None, h)
        rules = predictable_battery([xh.values, ah.values], h, c.int("battery_size", 24, lo=1),
                                    c.int("battery_seed", 0, lo=0), "predictable")
        checks += check_L_domination(xh, ah, ens, "predictable", rules)
        tlist = [constant_time(t) for t in c.grid("T", [h], kind=int)]
        tlist += [threshold_time(xh.values, float(lvl), h, name=f"sup-hit{lvl:g}") for lvl in c.grid("hit_levels", [1.0])]
        for T in tlist:
            for e in eps:
                for g in gamma:
                    checks.append(lenglart_infinite(arr, None, cc, T, e, g))
        diag["rules"] = len(rules)
    return checks, diag, {}, {}


def _finite_fields(count: int, seed: int, max_labels: int):
    """Linear fields X(t) = sum_k a_{t,k} V_k + b_t on a three-atom dyadic law, three steps."""
    model = ProbabilityModel.finite([-1.0, 0.0, 2.0], [0.5, 0.25, 0.25])
    ens = enumerate_paths(model, 3)
    rng = np.random.default_rng(seed)
    out = []
    for j in range(count):
        L = int(rng.integers(2, max_labels + 1))
        a = rng.integers(-3, 4, (L, 3)) / 4
        b = rng.integers(-2, 3, L) / 4
        out.append(RandomField(tuple(range(L)), a @ ens.paths.T + b[:, None]))
    return ens, out


def _run_finite_approx(c: _Cfg, workers: int):
    checks, rows = [], []
    K = c.int("K", 8, lo=1, hi=12)
    ens = enumerate_paths(ProbabilityModel.rademacher(), K)
    for name, scale in (("unit", np.ones(K)), ("scaled", np.arange(1, K + 1, dtype=float))):
        for k in range(1, K + 1):
            fld = RandomField(tuple(range(1, k + 1)), scale[:k, None] * ens.paths[:, :k].T)
            for p in c.grid("p", [1, 2]):
                r = device_check_sequence(fld, ens, p)
                r.name = f"sequence {name} K={k} p={p:g}"
                checks.append(r)
    fens, fields = _finite_fields(c.int("count", 24, lo=1), c.int("field_seed", 0, lo=0),
                                  c.int("max_labels", 12, lo=2, hi=12))
    for j, fld in enumerate(fields):
        for p in c.grid("p", [1, 2]):
            r = device_check_totally_bounded(fld, fens, p)
            r.name = f"sandwich field{j} p={p:g}"
            checks.append(r)
            metric = fld.metric(fens.weights, p)
            net = e_tilde_sup(fld, fens, p, net_schedule(metric, default_eps_sequence(metric))).e_tilde
            seq = e_tilde_sup(fld, fens, p, [fld.labels[:m] for m in range(1, len(fld.labels) + 1)]).e_tilde
            rev = e_tilde_sup(fld, fens, p, [fld.labels[-m:] for m in range(1, len(fld.labels) + 1)]).e_tilde
            brute = all_subsets_e_tilde(fld, fens, p)
            for sname, v in (("net", net), ("forward", seq), ("reverse", rev)):
                checks.append(BoundReport(f"schedule robustness field{j} p={p:g} {sname}", v, brute,
                                          relation="eq", tol=IDENT_TOL,
                                          params={"labels": len(fld.labels)}))
            rows.append({"field": j, "labels": len(fld.labels), "p": p, "e_full": r.lhs, "e_tilde": r.lower,
                         "ratio": r.params["ratio"], "stages": r.params["stages"]})
    return checks, {}, {"finite_approx": rows}, {"total_boundedness": "finite universes only"}


def _run_suzuki(c: _Cfg, workers: int):
    seed = c.int("seed", lo=0)
    ns = c.grid("n", kind=int)
    R = c.int("R", 1000, lo=2)
    budget = c.int("label_budget", 100, lo=2)
    checks, tables, diag = [], {"suzuki": []}, {}
    for n in ns:
        m_max = c.int("m_max", max(ns), lo=n)
        ex = suzuki_exhibit(n, m_max, R, seed, budget, workers)
        checks += ex.reports()
        tables["suzuki"] += ex.to_rows()
        diag[f"n={n}"] = {"crude_bound": ex.crude, "sharp_bound": ex.sharp, "e_full": 0.5,
                          "e_tilde_truncated": ex.e_tilde, "e_tilde_se": ex.e_tilde_se,
                          "truncation_M": ex.truncation}
    if "exact_gap" in c.data:
        g = c.sub("exact_gap")
        n = g.int("n", 4, lo=1, hi=6)
        Ms = g.grid("M", [1, 2, 3], kind=int)
        vals = suzuki_exact_truncations(n, Ms)
        for M, v in vals.items():
            checks.append(BoundReport(f"suzuki exact n={n} gap E - E~(M={M}) >= {g.num('threshold', 0.1)}",
                                      g.num("threshold", 0.1), 0.5 - v,
                                      diagnostic=M > g.int("gap_truncation", 2, lo=1),
                                      params={"M": M, "e_tilde_truncated": v, "e_full": 0.5}))
        diag["exact_truncations"] = {str(k): v for k, v in vals.items()}
    return checks, diag, tables, {"universe": "truncated by label budget"}


def _run_supremal(c: _Cfg, workers: int):
    seed = c.int("seed", lo=0)
    checks = []
    try:
        cls, model = from_description(c.get("class"))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError("class", str(exc)) from None
    R = c.int("R", 1000, lo=2)
    for n in c.grid("n", kind=int):
        checks.append(iid_supremal_bound(cls, cls.labels, model, n, R, seed, workers))
    return checks, {}, {}, {}


def _run_donsker(c: _Cfg, workers: int):
    eps = c.grid("eps_grid")
    if "truncations" in c.data:
        Ms = c.grid("truncations", kind=int)
        cls = suzuki_union(max(Ms), c.int("label_budget", 10**6, lo=1))
        universes = [suzuki_union(M).labels for M in Ms]
        model = ProbabilityModel.uniform()
    else:
        try:
            cls, model = from_description(c.get("class"))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError("class", str(exc)) from None
        universes = [cls.labels]
    res = donsker_diagnostic(cls, universes, model, eps, c.get("method", str, "auto"))
    checks, rows = [], []
    for u in res["rows"]:
        for (e, N), (_, s) in zip(u["curve"], u["sudakov"]):
            rows.append({"labels": u["labels"], "method": u["method"], "epsilon": e, "N": N, "eps2_log_N": s})
            checks.append(BoundReport(f"sudakov labels={u['labels']} eps={e:g}", s, s, relation="eq",
                                      diagnostic=True, params={"N": N, "method": u["method"]}))
    return checks, {"trend": res["trend"]}, {"covering": rows}, {}


def _field(c: _Cfg):
    desc = c.sub("field", {"family": "linear", "k": 10})
    desc.get("family", str, "linear", lambda f: f == "linear", "only the linear field is built in")
    law = desc.get("law", str, "uniform", lambda v: v in ("uniform", "rademacher"),
                   "law must be uniform or rademacher")
    return linear_field(desc.int("k", 10, lo=1), law)


def _run_tightness(c: _Cfg, workers: int):
    fld = _field(c)
    ns = c.grid("n_grid", kind=int)
    eps = c.num("eps", 0.005, positive=True)
    deltas = c.grid("delta_grid", [0.1, 0.3, 1.0])
    half = len(fld.labels) // 2
    diags = tightness_diagnostics(fld, ns, None, [[fld.labels[:half], fld.labels[half:]]], deltas, eps)
    trend = trend_summary(diags)
    checks = [BoundReport(f"lindeberg n={d.n}", d.lindeberg_max, d.lindeberg_max, relation="eq", diagnostic=True)
              for d in diags]
    checks.append(BoundReport("lindeberg log-log slope", trend["loglog_slope"], c.num("max_slope", -0.5),
                              params={"n": ns}))
    rows = [d.to_dict() for d in diags]
    diag = {"trend": trend, "covariance": diags[0].covariances, "modulus": rows[0]["modulus"],
            "partition_stat": rows[0]["partition_stat"], "lipschitz_budget": rows[0]["lipschitz_budget"]}
    if "sudakov_eps" in c.data:
        cls, model = from_description(c.get("class", default={"family": "lipschitz-grid", "k": 10}))
        res = donsker_diagnostic(cls, [cls.labels], model, c.grid("sudakov_eps"))
        curve = res["rows"][0]["curve"]
        diag["sudakov"] = res["rows"][0]["sudakov"]
        # N(eps) <= |class|, so eps^2 log N is squeezed to 0 by eps^2 log |class|
        e_min, v_min = diag["sudakov"][-1]
        checks.append(BoundReport("sudakov fixed class tail", v_min, e_min**2 * math.log(len(cls.labels)),
                                  params={"eps": e_min, "labels": len(cls.labels)}))
        sat = [v for (_, N), (_, v) in zip(curve, diag["sudakov"]) if N == len(cls.labels)]
        rises = sum(b > a for a, b in zip(sat, sat[1:]))
        checks.append(BoundReport("sudakov saturated tail nonincreasing", float(rises), 0.0, tol=0.0,
                                  params={"saturated_points": len(sat)}))
    if "clt" in c.data:
        cl = c.sub("clt")
        diag["clt"] = clt_marginal_check(fld, tuple(cl.get("pair", list, [1.0, 0.5])), cl.grid("n_grid", [100, 1000], kind=int),
                                         cl.int("R", 200, lo=2), cl.int("seed", 0, lo=0), workers)
    return checks, diag, {"tightness": [{"n": d.n, "lindeberg_max": d.lindeberg_max} for d in diags]}, \
        {"asymptotics": "finite-n trend only"}


def _run_jain_marcus(c: _Cfg, workers: int):
    fld = _field(c)
    scale = c.num("witness_scale", 1.0, positive=True)
    seed = c.int("seed", lo=0)
    lip = (lambda v: scale * fld.lipschitz(v))
    try:
        res = jain_marcus_check(fld, None, lip, c.grid("n_grid", [10, 100, 1000], kind=int),
                                c.int("R", 100, lo=2), seed)
    except LipschitzViolation as exc:
        return [BoundReport("lipschitz witness", exc.excess, 0.0, params={"pair": list(exc.pair), "point": exc.path})], \
            {"violation": str(exc)}, {}, {}
    checks = [BoundReport("lipschitz witness", res["max_excess"], 0.0, tol=1e-12)]
    for b in res["budget"]:
        checks.append(BoundReport(f"lipschitz budget n={b['n']}", b["budget"], res["E_L2"], relation="eq",
                                  lhs_se=b["se"], provenance="montecarlo", diagnostic=True))
    return checks, {"E_L2": res["E_L2"]}, {"budget": res["budget"]}, {}


HANDLERS = {
    "omi": _run_omi,
    "second-moment": _run_second_moment,
    "lenglart": _run_lenglart,
    "finite-approx": _run_finite_approx,
    "suzuki": _run_suzuki,
    "supremal": _run_supremal,
    "donsker": _run_donsker,
    "tightness": _run_tightness,
    "jain-marcus": _run_jain_marcus,
}


def run(config: dict, workers: int = 1, seed: int | None = None) -> RunReport:
    """Validate and run one experiment.  ``seed`` overrides the configured seed."""
    config = dict(config)
    if seed is not None:
        config["seed"] = seed
    validate(config)
    name = config.get("name", config["kind"])
    start = time.perf_counter()
    try:
        checks, diag, tables, flags = HANDLERS[config["kind"]](_Cfg(config), workers)
        error = None
    except ConfigError:
        raise
    except NotSubmartingale as exc:
        checks, diag, tables, flags = [], {"prefix": exc.prefix, "time": exc.time}, {}, {}
        error = f"{type(exc).__name__}: {exc}"
    except OmilabError as exc:
        checks, diag, tables, flags = [], {}, {}, {}
        error = f"{type(exc).__name__}: {exc}"
    flags = dict(flags)
    report = RunReport(name, config, checks, diag, tables, flags, error)
    report.wall_clock = time.perf_counter() - start
    return report


def write_report(report: RunReport, out_dir: Path, fmt: str = "both") -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    stem = out_dir / report.name
    if fmt in ("json", "both"):
        stem.with_suffix(".json").write_text(report.to_json())
        written.append(stem.with_suffix(".json"))
    if fmt in ("csv", "both"):
        p = out_dir / f"{report.name}.checks.csv"
        p.write_text(report.checks_csv())
        written.append(p)
        for tname, rows in report.tables.items():
            if rows:
                p = out_dir / f"{report.name}.{tname}.csv"
                p.write_text(rows_to_csv(rows))
                written.append(p)
    return written


# -- manifests -----------------------------------------------------------------


def load_manifest(path) -> list[dict]:
    """Configs from a manifest: a list, or {"schema": 1, "experiments": [...]}.

    Entries are inline configs or paths relative to the manifest.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from None
    entries = doc.get("experiments") if isinstance(doc, dict) else doc
    if not isinstance(entries, list) or not entries:
        raise ManifestError("manifest lists no experiments")
    out = []
    for j, e in enumerate(entries):
        if isinstance(e, str):
            try:
                e = json.loads((path.parent / e).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ManifestError(f"experiments[{j}]: {exc}") from None
        if not isinstance(e, dict):
            raise ManifestError(f"experiments[{j}] is not an object")
        e = dict(e)
        e.setdefault("name", f"{j:02d}-{e.get('kind', 'experiment')}")
        out.append(e)
    names = [e["name"] for e in out]
    if len(set(names)) != len(names):
        raise ManifestError("experiment names must be unique")
    return out


def default_manifest_path() -> Path:
    return Path(__file__).with_name("data") / "default_manifest.json"


def _run_one(args):
    cfg, seed = args
    return run(cfg, 1, seed)


def suite(configs: list[dict], workers: int = 1, seed: int | None = None) -> list[RunReport]:
    """Run every config; experiments run in parallel processes when workers > 1."""
    if not configs:
        raise ManifestError("empty manifest")
    for j, cfg in enumerate(configs):
        try:
            validate(dict(cfg, **({"seed": seed} if seed is not None else {})))
        except ConfigError as exc:
            raise ConfigError(f"experiments[{j}].{exc.field}", str(exc).split(": ", 1)[-1]) from None
    if workers <= 1 or len(configs) == 1:
        return [run(cfg, 1, seed) for cfg in configs]
    with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
        return list(pool.map(_run_one, [(cfg, seed) for cfg in configs]))


def summary_rows(reports: list[RunReport]) -> list[dict]:
    return [{"name": r.name, "kind": r.config["kind"], "verdict": "pass" if r.verdict else "fail",
             "checks": sum(not c.diagnostic for c in r.checks), "failed": len(r.failures),
             "worst_margin": min((c.margin for c in r.checks if not c.diagnostic), default=0.0),
             "error": r.error or ""} for r in reports]


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR))
