import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omilab.errors import CaseUndeclared, InvalidProcessShape, OracleMissing, TimeKindError
from omilab.martingale import (TimeRule, check_L_domination, constant_time, evaluate_time,
                               predictable_battery, time_defect)
from omilab.oracle import (MartingaleArray, OmiFamily, fair_walks, lenglart_infinite, omi_battery,
                           omi_construct, predictable_domination_pair, scalar_implication_check,
                           scalar_implication_search, second_moment_bound, supremal_inequality_infinite)
from omilab.sampling import ProbabilityModel, enumerate_paths, sample_paths


def walk_squares(arr):
    return arr.sums() ** 2


class TestSecondMoment:
    @pytest.mark.parametrize("n", range(1, 11))
    def test_single_walk_against_oracle(self, n, frozen):
        rep = second_moment_bound(fair_walks(n))
        assert [rep.lhs, rep.rhs] == pytest.approx(frozen["second_moment_single"][str(n)], abs=1e-12)
        assert rep.verdict

    def test_two_walks(self, frozen):
        rep = second_moment_bound(fair_walks(2, count=2))
        assert [rep.lhs, rep.rhs] == pytest.approx(frozen["second_moment_pair_T2"], abs=1e-12)

    def test_predictable_battery(self):
        arr = fair_walks(6, count=2)
        rules = predictable_battery([walk_squares(arr).max(axis=0)], 6, size=24, seed=1)
        for T in rules:
            assert time_defect(evaluate_time(T, arr.ensemble), arr.ensemble, lag=1) == 0
            assert second_moment_bound(arr, T=T).verdict

    def test_stopping_time_rejected(self):
        with pytest.raises(TimeKindError):
            second_moment_bound(fair_walks(3), T=constant_time(2, "stopping"))

    def test_dyadic_innovations(self):
        model = ProbabilityModel.finite([-1.0, 0.0, 3.0], [0.5, 0.25, 0.25])
        ens = enumerate_paths(model, 5)
        mean = -0.5 + 0.75
        arr = MartingaleArray.from_innovations(ens, [lambda v: v - mean, lambda v: (v > 0) - 0.25])
        assert second_moment_bound(arr).verdict

    def test_shape_and_martingale_validation(self):
        ens = enumerate_paths(ProbabilityModel.rademacher(), 2)
        with pytest.raises(InvalidProcessShape):
            MartingaleArray(ens, (0,), np.ones((1, ens.size, 3)))
        bad = np.zeros((1, ens.size, 3))
        bad[0, :, 1] = 1.0
        with pytest.raises(InvalidProcessShape):
            MartingaleArray(ens, (0,), bad)
        mc = sample_paths(ProbabilityModel.rademacher(), 2, 10, seed=0)
        with pytest.raises(OracleMissing):
            MartingaleArray(mc, (0,), np.zeros((1, 10, 3)))


class TestScalar:
    def test_examples(self):
        assert scalar_implication_check(0, 0, 0)
        assert scalar_implication_check(9, 3, 0)
        assert scalar_implication_check(100, 0, 1)
        x = (1 + math.sqrt(4)) ** 2   # premise boundary at y = z = 1
        assert scalar_implication_check(x, 1, 1)

    def test_search(self):
        res = scalar_implication_search(30_000, seed=3)
        assert res.triples == 30_000 and res.violations == 0 and res.min_conclusion_margin >= 0

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(0, 1e6))
    def test_property(self, x, y, z):
        assert scalar_implication_check(x, y, z)


class TestOmi:
    def test_two_walks_against_oracle(self, frozen):
        arr = fair_walks(2, count=2)
        cert = omi_construct(walk_squares(arr), arr.ensemble)
        assert cert.margins.min(axis=0) == pytest.approx(frozen["omi_two_walks_n2"], abs=1e-12)

    def test_single_walk_against_oracle(self, frozen):
        arr = fair_walks(3)
        cert = omi_construct(walk_squares(arr), arr.ensemble)
        assert cert.margins.min(axis=0) == pytest.approx(frozen["omi_single_walk_n3"], abs=1e-12)
        assert cert.holds()

    def test_dyadic_family_against_oracle(self, frozen):
        desc = frozen["omi_dyadic_family"]
        fam = OmiFamily("dyadic", ProbabilityModel.finite([0.0, 1.0, 2.0], desc["probs"]), desc["n"],
                        tuple(map(tuple, desc["steps"])), tuple(desc["transforms"]))
        X, ens = fam.build()
        cert = omi_construct(X, ens)
        assert cert.margins.min(axis=0) == pytest.approx(desc["min_margins"], abs=1e-12)
        # the independent computation also finds the pathwise failure at n = 3
        assert not cert.holds() and cert.violations()[0]["n"] == 3

    @pytest.mark.parametrize("variant", ["literal", "single-max", "lagged"])
    def test_certificates(self, variant):
        for fam in omi_battery(count=12, seed=5):
            X, ens = fam.build()
            cert = omi_construct(X, ens, variant=variant)
            d1, d2 = cert.martingale_defects()
            assert d1 <= 1e-12 and d2 <= 1e-12
            assert cert.selector_defect() == 0
            # predictable projection and compensator
            assert np.allclose(cert.pY.sum(axis=0)[:, 1:], 1.0, atol=1e-12)
            assert np.array_equal(cert.Yp[:, :, 0], cert.Y[:, :, 0])

    def test_expectation_form_on_battery(self):
        for fam in omi_battery(count=20, seed=2):
            X, ens = fam.build()
            lhs, rhs = omi_construct(X, ens).expectation_form()
            assert np.all(lhs <= rhs + 1e-9)

    def test_selector_ties_go_to_lowest_label(self):
        arr = fair_walks(2)
        S2 = walk_squares(arr)[0]
        cert = omi_construct([S2, S2, S2], arr.ensemble)
        assert np.all(cert.Y[0] == 1) and np.all(cert.Y[1:] == 0)

    def test_rejects_non_submartingale(self):
        from omilab.errors import NotSubmartingale
        arr = fair_walks(2)
        with pytest.raises(NotSubmartingale):
            omi_construct([-walk_squares(arr)[0]], arr.ensemble)

    def test_expectation_nondecreasing_in_index_set(self):
        fam = omi_battery(count=1, seed=11, max_labels=4)[0]
        X, ens = fam.build()
        prev = None
        for m in range(1, len(X) + 1):
            lhs, _ = omi_construct(X[:m], ens).expectation_form()
            if prev is not None:
                assert np.all(lhs >= prev - 1e-12)
            prev = lhs

    def test_rows_and_reports(self):
        arr = fair_walks(2, count=2)
        cert = omi_construct(walk_squares(arr), arr.ensemble)
        rows = cert.to_rows("w")
        assert len(rows) == 2 * 16 and all(r["verdict"] == "pass" for r in rows)
        reps = cert.reports("w")
        assert len(reps) == 4 and all(r.verdict for r in reps)


class TestSupremal:
    def test_case_required(self):
        arr = fair_walks(3, count=2)
        with pytest.raises(CaseUndeclared):
            supremal_inequality_infinite(arr, [[0], [0, 1]])

    @pytest.mark.parametrize("p", [1, 2])
    def test_finite_walks(self, p):
        arr = fair_walks(4, count=3)
        rep = supremal_inequality_infinite(arr, [[0], [0, 1], [0, 1, 2]], p=p, case="a")
        assert rep.verdict
        rep_b = supremal_inequality_infinite(arr, [[0], [0, 1, 2]], p=p, case="b")
        assert rep_b.verdict and len(rep_b.params["cover_counts_quarter_diameter"]) == 4

    def test_monte_carlo_with_oracle(self):
        model = ProbabilityModel.uniform()
        ens = sample_paths(model, 16, 2000, seed=4)
        funcs = [lambda v, t=t: (v <= t) - t for t in (0.25, 0.5, 0.75)]
        arr = MartingaleArray.from_innovations(ens, funcs)
        rep = supremal_inequality_infinite(arr, [[0], [0, 1, 2]], case="a")
        assert rep.provenance == "montecarlo" and rep.verdict


class TestDomination:
    @pytest.mark.parametrize("count,n", [(1, 4), (2, 3), (3, 3)])
    def test_pair(self, count, n):
        arr = fair_walks(n, count=count)
        X, A = predictable_domination_pair(arr)
        # constant innovations variance: A^ = 6k + 12 for k >= 1
        assert np.allclose(A.values[:, 1:], 6 * np.arange(1, n + 1) + 12)
        assert np.all(np.diff(A.values, axis=1) >= 0)
        rules = predictable_battery([X.values], n, size=12, seed=0)
        assert all(r.verdict for r in check_L_domination(X, A, arr.ensemble, "predictable", rules))

    def test_horizon_stops(self):
        arr = fair_walks(4)
        X, A = predictable_domination_pair(arr, horizon=2)
        assert np.all(X.values[:, 3:] == X.values[:, [2]])
        assert np.all(A.values[:, 3:] == A.values[:, [2]])


class TestLenglart:
    def test_grid(self):
        arr = fair_walks(5, count=2)
        for eps in (0.5, 1.0, 2.0, 4.0):
            for gamma in (0.5, 2.0, 10.0, 40.0):
                rep = lenglart_infinite(arr, c=0.5, T=constant_time(5), eps=eps, gamma=gamma)
                assert rep.verdict

    def test_requirements(self):
        arr = fair_walks(3)
        with pytest.raises(TimeKindError):
            lenglart_infinite(arr, T=constant_time(2, "stopping"))
        with pytest.raises(ValueError):
            lenglart_infinite(arr, T=TimeRule("predictable", lambda k, v: True, 3))
