import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omilab.errors import (InvalidProcessShape, MeasurabilityViolation, ModeError, NotSubmartingale,
                           TimeKindError)
from omilab.martingale import (AdaptedProcess, TimeRule, check_L_domination, constant_time, doob_decompose,
                               evaluate_time, lenglart_check, martingale_defect, predictable_battery,
                               predictable_compensator, predictable_projection, threshold_time, time_defect)
from omilab.sampling import ProbabilityModel, enumerate_paths, sample_paths


def walk(n, model=None):
    ens = enumerate_paths(model or ProbabilityModel.rademacher(), n)
    return ens, ens.partial_sums()


@st.composite
def submartingales(draw):
    s = draw(st.integers(2, 3))
    counts = draw(st.lists(st.integers(1, 3), min_size=s, max_size=s))
    probs = np.array(counts) / sum(counts)
    vals = np.array(draw(st.lists(st.integers(-3, 3), min_size=s, max_size=s)), dtype=float)
    vals -= vals @ probs
    n = draw(st.integers(1, 4))
    ens = enumerate_paths(ProbabilityModel.finite(np.arange(s, dtype=float), probs), n)
    S = np.zeros((ens.size, n + 1))
    np.cumsum(vals[ens.atoms], axis=1, out=S[:, 1:])
    kind = draw(st.sampled_from(["square", "abs", "positive"]))
    X = {"square": S**2, "abs": np.abs(S), "positive": np.maximum(S, 0)}[kind]
    return ens, X


class TestAdaptedProcess:
    def test_shape_checked(self):
        ens, _ = walk(2)
        with pytest.raises(InvalidProcessShape):
            AdaptedProcess(np.zeros((4, 2)), ens)

    def test_partial_sums_are_adapted(self):
        ens, S = walk(3)
        p = AdaptedProcess(S, ens)
        assert p.adaptedness_defect() == 0.0
        assert AdaptedProcess(np.roll(S, -1, axis=1), ens).adaptedness_defect() > 0

    def test_csv_round_trip(self, tmp_path):
        ens, S = walk(2)
        AdaptedProcess(S / 3, ens).to_csv(tmp_path / "s.csv")
        back = np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)
        assert np.array_equal(back[:, 1:], S / 3)


class TestDoob:
    def test_squared_walk(self):
        ens, S = walk(3)
        dec = doob_decompose(S**2, ens)
        assert np.array_equal(dec.A.values[0], [0, 1, 2, 3])
        assert dec.martingale_defect() <= 1e-12

    def test_rejects_supermartingale(self):
        ens, S = walk(2)
        with pytest.raises(NotSubmartingale) as err:
            doob_decompose(-(S**2), ens)
        assert err.value.time == 1 and err.value.margin == -1.0

    def test_needs_start_at_zero(self):
        ens, S = walk(2)
        with pytest.raises(InvalidProcessShape):
            doob_decompose(S + 1, ens)

    def test_refuses_montecarlo(self):
        ens = sample_paths(ProbabilityModel.rademacher(), 2, 10, seed=0)
        with pytest.raises(ModeError):
            doob_decompose(ens.partial_sums() ** 2, ens)

    @given(submartingales())
    def test_invariants(self, case):
        ens, X = case
        dec = doob_decompose(X, ens)
        A, M = dec.A.values, dec.M.values
        assert np.all(A[:, 0] == 0) and np.all(M[:, 0] == 0)
        assert np.all(np.diff(A, axis=1) >= -1e-12)
        assert np.max(np.abs(A + M - X)) <= 1e-12
        assert martingale_defect(M, ens) <= 1e-12
        for k in range(1, ens.n_steps + 1):
            assert ens.measurable_defect(A[:, k], k - 1) <= 1e-12

    @given(submartingales(), st.integers(1, 4), st.floats(0.1, 2.0))
    def test_uniqueness_under_predictable_perturbation(self, case, k, size):
        ens, X = case
        k = min(k, ens.n_steps)
        dec = doob_decompose(X, ens)
        # a nonzero predictable perturbation of A at time k
        delta = np.zeros_like(X)
        delta[:, k:] = size * (1 + ens.paths[:, 0] ** 2)[:, None] if k > 1 else size
        assert martingale_defect(dec.M.values - delta, ens) > 1e-9


class TestProjections:
    def test_projection_and_compensator(self):
        ens, S = walk(2)
        Y = (S > 0).astype(float)
        pY = predictable_projection(Y, ens).values
        assert np.array_equal(pY[:, 1], np.full(4, 0.5))
        Yp = predictable_compensator(Y, ens).values
        assert martingale_defect(Y - Yp, ens) <= 1e-12
        for k in range(1, 3):
            assert ens.measurable_defect(pY[:, k], k - 1) == 0.0


class TestTimes:
    def test_constant(self):
        ens, _ = walk(3)
        assert np.all(evaluate_time(constant_time(2), ens) == 2)

    def test_predictable_rule_cannot_peek(self):
        ens, S = walk(3)
        peek = TimeRule("predictable", lambda k, view: view.value(S, k) > 0, 3)
        with pytest.raises(MeasurabilityViolation):
            evaluate_time(peek, ens)
        ok = TimeRule("stopping", lambda k, view: view.value(S, k) > 0, 3)
        T = evaluate_time(ok, ens)
        assert time_defect(T, ens, 0) == 0.0

    def test_threshold_times_are_measurable(self):
        ens, S = walk(4)
        for kind, lag in (("predictable", 1), ("stopping", 0)):
            T = evaluate_time(threshold_time(S**2, 1.0, 4, kind), ens)
            assert time_defect(T, ens, lag) == 0.0
            assert T.max() <= 4

    def test_battery_size_and_kind(self):
        ens, S = walk(4)
        rules = predictable_battery([S**2], 4, size=20)
        assert len(rules) >= 20 and all(r.kind == "predictable" for r in rules)
        for r in rules:
            assert time_defect(evaluate_time(r, ens), ens, 1) == 0.0

    def test_optional_sampling(self):
        ens, S = walk(5)
        M = S**2 - np.arange(6)
        for kind in ("stopping", "predictable"):
            for rule in predictable_battery([S**2, np.abs(S)], 5, size=16, kind=kind):
                T = evaluate_time(rule, ens)
                assert abs(np.sum(ens.weights * M[np.arange(ens.size), T])) <= 1e-9


class TestDomination:
    def test_squared_walk_dominated_by_compensator(self):
        ens, S = walk(5)
        A = np.broadcast_to(np.arange(6.0), S.shape)
        rules = predictable_battery([S**2], 5, size=12, kind="stopping")
        reps = check_L_domination(S**2, A, ens, "stopping", rules)
        assert all(r.verdict for r in reps)
        assert max(abs(r.lhs - r.rhs) for r in reps) <= 1e-12

    def test_kind_mismatch(self):
        ens, S = walk(2)
        A = np.broadcast_to(np.arange(3.0), S.shape)
        with pytest.raises(TimeKindError):
            check_L_domination(S**2, A, ens, "stopping", [constant_time(1, "predictable")])

    def test_lenglart_deterministic_example(self):
        ens, _ = walk(2)
        t = np.broadcast_to(np.arange(3.0), (ens.size, 3))
        r = lenglart_check(t, t, ens, "predictable", constant_time(2), eps=3, gamma=1)
        assert r.lhs == 0.0 and r.rhs == pytest.approx(1 / 3 + 1)

    def test_lenglart_large_thresholds(self):
        ens, S = walk(4)
        A = np.broadcast_to(np.arange(5.0), S.shape)
        r = lenglart_check(S**2, A, ens, "stopping", constant_time(4, "stopping"), eps=100, gamma=10)
        assert r.lhs == 0.0 and r.rhs == 10 / 100

    def test_lenglart_grid(self):
        ens, S = walk(6)
        A = np.broadcast_to(np.arange(7.0), S.shape)
        for kind in ("stopping", "predictable"):
            for rule in predictable_battery([S**2], 6, size=8, kind=kind):
                for eps in (1, 4, 9, 16):
                    for gamma in (0.5, 2, 5):
                        assert lenglart_check(S**2, A, ens, kind, rule, eps, gamma).verdict
