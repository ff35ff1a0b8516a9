import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omilab.classes import (FunctionClass, explicit_table, from_description, indicator_intervals,
                            lipschitz_grid, suzuki_budget_level, suzuki_class, suzuki_union)
from omilab.covering import (PseudometricMatrix, bracketing_number, covering_number, difference_field,
                             disjointify_cover, field_pseudometric, packing_number, pseudometric_matrix,
                             sudakov_diagnostic)
from omilab.errors import BudgetExceeded, NoCentering, NoMomentSource, NotACover, TooLargeForExact
from omilab.sampling import ProbabilityModel, sample_paths

U = ProbabilityModel.uniform()


class TestSuzuki:
    @pytest.mark.parametrize("m,size", [(1, 2), (2, 6), (3, 20), (4, 70)])
    def test_sizes(self, m, size):
        assert len(suzuki_class(m)) == size == math.comb(2 * m, m)

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_every_member_integrates_to_half(self, m):
        cls = suzuki_class(m)
        assert np.all(cls.centering(cls.labels, U) == 0.5)
        # independent check by midpoint evaluation on each cell
        x = (np.arange(2 * m) + 0.5) / (2 * m)
        assert np.all(cls.evaluate(cls.labels, x).mean(axis=1) == 0.5)

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            suzuki_class(10, budget=1000)
        assert suzuki_budget_level(100) == 4 and len(suzuki_union(4)) == 98

    def test_envelope_is_one(self):
        cls = suzuki_class(3)
        x = np.linspace(0, 0.999, 50)
        cls.check_envelope(cls.labels, x)
        assert np.all(cls.envelope(x) == 1)


class TestOtherFamilies:
    def test_lipschitz_centering(self):
        cls = lipschitz_grid(4)
        exact = cls.centering(cls.labels, U)
        quad = [U.expect(lambda x, t=t: np.abs(x - t), points=[t]) for t in cls.labels]
        assert np.allclose(exact, quad, atol=1e-12)

    def test_intervals(self):
        cls = indicator_intervals(4)
        assert np.array_equal(cls.centering(cls.labels, U), [0.25, 0.5, 0.75, 1.0])

    def test_table_class(self):
        cls, model = explicit_table([0, 1, 2], [0.5, 0.25, 0.25], {"a": [1, 0, 0], "b": [0, 1, -1]})
        assert np.array_equal(cls.centering(cls.labels, model), [0.5, 0.0])
        with pytest.raises(ValueError):
            cls.evaluate(["a"], np.array([0.5]))

    def test_missing_centering(self):
        cls = FunctionClass([0], lambda lab, x: x, lambda x: np.abs(x))
        with pytest.raises(NoCentering):
            cls.centering([0], U)

    def test_description_loader(self):
        cls, model = from_description('{"family": "suzuki", "m": 2}')
        assert len(cls) == 6 and model.law == "uniform"
        cls, _ = from_description({"family": "lipschitz-grid", "k": 5})
        assert len(cls) == 6
        with pytest.raises(ValueError):
            from_description({"family": "nope"})


class TestPseudometric:
    def test_suzuki_h1(self):
        cls = suzuki_class(1)
        d = pseudometric_matrix(cls, cls.labels, U, 2)
        assert d.d[0, 1] == 1.0 and d.provenance == "analytic"

    def test_lipschitz_against_symbolic_oracle(self, frozen):
        cls = lipschitz_grid(4)
        d = pseudometric_matrix(cls, [0.0, 0.5, 0.25, 1.0], U, 2)
        assert d.d[0, 1] == pytest.approx(frozen["lipschitz_distance"]["0,0.5"], abs=1e-10)
        assert d.d[2, 3] == pytest.approx(frozen["lipschitz_distance"]["0.25,1"], abs=1e-10)

    def test_identical_members(self):
        cls, model = explicit_table([0, 1], [0.5, 0.5], {"a": [1, 2], "b": [1, 2]})
        assert pseudometric_matrix(cls, cls.labels, model).d[0, 1] == 0.0

    def test_envelope_violation_rejected(self):
        cls = FunctionClass([0, 1], lambda lab, x: x + lab, lambda x: np.abs(x), name="bad")
        ens = sample_paths(U, 1, 50, seed=0)
        with pytest.raises(ValueError):
            pseudometric_matrix(cls, cls.labels, ProbabilityModel.normal(), 2, ensemble=ens)

    def test_no_moment_source(self):
        cls = FunctionClass([0, 1], lambda lab, x: np.sin(x + lab), lambda x: np.ones(np.shape(x)))
        with pytest.raises(NoMomentSource):
            pseudometric_matrix(cls, cls.labels, ProbabilityModel.normal(), 2)
        ens = sample_paths(ProbabilityModel.normal(), 1, 100, seed=0)
        d = pseudometric_matrix(cls, cls.labels, ProbabilityModel.normal(), 2, ensemble=ens)
        assert d.provenance == "ensemble-estimated" and d.d[0, 1] > 0

    @pytest.mark.parametrize("p", [1, 2])
    def test_triangle_inequality(self, p):
        for cls in (suzuki_union(3), lipschitz_grid(6), indicator_intervals(7)):
            d = pseudometric_matrix(cls, cls.labels, U, p)
            assert d.triangle_defect() <= 1e-9

    def test_difference_field_metric(self):
        rng = np.random.default_rng(0)
        vals = rng.normal(size=(5, 200))
        w = np.full(200, 1 / 200)
        d = field_pseudometric(vals, w, 2).d
        diff, pairs = difference_field(vals)
        dd = field_pseudometric(diff, w, 2).d
        for a, (t, s) in enumerate(pairs):
            for b, (t2, s2) in enumerate(pairs):
                assert dd[a, b] <= d[t, t2] + d[s, s2] + 1e-12
                assert dd[a, b] <= d[t, s] + d[t2, s2] + 1e-12


def random_metric(seed, L):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(L, 2))
    return PseudometricMatrix(tuple(range(L)), np.linalg.norm(pts[:, None] - pts[None], axis=2))


class TestCovering:
    def test_examples(self):
        cls = suzuki_class(1)
        d = pseudometric_matrix(cls, cls.labels, U)
        r = covering_number(d, 0.5, "exact")
        assert r.N == 2
        assert covering_number(d, 1.5).N == 1
        single = PseudometricMatrix(("a",), np.zeros((1, 1)))
        for eps in (1e-6, 1.0, 10.0):
            assert covering_number(single, eps, "exact").N == 1
        cells = disjointify_cover(r, d)
        assert cells.disjoint_cells == [[(1, (0,))], [(1, (1,))]]

    def test_overlap_goes_to_lower_center(self):
        d = PseudometricMatrix((0, 1, 2), np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], dtype=float))
        from omilab.covering import CoverReport
        rep = CoverReport(1.5, 2, [0, 2], "manual", center_index=[0, 2])
        cells = disjointify_cover(rep, d)
        assert cells.disjoint_cells == [[0, 1], [2]]
        assert cells.representatives == [0, 2]

    def test_not_a_cover(self):
        d = random_metric(0, 5)
        from omilab.covering import CoverReport
        with pytest.raises(NotACover):
            disjointify_cover(CoverReport(1e-3, 1, [0], "manual", center_index=[0]), d)

    def test_exact_limit(self):
        with pytest.raises(TooLargeForExact):
            covering_number(random_metric(0, 21), 0.5, "exact")

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 12), st.floats(0.05, 3.0), st.floats(0.05, 3.0))
    def test_properties(self, seed, L, e1, e2):
        d = random_metric(seed, L)
        lo, hi = min(e1, e2), max(e1, e2)
        g_lo, g_hi = covering_number(d, lo), covering_number(d, hi)
        x_lo, x_hi = covering_number(d, lo, "exact"), covering_number(d, hi, "exact")
        assert x_lo.N <= g_lo.N and x_hi.N <= g_hi.N
        assert x_lo.N >= x_hi.N
        for rep in (g_lo, x_lo):
            idx = [d.labels.index(c) for c in rep.centers]
            assert np.all((d.d[idx] < rep.epsilon).any(axis=0))
            cells = disjointify_cover(rep, d)
            flat = sorted(lab for c in cells.disjoint_cells for lab in c)
            assert flat == sorted(d.labels)
        # minimality of the exact cover: no smaller subset covers
        if x_lo.N > 1 and L <= 8:
            import itertools
            ball = d.d < lo
            for combo in itertools.combinations(range(L), x_lo.N - 1):
                assert not np.all(ball[list(combo)].any(axis=0))

    def test_cells_inside_balls(self):
        d = random_metric(3, 15)
        rep = disjointify_cover(covering_number(d, 0.8), d)
        owners = sorted(rep.center_index)
        kept = 0
        for cell in rep.disjoint_cells:
            # each cell lies in the ball of some center, the lowest that contains its members
            assert any(all(d.d[c, lab] < 0.8 for lab in cell) for c in owners)
            kept += len(cell)
        assert kept == 15

    def test_sudakov(self):
        assert sudakov_diagnostic([(1.0, 1)]) == [(1.0, 0.0)]
        assert sudakov_diagnostic([(0.5, 2)])[0][1] == pytest.approx(0.1733, abs=1e-4)
        vals = [v for _, v in sudakov_diagnostic([(e, 7) for e in (0.5, 0.1, 0.01, 0.001)])]
        assert vals == sorted(vals, reverse=True) and vals[-1] < 1e-5
        with pytest.raises(ValueError):
            sudakov_diagnostic([(0.5, 0)])


class TestPacking:
    def test_suzuki_packing_grows(self):
        sizes = []
        for M in range(1, 5):
            cls = suzuki_union(M)
            sizes.append(packing_number(pseudometric_matrix(cls, cls.labels, U), 0.7)[0])
        assert sizes == [2, 6, 6, 14]

    def test_packing_is_separated(self):
        d = random_metric(1, 12)
        k, labs = packing_number(d, 1.0)
        idx = [d.labels.index(x) for x in labs]
        sub = d.d[np.ix_(idx, idx)] + np.eye(k) * 10
        assert np.all(sub >= 1.0)
        assert packing_number(d, 1.0, "greedy")[0] <= k


class TestBrackets:
    def test_examples(self):
        cls = suzuki_class(1)
        assert bracketing_number(cls, cls.labels, U, 0.5).N == 2
        single, model = explicit_table([0, 1], [0.5, 0.5], {"h": [0.0, 1.0]})
        rep = bracketing_number(single, single.labels, model, 0.1)
        assert rep.N == 1 and rep.brackets == [(("min", ("h",)), ("max", ("h",)))]
        close, model = explicit_table([0, 1], [0.5, 0.5], {"a": [0.0, 1.0], "b": [0.05, 1.0]})
        assert bracketing_number(close, close.labels, model, 0.1).N == 1

    @pytest.mark.parametrize("cls", [suzuki_union(2), indicator_intervals(8), lipschitz_grid(5)],
                             ids=["suzuki", "intervals", "lipschitz"])
    def test_greedy_versus_exact_and_covering(self, cls):
        grid = np.linspace(0, 1, 241)[:-1]
        d = pseudometric_matrix(cls, cls.labels, U, 2)
        for eps in (0.15, 0.3, 0.6, 1.1):
            g = bracketing_number(cls, cls.labels, U, eps)
            x = bracketing_number(cls, cls.labels, U, eps, method="exact")
            assert x.N <= g.N
            assert g.check(cls, grid) and x.check(cls, grid)
            assert covering_number(d, eps, "exact").N <= x.N
