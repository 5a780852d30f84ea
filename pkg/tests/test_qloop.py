import numpy as np
import pytest

from ellqg.cartan import cartan_of_type
from ellqg.errors import InvalidArgument, InvalidParams, NotHighestWeight, PoleHit
from ellqg.qloop import (QLoopRep, RationalMatFun, check_qloop_relations, conjugate_rep, congruence_exponent,
                         direct_sum, is_non_congruent, make_evaluation_module, poles_lemma_check,
                         qloop_highest_weight, trivial_module)
from ellqg.report import SamplePlan

from conftest import A_POINT, B_POINT


class TestRationalMatFun:
    def test_eval_and_at_zero(self):
        C = np.array([[1, 2], [0, 1]], dtype=complex)
        F = RationalMatFun(np.eye(2), ((0.5, (C,)), (2.0, (0 * C, C))))
        z = 0.3 + 0.2j
        assert np.allclose(F(z), np.eye(2) + C / (z - 0.5) + C / (z - 2) ** 2)
        assert np.allclose(F.at_zero(), F(0.0))
        assert F.pole_order(2.0) == 2

    def test_pole_at_zero_rejected(self):
        with pytest.raises(InvalidArgument):
            RationalMatFun(np.eye(1), ((0.0, (np.eye(1),)),))

    def test_pole_hit(self):
        F = RationalMatFun(np.eye(1), ((0.5, (np.eye(1),)),))
        with pytest.raises(PoleHit):
            F(0.5)

    def test_from_callable(self):
        C1, C2 = np.array([[1.0, 2.0]]), np.array([[0.5, -1j]])
        f = lambda z: np.array([[3.0, 1.0]]) + C1 / (z - 0.4) + C2 / (z + 0.7j) ** 2  # noqa: E731
        F = RationalMatFun.from_callable(f, [0.4, -0.7j], [1, 2], np.array([[3.0, 1.0]]))
        z = 1.3 - 0.2j
        assert np.max(np.abs(F(z) - f(z))) < 1e-12


class TestEvaluationModules:
    @pytest.mark.parametrize("name", ["sl2", "sl3", "sl2x2"])
    def test_relations(self, request, name):
        rep = request.getfixturevalue(name)
        report = check_qloop_relations(rep, SamplePlan(count=20, seed=7))
        assert report.passed, report.failures()
        assert report.max_residual < 1e-10
        for rel in ("QL1", "QL2", "QL3", "QL4", "QL5", "normalization"):
            assert rel in report

    def test_dimensions(self, sl2, sl3, sl2x2):
        assert (sl2.dim, sl3.dim, sl2x2.dim) == (2, 3, 4)

    def test_corrupted_module_fails(self, sl2):
        bad = QLoopRep(sl2.datum, sl2.params, sl2.weights, sl2.Psi, sl2.Xplus,
                       tuple(F.transform(lambda M: 1.5 * M) for F in sl2.Xminus))
        report = check_qloop_relations(bad, SamplePlan(count=10, seed=7))
        assert not report.passed
        assert report["QL5"].max_residual > 1e-3

    def test_conjugation_invariance(self, sl3):
        S = np.diag([1.0, 2.0 - 1j, 0.5])
        report = check_qloop_relations(conjugate_rep(sl3, S), SamplePlan(count=10, seed=3))
        assert report.passed

    def test_direct_sum(self, sl2_sum):
        assert sl2_sum.dim == 4
        assert check_qloop_relations(sl2_sum, SamplePlan(count=10)).passed
        assert is_non_congruent(sl2_sum)

    def test_trivial(self, params):
        rep = trivial_module(cartan_of_type("sl3"), params)
        assert check_qloop_relations(rep, SamplePlan(count=5)).passed

    def test_bad_points(self, params):
        with pytest.raises(InvalidArgument):
            make_evaluation_module("sl2", 0.0, params)
        with pytest.raises(InvalidParams, match="generic"):
            make_evaluation_module("sl2", 0.3, params.replace(hbar=0.5 + 1e-12))

    def test_poles_lemma(self, sl3):
        assert poles_lemma_check(sl3)


class TestHighestWeight:
    def test_sl2_drinfeld_root(self, sl2, params):
        data = qloop_highest_weight(sl2)
        assert np.allclose(data.mu, [0.5])
        (roots,) = data.roots
        assert len(roots) == 1 and abs(roots[0] - A_POINT) < 1e-10

    def test_sl2xsl2(self, sl2x2):
        data = qloop_highest_weight(sl2x2)
        assert abs(data.roots[0][0] - A_POINT) < 1e-10 and abs(data.roots[1][0] - B_POINT) < 1e-10

    def test_direct_sum_not_highest_weight(self, sl2_sum):
        with pytest.raises(NotHighestWeight):
            qloop_highest_weight(sl2_sum)


class TestCongruence:
    def test_exponent(self, params):
        assert congruence_exponent(A_POINT * params.p ** 3, A_POINT, params) == 3
        assert congruence_exponent(A_POINT * params.q, A_POINT, params) is None

    def test_congruent_sum(self, params):
        rep = direct_sum(make_evaluation_module("sl2", A_POINT, params),
                         make_evaluation_module("sl2", A_POINT * params.p, params))
        assert not is_non_congruent(rep)
