import itertools

import numpy as np
import pytest

from ellqg.classify import (EllipticHighestWeight, balanced_oracle, counter_check, elliptic_drinfeld_data,
                            hbar_strings, parenthesize, product_form, same_isoclass, theta_quotient_form_check,
                            verify_triangularity)
from ellqg.elliptic import trivial_elliptic
from ellqg.errors import FormMismatch, NotHighestWeight
from ellqg.functor import theta_functor
from ellqg.inverse import twist
from ellqg.qloop import make_evaluation_module
from ellqg.theta import ThetaQuotient, lattice_member

from conftest import A_POINT


def b_of(z):
    b = np.log(complex(z)) / (2j * np.pi)
    return b - np.floor(b.real)


def hw_at(a, params):
    return elliptic_drinfeld_data(theta_functor(make_evaluation_module("sl2", a, params, seed=7)))


class TestStrings:
    @pytest.mark.parametrize("expr, ok", [("()", True), ("(())", True), ("()()", True), (")(", False),
                                          ("(()", False), ("())(", False), ("", True)])
    def test_counter(self, expr, ok):
        assert counter_check(expr)[0] is ok

    def test_raising_pair_balanced(self, params):
        b = 0.3 + 0.2j
        diag = theta_quotient_form_check(ThetaQuotient(1.0, [b - params.hbar], [b]), 1, params)
        (s,) = diag.nodes[0][1]
        assert diag.passed and s.expression == "()"

    def test_inverted_pair(self, params):
        b = 0.3 + 0.2j
        diag = theta_quotient_form_check(ThetaQuotient(1.0, [b], [b - params.hbar]), 1, params)
        (s,) = diag.nodes[0][1]
        assert not diag.passed and s.expression == ")("
        # the counter turns positive at the pole
        assert lattice_member(s.first_positive - (b - params.hbar), params.tau)[0]

    def test_strings_modulo_lattice(self, params):
        b, h, tau = 0.3 + 0.2j, params.hbar, params.tau
        f = ThetaQuotient(1.0, [b - h + 1, 0.7 + 0.1j - h], [b + tau, 0.7 + 0.1j])
        strings = hbar_strings(f.zeros, f.poles, h, params)
        assert len(strings) == 2 and all(s.balanced for s in strings)

    def test_knight_form(self, params):
        h = params.hbar
        b1, b2 = 0.3 + 0.2j, 0.75 + 0.5j
        # one raising pair and one lowering pair, in non-congruent strings
        f = ThetaQuotient(1.0, [b1 - h, b2 + h], [b1, b2])
        diag = theta_quotient_form_check(f, 1, params)
        verdicts = sorted(s.balanced for s in diag.nodes[0][1])
        assert verdicts == [False, True]
        for s in diag.nodes[0][1]:
            assert s.balanced == balanced_oracle(s.positions, s.orders)

    def test_exhaustive_against_oracle(self):
        count = 0
        for k in range(0, 5):
            for pos in itertools.combinations(range(5), k):
                for ords in itertools.product([-2, -1, 1, 2], repeat=k):
                    assert counter_check(parenthesize(pos, ords))[0] == balanced_oracle(pos, ords), (pos, ords)
                    count += 1
        assert count == 2101

    def test_exhaustive_on_theta_quotients(self, params):
        # the same configurations, as actual zeros/poles placed on an hbar-string
        h, base = params.hbar, 0.21 + 0.13j
        for k in range(1, 4):
            for pos in itertools.combinations(range(4), k):
                for ords in itertools.product([-1, 1, 2], repeat=k):
                    zeros = [base + n * h for n, o in zip(pos, ords) if o < 0 for _ in range(-o)]
                    poles = [base + n * h for n, o in zip(pos, ords) if o > 0 for _ in range(o)]
                    diag = theta_quotient_form_check(ThetaQuotient(1.0, zeros, poles), 1, params)
                    assert diag.passed == balanced_oracle(pos, ords)

    def test_product_form_reproduces_function(self, params):
        h = params.hbar
        s = 0.4 + 0.25j
        f = ThetaQuotient(2.0, [s - 2 * h, s - 3 * h], [s, s - h])
        C, cs = product_form(f, 1, params)
        assert len(cs) == 4
        g = ThetaQuotient(C, [c - h for c in cs], cs)
        u = 0.13 + 0.61j
        assert abs(g(u, params) - f(u, params)) < 1e-10 * abs(f(u, params))

    def test_product_form_rejects(self, params):
        b = 0.3 + 0.2j
        with pytest.raises(FormMismatch) as info:
            product_form(ThetaQuotient(1.0, [b], [b - params.hbar]), 1, params)
        assert info.value.diagnostic is not None and not info.value.diagnostic.passed


class TestDrinfeldData:
    def test_sl2(self, E2, params):
        hw = elliptic_drinfeld_data(E2)
        assert hw.N == (1,) and np.allclose(hw.mu, [0.5])
        assert lattice_member(hw.b[0][0] - b_of(A_POINT), params.tau)[0]
        assert abs(hw.constants[0] - 1) < 1e-10

    def test_trivial(self, E2, params):
        hw = elliptic_drinfeld_data(trivial_elliptic(E2.datum, params))
        assert hw.N == (0,) and hw.b == ((),)

    def test_rank_two(self, E3, E22):
        assert elliptic_drinfeld_data(E3).N == (1, 0)
        assert elliptic_drinfeld_data(E22).N == (1, 1)

    def test_direct_sum(self, Esum):
        with pytest.raises(NotHighestWeight, match="dimensions \\[2\\]"):
            elliptic_drinfeld_data(Esum)

    def test_gauge_invariant(self, E2):
        T, _ = twist(E2, {0: np.array([2])})
        assert same_isoclass(elliptic_drinfeld_data(T), elliptic_drinfeld_data(E2), E2.params)

    def test_p_shift_same_class(self, E2, params):
        hw = elliptic_drinfeld_data(E2)
        assert same_isoclass(hw, hw_at(A_POINT * params.p, params), params)
        assert same_isoclass(hw, hw_at(A_POINT * params.p ** -2, params), params)

    def test_hbar_shift_different(self, E2, params):
        hw = elliptic_drinfeld_data(E2)
        assert not same_isoclass(hw, hw_at(A_POINT * params.q ** 2, params), params)

    def test_injective(self, params):
        points = [0.25 * np.exp(0.9j), 0.6 * np.exp(2.1j), 0.4 * np.exp(-1.3j), 1.7 * np.exp(0.2j),
                  0.9 * np.exp(2.9j)]
        hws = [hw_at(a, params) for a in points]
        for i, j in itertools.product(range(5), repeat=2):
            assert same_isoclass(hws[i], hws[j], params) == (i == j)

    def test_same_isoclass_lattice_shift(self, params):
        b = 0.3 + 0.2j
        hw1 = EllipticHighestWeight([0.5], ((b,),))
        assert same_isoclass(hw1, EllipticHighestWeight([0.5], ((b + 1 + 3 * params.tau,),)), params)
        assert not same_isoclass(hw1, EllipticHighestWeight([0.5], ((b + params.hbar,),)), params)
        assert not same_isoclass(hw1, EllipticHighestWeight([1.0], ((b, b),)), params)


class TestTriangularity:
    def test_sl2(self, E2):
        rep = verify_triangularity(E2)
        assert rep.closure_dim == 2 and rep.spanning and rep.span_collapse
        assert rep.raising_residual < 1e-12 and rep.eigen_residual < 1e-12

    def test_trivial(self, E2, params):
        rep = verify_triangularity(trivial_elliptic(E2.datum, params))
        assert rep.closure_dim == 1 and rep.spanning

    def test_direct_sum_not_spanning(self, Esum):
        rep = verify_triangularity(Esum)
        assert rep.closure_dim == 2 and rep.dim == 4 and not rep.spanning
