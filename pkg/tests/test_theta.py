import cmath

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ellqg.errors import InvalidArgument, InvalidParams, PoleHit, Unsupported
from ellqg.theta import (ModularParams, ThetaQuotient, check_theta_identities, fay_residual, kernel_eval,
                         lattice_distance, lattice_member, log_theta_derivative, quasi_periodic_expand,
                         slice_reduce, theta, theta_minus, theta_plus, theta_quotient_eval, theta_taylor)

mpmath.mp.dps = 30


def mp_theta(u, tau):
    """Oracle: theta_1 with nome e^{pi i tau}, normalized to unit derivative at 0."""
    q = mpmath.exp(1j * mpmath.pi * mpmath.mpc(tau))
    return complex(mpmath.jtheta(1, mpmath.pi * mpmath.mpc(u), q) / (mpmath.pi * mpmath.jtheta(1, 0, q, 1)))


def mp_kernel_derivative(x, lam, n, tau):
    q = mpmath.exp(1j * mpmath.pi * mpmath.mpc(tau))
    th = lambda v: mpmath.jtheta(1, mpmath.pi * v, q) / (mpmath.pi * mpmath.jtheta(1, 0, q, 1))  # noqa: E731
    f = lambda v: th(v + lam) / (th(v) * th(lam))  # noqa: E731
    return complex((-1) ** n * mpmath.diff(f, mpmath.mpc(x), n) / mpmath.factorial(n))


complexes = st.builds(complex, st.floats(-1.5, 1.5), st.floats(-0.7, 0.7))


class TestParams:
    def test_p_and_q(self, params):
        assert abs(params.p - np.exp(-1.6 * np.pi)) < 1e-15
        assert abs(params.q - np.exp(1j * np.pi * params.hbar)) < 1e-15

    @pytest.mark.parametrize("tau", [0.5, -0.3j, 1 - 1j])
    def test_upper_half_plane(self, tau):
        with pytest.raises(InvalidParams, match="Im\\(tau\\)"):
            ModularParams(tau=tau, hbar=0.3)

    def test_hbar_on_lattice(self):
        with pytest.raises(InvalidParams, match="generic"):
            ModularParams(tau=0.8j, hbar=0.5)

    def test_truncation_too_short(self):
        with pytest.raises(InvalidParams, match="trunc"):
            ModularParams(tau=0.8j, hbar=0.31 + 0.17j, trunc=2)


class TestTheta:
    def test_against_mpmath(self, params):
        rng = np.random.default_rng(1)
        for _ in range(40):
            u = complex(rng.uniform(-2, 2) + rng.uniform(-2, 2) * params.tau)
            ref = mp_theta(u, params.tau)
            assert abs(theta(u, params) - ref) <= 1e-12 * max(1.0, abs(ref))

    def test_derivative_at_zero(self, params):
        c = theta_taylor(0.0, 3, params)
        assert abs(c[0]) < 1e-15 and abs(c[1] - 1) < 1e-13

    def test_identity_suite(self, params):
        rep = check_theta_identities(params, samples=50)
        assert rep.passed and rep.max_residual < 1e-12
        assert set(rep.results) == {"quasi_1", "quasi_tau", "odd", "splitting", "fay"}

    def test_splitting_with_mpmath(self, params):
        for u in (0.1 + 0.2j, -0.37 + 0.05j, 0.8 - 0.3j):
            split = (cmath.sin(cmath.pi * u) / cmath.pi * theta_plus(u, params) * theta_minus(u, params)
                     / theta_plus(0, params) ** 2)
            assert abs(split - mp_theta(u, params.tau)) < 1e-13

    @settings(max_examples=60, deadline=None)
    @given(complexes)
    def test_quasi_periodicity(self, u):
        params = ModularParams(tau=0.8j, hbar=0.31 + 0.17j)
        th = theta(u, params)
        assert abs(theta(u + 1, params) + th) <= 1e-12 * max(1, abs(th))
        mult = -np.exp(-1j * np.pi * params.tau - 2j * np.pi * u)
        assert abs(theta(u + params.tau, params) - mult * th) <= 1e-11 * max(1, abs(mult * th))
        assert abs(theta(-u, params) + th) <= 1e-12 * max(1, abs(th))

    def test_fay(self, params):
        assert fay_residual(0.1 + 0.2j, 0.33 - 0.1j, -0.2 + 0.05j, 0.41 + 0.3j, params) < 1e-13

    def test_log_derivative(self, params):
        u, h = 0.23 + 0.17j, 1e-5
        fd = (np.log(theta(u + h, params)) - np.log(theta(u - h, params))) / (2 * h)
        assert abs(log_theta_derivative(u, 1, params) - fd) < 1e-8

    def test_taylor_against_values(self, params):
        x = 0.31 + 0.42j
        c = theta_taylor(x, 16, params)
        s = 0.01 + 0.02j
        assert abs(np.polyval(c[::-1], s) - theta(x + s, params)) < 1e-14


class TestKernel:
    @pytest.mark.parametrize("n", [0, 1, 2, 4])
    def test_against_mpmath(self, params, n):
        x, lam = 0.21 + 0.13j, 0.17 - 0.08j
        ref = mp_kernel_derivative(x, lam, n, params.tau)
        assert abs(kernel_eval(x, lam, n, params) - ref) <= 1e-10 * max(1.0, abs(ref))

    def test_tau_shift(self, params):
        x, lam = 0.21 + 0.13j, 0.17 - 0.08j
        lhs = kernel_eval(x + params.tau, lam, 0, params)
        assert abs(lhs - np.exp(-2j * np.pi * lam) * kernel_eval(x, lam, 0, params)) < 1e-12

    def test_pole(self, params):
        with pytest.raises(PoleHit):
            kernel_eval(1.0, 0.2, 0, params)
        with pytest.raises(PoleHit):
            kernel_eval(0.3, params.tau, 0, params)

    def test_order_limits(self, params):
        with pytest.raises(InvalidArgument):
            kernel_eval(0.3, 0.2, -1, params)
        with pytest.raises(Unsupported):
            kernel_eval(0.3, 0.2, 40, params)


class TestLattice:
    @settings(max_examples=80, deadline=None)
    @given(complexes)
    def test_slice_reduce(self, x):
        tau = 0.3 + 0.8j
        x0, m, n = slice_reduce(x, tau)
        assert abs(x0 + m + n * tau - x) < 1e-12
        t = x0.imag / tau.imag
        s = x0.real - t * tau.real
        assert -1e-15 <= s < 1 and -1e-15 <= t < 1

    def test_membership(self):
        tau = 0.8j
        assert lattice_member(2 - 3 * tau, tau) == (True, 2, -3)
        assert not lattice_member(0.5, tau)[0]
        assert lattice_distance(1 + tau + 1e-3, tau) == pytest.approx(1e-3)


class TestQuotient:
    def test_shift_ops_preserve_function(self, params):
        f = ThetaQuotient(1.7, [0.1 + 0.2j, 0.3], [0.25 + 0.1j, 0.15 + 0.3j])
        u = 0.41 + 0.33j
        v = f(u, params)
        assert abs(f.shift_zero(0, 3)(u, params) - v) < 1e-12
        assert abs(f.shift_pole(1, -2)(u, params) - v) < 1e-12
        assert abs(f.shift_pair(0, 1, 1, 2, params.tau)(u, params) - v) < 1e-10 * abs(v)

    def test_tau_multiplier(self, params):
        f = ThetaQuotient(1.0, [0.1 + 0.2j], [0.25 + 0.1j])
        u = 0.41 + 0.33j
        ratio = f(u + params.tau, params) / f(u, params)
        assert abs(ratio - f.tau_multiplier()) < 1e-12

    def test_pole_hit(self, params):
        with pytest.raises(PoleHit):
            theta_quotient_eval(ThetaQuotient(1.0, [0.1], [0.2]), 0.2 + params.tau, params)

    def test_json_roundtrip(self):
        f = ThetaQuotient(1 + 2j, [0.1], [0.2 + 0.1j])
        g = ThetaQuotient.from_json(f.to_json())
        assert g.constant == f.constant and g.zeros == f.zeros and g.poles == f.poles


class TestQuasiPeriodic:
    def test_reconstructs_quotient(self, params):
        f = ThetaQuotient(1.3, [0.1 + 0.2j, 0.4 + 0.1j], [0.25 + 0.1j, 0.6 + 0.35j])
        a = -sum(f.zeros) + sum(f.poles)      # f(u + tau) = e^{-2 pi i a} f(u)
        parts = []
        for b in f.poles:
            order, coeffs = f.laurent(b, 1, params)
            assert order == 1
            parts.append((b, 0, coeffs[0]))
        g = quasi_periodic_expand(parts, a, params)
        for u in (0.33 + 0.41j, 0.71 + 0.12j):
            assert abs(g(u) - f(u, params)) < 1e-10 * abs(f(u, params))

    def test_rejects_congruent_poles(self, params):
        with pytest.raises(InvalidArgument, match="congruent"):
            quasi_periodic_expand([(0.1, 0, 1.0), (1.1 + params.tau, 0, 1.0)], 0.3, params)
