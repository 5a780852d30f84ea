import numpy as np
import pytest

from ellqg.errors import InconsistentData, Unsupported
from ellqg.factorization import (FactorBlock, FactorizationProblem, _h_plus, _h_plus_at_zero, check_factorization,
                                 factorization_report, gplus_zero_residual, isomonodromy_residual,
                                 permuted_resolve_residual, problem_from_erep, scalar_problem, solve_factorization,
                                 uniqueness_preconditions)
from ellqg.linalg import unipotent_log
from ellqg.theta import ThetaQuotient

NIL = np.array([[0, 1], [0, 0]], dtype=complex)


def unipotent_problem(params):
    f = ThetaQuotient(1.0, [0.2 + 0.1j], [0.45 + 0.3j])
    eta = np.exp(1j * np.pi * (f.poles[0] - f.zeros[0]))
    K = eta * (np.eye(2) + 1j * np.pi * NIL)
    return scalar_problem(f, eta, params, nilpotent=((0.7 + 0.2j, 0, NIL),), dim=2, K=K)


class TestSemisimple:
    def test_sl2(self, E2, sl2):
        sol = solve_factorization(problem_from_erep(E2, 0))
        res = check_factorization(sol, phi=lambda u: E2.phi(0, u), samples=20)
        assert res["pass"] and res["F1"] < 1e-12
        for z in (0.3 + 0.4j, -1.2 + 0.1j, 2.5j):
            assert np.allclose(sol.A(z), sl2.Psi[0](z), atol=1e-12)

    def test_report(self, E3):
        rep = factorization_report(E3)
        for node in rep.values():
            assert node["pass"] and node["Gplus_zero"] < 1e-10
            assert node["preconditions"] and node["permuted_resolve"] < 1e-10

    def test_gplus_at_zero_is_constant(self, E2):
        sol = solve_factorization(problem_from_erep(E2, 0))
        G0 = sol.Gplus_at_zero()
        assert np.allclose(np.sort_complex(np.linalg.eigvals(G0)),
                           np.sort_complex([B.quotients[0].constant for B in E2.blocks]))

    def test_uniqueness_and_isomonodromy(self, E2):
        sol = solve_factorization(problem_from_erep(E2, 0))
        perm, other = permuted_resolve_residual(sol)
        assert uniqueness_preconditions(sol.A, E2.params, other=other.A)
        assert perm < 1e-12 and isomonodromy_residual(sol, other) < 1e-10

    def test_inconsistent_K(self, params):
        f = ThetaQuotient(1.0, [0.2 + 0.1j], [0.45 + 0.3j])
        with pytest.raises(InconsistentData, match="consistency"):
            solve_factorization(scalar_problem(f, 2.0, params))

    def test_sign_fix(self, params):
        f = ThetaQuotient(1.0, [0.2 + 0.1j], [0.45 + 0.3j])
        eta = -np.exp(1j * np.pi * (f.poles[0] - f.zeros[0]))
        sol = solve_factorization(scalar_problem(f, eta, params))
        assert check_factorization(sol)["pass"]

    def test_unbalanced(self, params):
        f = ThetaQuotient(1.0, [0.2 + 0.1j, 0.3], [0.45 + 0.3j])
        with pytest.raises(InconsistentData):
            solve_factorization(scalar_problem(f, 1.0, params))


class TestUnipotent:
    def test_factorization(self, params):
        sol = solve_factorization(unipotent_problem(params))
        res = check_factorization(sol, samples=10)
        assert res["pass"] and res["F1"] < 1e-12
        assert gplus_zero_residual(sol) < 1e-10

    def test_h_plus_at_zero(self, params):
        prob = unipotent_problem(params)
        terms = prob.blocks[0].nilpotent
        limit = _h_plus(terms, 0.3 + 6j, params)
        h0 = _h_plus_at_zero(terms, 2)
        assert np.allclose(limit, h0, atol=1e-12)
        # h^+(0) = log K_U = -(1/2) log K_U^{-2}
        KU = prob.K / prob.K[0, 0]
        assert np.allclose(h0, unipotent_log(KU))

    def test_unipotent_K_mismatch(self, params):
        prob = unipotent_problem(params)
        bad = FactorizationProblem(prob.K[0, 0] * np.eye(2), prob.blocks, params)
        with pytest.raises(InconsistentData, match="unipotent"):
            solve_factorization(bad)

    def test_no_taylor_data(self, params):
        sol = solve_factorization(unipotent_problem(params))
        with pytest.raises(Unsupported):
            sol.Gplus_inv_taylor(0.1, 2)

    def test_block_type(self):
        B = FactorBlock(np.eye(2), ThetaQuotient(1.0), ())
        assert B.rank == 2
