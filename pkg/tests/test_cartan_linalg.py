import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ellqg import series
from ellqg.cartan import cartan_of_type, pair, validate_cartan
from ellqg.errors import CommutatorTooLarge, InvalidArgument, InvalidCartan, Unsupported
from ellqg.linalg import joint_spectral_split, max_norm, nilpotent_exp, unipotent_log


class TestCartan:
    @pytest.mark.parametrize("A, d", [([[2, -1], [-1, 2]], (1, 1)), ([[2, -2], [-1, 2]], (1, 2)),
                                      ([[2, -3], [-1, 2]], (1, 3)), ([[2, 0], [0, 2]], (1, 1))])
    def test_symmetrizers(self, A, d):
        datum = validate_cartan(A)
        assert tuple(datum.d) == d
        assert np.allclose(datum.B, datum.B.T)

    @pytest.mark.parametrize("A, msg", [([[2, 1], [-1, 2]], "> 0"), ([[2, -1], [0, 2]], "vanish together"),
                                        ([[3]], "diagonal"), ([[2, -1]], "square")])
    def test_invalid(self, A, msg):
        with pytest.raises(InvalidCartan, match=msg):
            validate_cartan(A)

    def test_pairings(self):
        datum = cartan_of_type("sl3")
        lam = np.array([0.3, -0.2])
        # (lam, alpha_i) = (B lam)_i, lam(alpha_i^vee) = (A lam)_i
        assert np.allclose(datum.root_pairings(lam), datum.B @ lam)
        assert np.allclose(datum.coroot_values(lam), datum.A @ lam)
        w = datum.fundamental_weight(0)
        assert np.allclose(datum.coroot_values(w), [1, 0])

    def test_affine_has_no_fundamental_weights(self):
        datum = validate_cartan([[2, -2], [-2, 2]])
        assert not datum.nondegenerate
        with pytest.raises(Unsupported):
            datum.fundamental_weight(0)

    def test_unknown_type(self):
        with pytest.raises(InvalidArgument):
            cartan_of_type("e8")

    def test_pair_dispatch(self):
        datum = cartan_of_type("sl3")
        lam = np.array([0.5, 0.25])
        assert np.isclose(pair(datum, lam, ("root", 1)), (datum.B @ lam)[1])
        assert np.isclose(pair(datum, lam, ("coroot", 0)), (datum.A @ lam)[0])
        assert np.isclose(pair(datum, lam, ("fund_coweight", 1)), 0.25)
        with pytest.raises(InvalidArgument):
            pair(datum, lam, ("weight", 0))


class TestSeries:
    def test_inverse(self):
        a = np.array([2.0, 1.0, -0.5, 0.25], dtype=complex)
        assert np.allclose(series.mul(a, series.inv(a)), [1, 0, 0, 0])

    def test_exp_and_power(self):
        c = 0.3 + 0.1j
        e = series.exp(np.array([0, c, 0, 0, 0], dtype=complex))
        assert np.allclose(e, series.exp_linear(c, 5))
        a = np.array([1.0, 0.2, 0.1], dtype=complex)
        assert np.allclose(series.power(a, -2), series.inv(series.mul(a, a)))


class TestSpectral:
    def test_joint_split(self):
        rng = np.random.default_rng(3)
        S = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        Si = np.linalg.inv(S)
        D1 = np.diag([1, 1, 2, 2, 3]).astype(complex)
        D2 = np.diag([5, 6, 5, 5, 7]).astype(complex)
        split = joint_spectral_split([S @ D1 @ Si, S @ D2 @ Si])
        assert sorted(split.ranks()) == [1, 1, 1, 2]
        total = sum(split.projectors)
        assert max_norm(total - np.eye(5)) < 1e-10
        for P in split.projectors:
            assert max_norm(P @ P - P) < 1e-10

    def test_noncommuting(self):
        with pytest.raises(CommutatorTooLarge):
            joint_spectral_split([np.array([[1, 1], [0, 2]]), np.array([[1, 0], [1, 2]])])

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-2, 2), min_size=6, max_size=6))
    def test_unipotent_roundtrip(self, xs):
        N = np.zeros((4, 4), dtype=complex)
        N[np.triu_indices(4, 1)] = xs
        M = nilpotent_exp(N)
        assert max_norm(unipotent_log(M) - N) < 1e-9 * max(1.0, max_norm(N)) ** 3

    def test_not_unipotent(self):
        with pytest.raises(InvalidArgument):
            unipotent_log(np.diag([1.0, 2.0]))
