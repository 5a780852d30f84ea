import numpy as np
import pytest

from ellqg.elliptic import direct_sum_elliptic
from ellqg.errors import InconsistentData, Unsupported
from ellqg.functor import theta_functor
from ellqg.inverse import (GaugeRecord, _elliptic_residual, _loop_residual, apply_gauge, first_gauge,
                           is_normalized, merge_equal_blocks, normalize_gauges, roundtrip_report, twist, xi_functor)
from ellqg.report import SamplePlan
from ellqg.verify import check_eqg_relations, check_morphism, lambda_constancy


def random_gauge(E, seed=1):
    rng = np.random.default_rng(seed)
    w = [0.3 * (rng.normal(size=E.rank) + 1j * rng.normal(size=E.rank)) for _ in E.blocks]
    c = [complex(rng.normal()) for _ in E.blocks]
    return w, c


class TestGauge:
    def test_gauged_rep_is_isomorphic(self, E3):
        w, c = random_gauge(E3)
        G = apply_gauge(E3, w, c)
        phi = GaugeRecord(tuple(B.projector for B in E3.blocks), tuple(w), tuple(c))
        assert check_morphism(phi, G, E3, SamplePlan(count=5)).passed
        assert check_eqg_relations(G, SamplePlan(count=5), which=("EQ1", "EQ3", "EQ5")).passed
        assert lambda_constancy(G) > 1e-3

    def test_normalize_undoes_gauge(self, E3):
        G = apply_gauge(E3, *random_gauge(E3, 4))
        N, record = normalize_gauges(G)
        assert is_normalized(N)
        assert check_morphism(record, N, G, SamplePlan(count=5)).passed
        assert lambda_constancy(N) < 1e-12
        assert record.constants_before and not record.is_identity

    def test_theta_image_already_normalized(self, E2):
        N, record = normalize_gauges(E2)
        assert record.is_identity and is_normalized(E2)

    def test_twist_recovered_up_to_isomorphism(self, E2):
        T, psi = twist(E2, {0: np.array([1])})
        assert check_morphism(psi, T, E2, SamplePlan(count=5)).passed
        assert not is_normalized(T)
        N, record = normalize_gauges(T)
        assert is_normalized(N)
        assert check_morphism(record, N, T, SamplePlan(count=5)).passed
        # same Phi; the half-currents agree up to a constant diagonal change of basis
        u, lam = 0.37 + 0.21j, np.array([0.1 + 0.05j])
        assert np.allclose(N.phi(0, u), E2.phi(0, u), atol=1e-12)
        r = N.X(0, 1, u, lam)[0, 1] / E2.X(0, 1, u, lam)[0, 1]
        D = np.diag([1.0, r])
        assert check_morphism(lambda lam: D, N, E2, SamplePlan(count=5)).passed

    def test_first_gauge_merges_twisted_copy(self, E2):
        T, _ = twist(E2, {0: np.array([1])})
        S = direct_sum_elliptic(E2, T)
        w, c, exps = first_gauge(S)
        assert {k: v.tolist() for k, v in exps.items() if v.any()} == {2: [1]}
        flat = merge_equal_blocks(apply_gauge(S, w, c))
        assert len(flat.blocks) == 2
        N, _ = normalize_gauges(S)
        NE, _ = normalize_gauges(direct_sum_elliptic(E2, E2))
        assert _elliptic_residual(N, NE) < 1e-12

    def test_unreachable_constant(self, E2):
        # scaling a single block's constant breaks the link with its neighbour
        from ellqg.elliptic import PhiBlock
        from ellqg.theta import ThetaQuotient
        B = E2.blocks[0]
        f = B.quotients[0]
        bad = E2.replace(blocks=(PhiBlock(B.projector, B.weight, (ThetaQuotient(3 * f.constant, f.zeros, f.poles),)),)
                         + E2.blocks[1:])
        with pytest.raises(InconsistentData):
            normalize_gauges(bad)


class TestXi:
    def test_sl2_recovers_loop_data(self, sl2, E2):
        V = xi_functor(E2)
        assert _loop_residual(sl2, V) < 1e-12
        # X^+ = e + a e/(z - a): one simple pole
        assert len(V.Xplus[0].poles) == 1

    def test_requires_normalized(self, E2):
        G = apply_gauge(E2, *random_gauge(E2))
        with pytest.raises(InconsistentData, match="normalize"):
            xi_functor(G)

    def test_requires_blocks(self, sl2):
        with pytest.raises(Unsupported):
            xi_functor(theta_functor(sl2, blocks=False))

    @pytest.mark.parametrize("name", ["sl2", "sl3", "sl2x2", "sl2_sum"])
    def test_roundtrips(self, request, name):
        rep = roundtrip_report(request.getfixturevalue(name))
        assert rep["xi_theta"] < 1e-10 and rep["theta_xi"] < 1e-10

    def test_elliptic_roundtrip(self, E3):
        G = apply_gauge(E3, *random_gauge(E3, 2))
        rep = roundtrip_report(G)
        assert rep["theta_xi"] < 1e-10 and not rep["gauge_identity"]
