"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test prints a single ``PASS``/``FAIL`` line; the lines are repeated in
the terminal summary so they survive output capture.
"""
import itertools
import json

import mpmath
import numpy as np

from ellqg.classify import (balanced_oracle, counter_check, elliptic_drinfeld_data, parenthesize, same_isoclass,
                            theta_quotient_form_check)
from ellqg.cli import main
from ellqg.factorization import factorization_report
from ellqg.functor import highest_weight_formulas, theta_functor
from ellqg.inverse import roundtrip_report
from ellqg.qloop import QLoopRep, check_qloop_relations, make_evaluation_module
from ellqg.report import SamplePlan
from ellqg.theta import ThetaQuotient, check_theta_identities, theta
from ellqg.verify import check_eqg_relations, check_serre

from conftest import A_POINT

RESULTS = []

EQG = ("EQ1", "EQ2", "EQ3", "EQ4", "EQ5")
PERIODICITY = ("periodicity_phi_1", "periodicity_phi_tau", "periodicity_X_1", "periodicity_X_tau",
               "periodicity_X_lambda", "difference_equation")
POINTS = [0.25 * np.exp(0.9j), 0.6 * np.exp(2.1j), 0.4 * np.exp(-1.3j), 1.7 * np.exp(0.2j), 0.9 * np.exp(2.9j)]


def verdict(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    RESULTS.append(line)
    assert ok, line


def test_theta_identities(params):
    rep = check_theta_identities(params, samples=200, seed=7)
    # independent extended-precision check of the function itself
    mpmath.mp.dps = 30
    qq = mpmath.exp(1j * mpmath.pi * mpmath.mpc(params.tau))
    rng = np.random.default_rng(11)
    mp_err = 0.0
    for _ in range(200):
        u = complex(rng.uniform(-1, 1) + rng.uniform(-1, 1) * params.tau)
        ref = complex(mpmath.jtheta(1, mpmath.pi * u, qq) / (mpmath.pi * mpmath.jtheta(1, 0, qq, 1)))
        mp_err = max(mp_err, abs(theta(u, params) - ref) / max(1.0, abs(ref)))
    worst = {k: r.max_residual for k, r in rep.results.items()}
    ok = all(v < 1e-10 for v in worst.values()) and mp_err < 1e-10
    verdict("theta identities", ok, ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f", mpmath={mp_err:.1e}")


def test_qloop_construction(sl2, sl3):
    plan = SamplePlan(count=50, seed=7)
    good = [check_qloop_relations(V, plan) for V in (sl2, sl3)]
    worst = max(r.max_residual for r in good)
    bad = QLoopRep(sl2.datum, sl2.params, sl2.weights, sl2.Psi, sl2.Xplus,
                   tuple(F.transform(lambda M: 1.5 * M) for F in sl2.Xminus))
    neg = check_qloop_relations(bad, SamplePlan(count=50, seed=7)).max_residual
    ok = all(r.passed for r in good) and worst < 1e-10 and neg > 1e-3 and (sl2.dim, sl3.dim) == (2, 3)
    verdict("quantum loop construction", ok, f"QL1-QL5 max={worst:.1e}, corrupted={neg:.1e}")


def test_functor_theta(sl2, E2):
    rep = check_eqg_relations(E2, SamplePlan(count=30, seed=7))
    missing = [r for r in EQG + PERIODICITY if r not in rep]
    hw = highest_weight_formulas(sl2, samples=30, seed=7)
    ok = not missing and rep.max_residual < 1e-8 and hw.max_residual < 1e-8
    verdict("functor Theta", ok, f"EQ+periodicity max={rep.max_residual:.1e}, highest weight={hw.max_residual:.1e}"
            + (f", missing {missing}" if missing else ""))


def test_serre(E3, E22):
    var = check_serre(E3, 0, 1, SamplePlan(count=10, seed=7))["serre_variation"].max_residual
    com = check_serre(E22, 0, 1, SamplePlan(count=10, seed=7))["serre_commuting"].max_residual
    verdict("Serre relations", var < 1e-7 and com < 1e-8, f"v-variation={var:.1e}, commuting nodes={com:.1e}")


def test_factorization(E2):
    (node,) = factorization_report(E2, samples=20, seed=7).values()
    ok = node["F1"] < 1e-8 and node["Gplus_zero"] < 1e-10 and (
        not node["preconditions"] or node["permuted_resolve"] < 1e-10)
    verdict("factorization", ok, f"F1={node['F1']:.1e}, G+(0)={node['Gplus_zero']:.1e}, "
            f"preconditions={node['preconditions']}, permuted={node['permuted_resolve']:.1e}")


def test_round_trips(sl2, sl2_sum):
    reps = [roundtrip_report(V) for V in (sl2, sl2_sum)]
    worst = max(max(r["xi_theta"], r["theta_xi"]) for r in reps)
    verdict("round trips", worst < 1e-7 and sl2_sum.dim == 4, f"sl2 and dim-4 sum max={worst:.1e}")


def test_classification(params, E2):
    def hw_at(a):
        return elliptic_drinfeld_data(theta_functor(make_evaluation_module("sl2", a, params, seed=7)))

    hw = elliptic_drinfeld_data(E2)
    p_shift = same_isoclass(hw, hw_at(A_POINT * params.p), params)
    h_shift = same_isoclass(hw, hw_at(A_POINT * params.q ** 2), params)
    hws = [hw_at(a) for a in POINTS]
    injective = all(same_isoclass(hws[i], hws[j], params) == (i == j)
                    for i, j in itertools.product(range(5), repeat=2))
    disagree, count = 0, 0
    for k in range(5):
        for pos in itertools.combinations(range(5), k):
            for ords in itertools.product([-2, -1, 1, 2], repeat=k):
                disagree += counter_check(parenthesize(pos, ords))[0] != balanced_oracle(pos, ords)
                count += 1
    # the same configurations realised as zeros/poles of theta quotients
    base, h = 0.21 + 0.13j, params.hbar
    for k in range(1, 5):
        for pos in itertools.combinations(range(4), k):
            for ords in itertools.product([-1, 1], repeat=k):
                zeros = [base + n * h for n, o in zip(pos, ords) if o < 0]
                poles = [base + n * h for n, o in zip(pos, ords) if o > 0]
                diag = theta_quotient_form_check(ThetaQuotient(1.0, zeros, poles), 1, params)
                disagree += diag.passed != balanced_oracle(pos, ords)
                count += 1
    ok = p_shift and not h_shift and injective and disagree == 0
    verdict("classification", ok, f"p-shift same={p_shift}, hbar-shift same={h_shift}, injective={injective}, "
            f"oracle disagreements={disagree}/{count}")


def test_determinism(tmp_path):
    reports = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        status = main(["all", "--out", str(out)])
        rep = json.loads(out.read_text())
        rep.pop("timestamp", None)
        reports.append((status, json.dumps(rep, sort_keys=True)))
    ok = reports[0] == reports[1] and reports[0][0] == 0
    verdict("determinism", ok, f"status={reports[0][0]}, identical={reports[0][1] == reports[1][1]}")
