"""Numerical checks of the elliptic relations, the Serre relations and morphism conditions.

Every check samples spectral points u, v in the fundamental parallelogram and dynamical
points lam (root coordinates), rejecting samples where a spectral argument comes within
``plan.margin`` of a pole or a theta denominator comes within ``plan.margin`` of the lattice.
"""

import numpy as np

from . import series
from .errors import InvalidArgument, InvalidMorphism, SamplingError, Unsupported
from .linalg import max_norm, normalized_residual
from .report import RelationReport, SamplePlan
from .theta import lattice_distance, theta, theta_taylor

SERRE_ORDERS = (0, -1)


def _env(erep):
    p = erep.params
    return {"tau": p.tau, "hbar": p.hbar, "trunc": p.trunc, "label": erep.label}


class _Sampler:
    def __init__(self, erep, plan, salt):
        self.erep = erep
        self.params = erep.params
        self.rng = plan.rng(salt)
        self.margin = plan.margin
        self.attempts = plan.max_attempts
        self.poles = list(erep.x_poles()) + list(erep.phi_poles())

    def u(self):
        x, y = self.rng.uniform(0.0, 1.0, 2)
        return complex(x + y * self.params.tau)

    def lam(self, scale=0.6):
        n = self.erep.rank
        return scale * (self.rng.uniform(-1, 1, n) + 1j * self.rng.uniform(-1, 1, n))

    def ok(self, spectral=(), lattice=()):
        tau = self.params.tau
        for x in spectral:
            for b in self.poles:
                if lattice_distance(x - b, tau) < self.margin:
                    return False
        return all(lattice_distance(x, tau) >= self.margin for x in lattice)

    def draw(self, make, what):
        for _ in range(self.attempts):
            sample, spectral, lattice = make(self)
            if self.ok(spectral, lattice):
                return sample
        raise SamplingError(f"{what}: no sample avoiding the poles after {self.attempts} attempts "
                            f"(crowded region near {self.poles[:4]})")


def _root(erep, i):
    return erep.datum.simple_root(i).astype(complex)


def _a(erep, i, j):
    return erep.datum.d[i] * erep.datum.A[i, j] * erep.params.hbar / 2


def _lj(erep, lam, j):
    return erep.lam_i(lam, j)


def _weight_projectors(erep):
    sp = erep.space
    return [(mu, sp.projector(g)) for g, mu in enumerate(sp.distinct)]


def _shift_projector(erep, mu, shift):
    sp = erep.space
    g = sp.find(np.asarray(mu) + shift)
    return None if g is None else sp.projector(g)


def _u_pair(smp):
    u, v = smp.u(), smp.u()
    return (u, v), [u, v], []


def _u_lam(erep, shifts=()):
    def make(smp):
        u, lam = smp.u(), smp.lam()
        return (u, lam), [u] + [u + x for x in shifts], [erep.lam_i(lam, i) for i in range(erep.rank)]
    return make


# ----------------------------------------------------------------------------
# EQ relations


def check_grading(erep, report, plan):
    smp = _Sampler(erep, plan, 1)
    projs = _weight_projectors(erep)
    for _ in range(min(plan.n("grading"), 10)):
        uu, lam = smp.draw(_u_lam(erep), "grading")
        for i in range(erep.rank):
            Phi = erep.phi(i, uu)
            diag = sum(P @ Phi @ P for _, P in projs)
            report.add("EQ1_weight", max_norm(Phi - diag) / max(1.0, max_norm(Phi)), i=i, u=uu)
            for s in (1, -1):
                X = erep.X(i, s, uu, lam)
                shifted = 0
                for mu, P in projs:
                    Q = _shift_projector(erep, mu, s * _root(erep, i))
                    if Q is not None:
                        shifted = shifted + Q @ X @ P
                report.add("EQ2", max_norm(X - shifted) / max(1.0, max_norm(X)), i=i, sign=s, u=uu)


def check_eq1(erep, report, plan):
    smp = _Sampler(erep, plan, 2)
    for _ in range(plan.n("EQ1")):
        u, v = smp.draw(_u_pair, "EQ1")
        for i in range(erep.rank):
            for j in range(erep.rank):
                A, B = erep.phi(i, u), erep.phi(j, v)
                report.add("EQ1", normalized_residual(A @ B, B @ A), i=i, j=j, u=u, v=v)
    for _ in range(min(plan.n("EQ1"), 10)):
        u, _v = smp.draw(_u_pair, "EQ1")
        for i in range(erep.rank):
            report.add("EQ1_det", 0.0 if abs(np.linalg.det(erep.phi(i, u))) > 0 else 1.0, i=i, u=u)


def _eq3_sample(erep, i, j, s, extra_lattice=()):
    a = _a(erep, i, j)
    ai = _root(erep, i)

    def make(smp):
        u, v, lam = smp.u(), smp.u(), smp.lam()
        lj = _lj(erep, lam, j)
        ljs = _lj(erep, lam + s * erep.params.hbar * ai, j)
        lattice = [lj, ljs, u - v - s * a, u - v + s * a] + [f(u, v, lam) for f in extra_lattice]
        return (u, v, lam), [u, v, u - s * a, u + s * a, v], lattice
    return make


def check_eq3(erep, report, plan):
    smp = _Sampler(erep, plan, 3)
    h = erep.params.hbar
    for i in range(erep.rank):
        for j in range(erep.rank):
            a = _a(erep, i, j)
            ai = _root(erep, i)
            for s in (1, -1):
                for _ in range(plan.n("EQ3")):
                    u, v, lam = smp.draw(_eq3_sample(erep, i, j, s), "EQ3")
                    lj = _lj(erep, lam, j)
                    Phi = erep.phi(i, u)
                    Pinv = np.linalg.inv(Phi)
                    # EQ3
                    lhs = Phi @ erep.X(j, s, v, lam) @ Pinv
                    lp = lam + s * h * ai
                    rhs = theta(u - v + s * a, erep.params) / theta(u - v - s * a, erep.params) * erep.X(j, s, v, lp)
                    if abs(a) > 0:
                        rhs = rhs + s * theta(2 * a, erep.params) * theta(u - v - s * a - lj, erep.params) / (
                            theta(lj, erep.params) * theta(u - v - s * a, erep.params)) * erep.X(j, s, u - s * a, lp)
                    report.add("EQ3", normalized_residual(lhs, rhs), i=i, j=j, sign=s, u=u, v=v)
                    # EQ3' (inverse conjugation, lambda shifted the other way)
                    lhs = Pinv @ erep.X(j, s, v, lam) @ Phi
                    lm = lam - s * h * ai
                    rhs = theta(u - v - s * a, erep.params) / theta(u - v + s * a, erep.params) * erep.X(j, s, v, lm)
                    if abs(a) > 0:
                        rhs = rhs - s * theta(2 * a, erep.params) * theta(u - v + s * a - lj, erep.params) / (
                            theta(lj, erep.params) * theta(u - v + s * a, erep.params)) * erep.X(j, s, u + s * a, lm)
                    report.add("EQ3_prime", normalized_residual(lhs, rhs), i=i, j=j, sign=s, u=u, v=v)
                    # v = u + s a specialization
                    lhs = Phi @ erep.X(j, s, u + s * a, lam) @ Pinv
                    rhs = theta(lj + 2 * s * a, erep.params) / theta(lj, erep.params) * erep.X(j, s, u - s * a, lp)
                    report.add("EQ3_special", normalized_residual(lhs, rhs), i=i, j=j, sign=s, u=u)


def _eq4_terms(erep, i, j, s, u, v, lam):
    th = lambda x: theta(x, erep.params)  # noqa: E731
    h = erep.params.hbar
    a = _a(erep, i, j)
    ai, aj = _root(erep, i), _root(erep, j)
    li, lj = _lj(erep, lam, i), _lj(erep, lam, j)
    Xi = lambda x, l: erep.X(i, s, x, l)  # noqa: E731
    Xj = lambda x, l: erep.X(j, s, x, l)  # noqa: E731
    lpj, lmi = lam + s * h * aj / 2, lam - s * h * ai / 2
    lpi, lmj = lam + s * h * ai / 2, lam - s * h * aj / 2
    lhs = (th(li + lj) * th(u - v - s * a) * Xi(u, lpj) @ Xj(v, lmi)
           - th(li + s * a) * th(u - v - lj) * Xi(u, lpj) @ Xj(u + li, lmi)
           - th(lj - s * a) * th(u - v + li) * Xi(v + lj, lpj) @ Xj(v, lmi))
    rhs = (th(li + lj) * th(u - v + s * a) * Xj(v, lpi) @ Xi(u, lmj)
           - th(li - s * a) * th(u - v - lj) * Xj(u + li, lpi) @ Xi(u, lmj)
           - th(lj + s * a) * th(u - v + li) * Xj(v, lpi) @ Xi(v + lj, lmj))
    return lhs, rhs


def _shifted_pairings(erep, lam, i, j, s):
    h = erep.params.hbar
    ai, aj = _root(erep, i), _root(erep, j)
    out = []
    for l in (lam + s * h * aj / 2, lam - s * h * ai / 2, lam + s * h * ai / 2, lam - s * h * aj / 2):
        out.extend([_lj(erep, l, i), _lj(erep, l, j)])
    return out


def check_eq4(erep, report, plan):
    smp = _Sampler(erep, plan, 4)
    for i in range(erep.rank):
        for j in range(erep.rank):
            for s in (1, -1):
                def make(sm, i=i, j=j, s=s):
                    u, v, lam = sm.u(), sm.u(), sm.lam()
                    li, lj = _lj(erep, lam, i), _lj(erep, lam, j)
                    spec = [u, v, u + li, v + lj]
                    return (u, v, lam), spec, _shifted_pairings(erep, lam, i, j, s) + [li + lj]
                for _ in range(plan.n("EQ4")):
                    u, v, lam = smp.draw(make, "EQ4")
                    lhs, rhs = _eq4_terms(erep, i, j, s, u, v, lam)
                    report.add("EQ4", normalized_residual(lhs, rhs), i=i, j=j, sign=s, u=u, v=v)


def check_eq4_variants(erep, report, plan):
    smp = _Sampler(erep, plan, 5)
    th = lambda x: theta(x, erep.params)  # noqa: E731
    h = erep.params.hbar
    for i in range(erep.rank):
        d = erep.datum.d[i]
        ai = _root(erep, i)
        for s in (1, -1):
            def make(sm, i=i, s=s):
                u, v, lam = sm.u(), sm.u(), sm.lam()
                li = _lj(erep, lam, i)
                return (u, v, lam), [u, v, u + li], _shifted_pairings(erep, lam, i, i, s) + [2 * li]
            for _ in range(plan.n("EQ4_prime")):
                u, v, lam = smp.draw(make, "EQ4 variants")
                li = _lj(erep, lam, i)
                lp, lm = lam + s * h * ai / 2, lam - s * h * ai / 2
                X = lambda x, l: erep.X(i, s, x, l)  # noqa: E731
                lhs = th(li + s * d * h) * X(u, lp) @ X(u + li, lm) - th(li - s * d * h) * X(u + li, lp) @ X(u, lm)
                rhs = s * th(d * h) * th(2 * li) / th(li) * X(u, lp) @ X(u, lm)
                report.add("EQ4_special", normalized_residual(lhs, rhs), i=i, sign=s, u=u)
                lhs = (th(u - v - s * d * h) * X(u, lp) @ X(v, lm)
                       + s * th(u - v - li) * th(d * h) / th(li) * X(u, lp) @ X(u, lm))
                rhs = (th(u - v + s * d * h) * X(v, lp) @ X(u, lm)
                       + s * th(u - v + li) * th(d * h) / th(li) * X(v, lp) @ X(v, lm))
                report.add("EQ4_prime", normalized_residual(lhs, rhs), i=i, sign=s, u=u, v=v)


def check_eq5(erep, report, plan):
    smp = _Sampler(erep, plan, 6)
    th = lambda x: theta(x, erep.params)  # noqa: E731
    h = erep.params.hbar
    projs = _weight_projectors(erep)
    for i in range(erep.rank):
        for j in range(erep.rank):
            shift = _root(erep, i) - _root(erep, j)
            for mu, P in projs:
                mu = np.asarray(mu, dtype=complex)

                def make(sm, i=i, mu=mu):
                    u, v, l1 = sm.u(), sm.u(), sm.lam()
                    l2 = h * (mu + shift) - l1
                    return (u, v, l1, l2), [u, v], [u - v, _lj(erep, l1, i), _lj(erep, l2, i),
                                                     _lj(erep, l1, j), _lj(erep, l2, j)]
                for _ in range(max(1, plan.n("EQ5") // max(1, len(projs)))):
                    u, v, l1, l2 = smp.draw(make, "EQ5")
                    Xp, Xm = erep.X(i, 1, u, l1), erep.X(j, -1, v, l2)
                    lhs = th(erep.datum.d[i] * h) * (Xp @ Xm - Xm @ Xp) @ P
                    if i == j:
                        l1i, l2i = _lj(erep, l1, i), _lj(erep, l2, i)
                        rhs = (th(u - v + l1i) / (th(u - v) * th(l1i)) * erep.phi(i, v)
                               + th(u - v - l2i) / (th(u - v) * th(l2i)) * erep.phi(i, u)) @ P
                    else:
                        rhs = np.zeros_like(lhs)
                    report.add("EQ5", normalized_residual(lhs, rhs), i=i, j=j, mu=mu, u=u, v=v)


def check_periodicity(erep, report, plan):
    smp = _Sampler(erep, plan, 7)
    tau = erep.params.tau
    for _ in range(plan.n("periodicity")):
        u, lam = smp.draw(_u_lam(erep), "periodicity")
        for i in range(erep.rank):
            Phi = erep.phi(i, u)
            report.add("periodicity_phi_1", normalized_residual(erep.phi(i, u + 1), Phi), i=i, u=u)
            K = erep.K(i)
            Kinv2 = np.linalg.inv(K @ K)
            report.add("periodicity_phi_tau", normalized_residual(erep.phi(i, u + tau), Kinv2 @ Phi), i=i, u=u)
            li = erep.lam_i(lam, i)
            gamma = _integral_coweight(erep, smp.rng)
            for s in (1, -1):
                X = erep.X(i, s, u, lam)
                report.add("periodicity_X_1", normalized_residual(erep.X(i, s, u + 1, lam), X), i=i, sign=s)
                report.add("periodicity_X_tau",
                           normalized_residual(erep.X(i, s, u + tau, lam), np.exp(-2j * np.pi * li) * X),
                           i=i, sign=s)
                if gamma is not None:
                    report.add("periodicity_X_lambda", normalized_residual(erep.X(i, s, u, lam + gamma), X),
                               i=i, sign=s)


def _integral_coweight(erep, rng):
    """A random gamma with (gamma, alpha_i) in Z for all i (None when B is singular)."""
    if not erep.datum.nondegenerate:
        return None
    n = rng.integers(-2, 3, erep.rank)
    return erep.datum.weight_from_root_pairings(n.astype(float))


def check_difference_equation(erep, report, plan):
    """Ad(Phi_i(u)) X_{j;b,n}(lam) = sum_k d_v^k/k! [theta(u-v+-a)/theta(u-v-+a)]_{v=b} X_{j;b,n+k}(lam +- hbar alpha_i)."""
    smp = _Sampler(erep, plan, 8)
    h = erep.params.hbar
    for i in range(erep.rank):
        for (j, s), hc in sorted(erep.half.items()):
            a = _a(erep, i, j)
            for _ in range(min(plan.n("difference_equation"), 10)):
                u, lam = smp.draw(_u_lam(erep, shifts=(-s * a,)), "difference equation")
                Phi = erep.phi(i, u)
                Pinv = np.linalg.inv(Phi)
                lp = lam + s * h * _root(erep, i)
                for b, cs in hc.terms:
                    K = len(cs)
                    num = theta_taylor(u - b + s * a, K, erep.params) * (-1.0) ** np.arange(K)
                    den = theta_taylor(u - b - s * a, K, erep.params) * (-1.0) ** np.arange(K)
                    g = series.mul(num, series.inv(den, K), K)
                    for n in range(K):
                        lhs = Phi @ cs[n](lam) @ Pinv
                        rhs = sum(g[k] * cs[n + k](lp) for k in range(K - n))
                        report.add("difference_equation", normalized_residual(lhs, rhs), i=i, j=j, sign=s, n=n)


def check_eqg_relations(erep, plan=None, which=None):
    """Evaluate both sides of each relation at sampled points; returns a RelationReport."""
    plan = plan or SamplePlan()
    report = RelationReport(erep.params.tol_check, env=_env(erep))
    checks = {
        "grading": check_grading, "EQ1": check_eq1, "EQ3": check_eq3, "EQ4": check_eq4,
        "EQ4_variants": check_eq4_variants, "EQ5": check_eq5, "periodicity": check_periodicity,
        "difference_equation": check_difference_equation,
    }
    for name, fn in checks.items():
        if which is None or name in which:
            fn(erep, report, plan)
    return report


def lambda_constancy(erep, count=5, seed=7, tol=1e-12):
    """Max variation of the stored coefficients over random lam (0 for gauge-normalized reps)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for hc in erep.half.values():
        for _, cs in hc.terms:
            for c in cs:
                ref = c(np.zeros(erep.rank))
                for _ in range(count):
                    lam = rng.normal(size=erep.rank) + 1j * rng.normal(size=erep.rank)
                    worst = max(worst, normalized_residual(c(lam), ref))
    return worst


def residue_vs_contour(erep, loop_rep, count=20, seed=7, nodes=128):
    """Compare the assembled half-currents with a direct trapezoid evaluation of the contour integral."""
    from .functor import g_factor
    rng = np.random.default_rng(seed)
    params = erep.params
    worst = 0.0
    for (i, s), hc in erep.half.items():
        if not hc.terms:
            continue
        c = erep.constants[i]
        X = loop_rep.X(i, s)
        for _ in range(max(1, count // len(erep.half))):
            for _t in range(1000):
                u = complex(rng.uniform(0, 1) + rng.uniform(0, 1) * params.tau)
                lam = 0.6 * (rng.uniform(-1, 1, erep.rank) + 1j * rng.uniform(-1, 1, erep.rank))
                if all(lattice_distance(u - b, params.tau) > 0.1 for b in hc.poles) and \
                        lattice_distance(erep.lam_i(lam, i), params.tau) > 0.05:
                    break
            li = erep.lam_i(lam, i)
            total = 0
            for b in hc.poles:
                rho = 0.05
                w = np.exp(2j * np.pi * (np.arange(nodes) + 0.5) / nodes)
                acc = 0
                for x in w:
                    vv = b + rho * x
                    z = np.exp(2j * np.pi * vv)
                    ker = theta(u - vv + li, params) / (theta(u - vv, params) * theta(li, params))
                    acc = acc + ker * g_factor(loop_rep, i, s, z) @ X(z) * rho * x
                total = total + c * acc / nodes
            worst = max(worst, normalized_residual(erep.X(i, s, u, lam), total))
    return worst


# ----------------------------------------------------------------------------
# Serre relations


def _qnum(n, params, d):
    return theta(n * d * params.hbar, params) / theta(d * params.hbar, params)


def _qbin(m, k, params, d):
    num = 1.0
    for r in range(k):
        num *= _qnum(m - r, params, d) / _qnum(r + 1, params, d)
    return num


def _F(erep, i, u, lam):
    return theta(erep.lam_i(lam, i), erep.params) * erep.X(i, -1, u, lam)


def _serre_T(erep, i, j, k, m, u, v, lam):
    h = erep.params.hbar
    ai, aj = _root(erep, i), _root(erep, j)
    li, lj = erep.lam_i(lam, i), erep.lam_i(lam, j)
    out = np.eye(erep.dim, dtype=complex)
    for r in range(k):
        out = out @ _F(erep, i, u, lam + r * h * ai)
    out = out @ _F(erep, j, v + li - lj, lam + (k - 1) * h * ai + h * (ai + aj) / 2)
    for r in range(k, m):
        out = out @ _F(erep, i, u, lam + r * h * ai + h * aj)
    return out


def serre_sum(erep, i, j, u, v, lam):
    """The combination S(u, v) whose v-independence is the Serre relation."""
    params = erep.params
    d = erep.datum.d[i]
    aij = int(erep.datum.A[i, j])
    m = 1 - aij
    lj = erep.lam_i(lam, j)
    dj = erep.datum.d[j]
    h = params.hbar
    total = np.zeros((erep.dim, erep.dim), dtype=complex)
    for k in range(m + 1):
        shift = h * (k - 0.5) * d * aij + h * dj
        coef = (-1) ** (m - k) * _qbin(m, k, params, d) * theta(u - v + lj + shift, params) / (
            theta(u - v, params) * theta(lj + shift, params))
        total = total + coef * _serre_T(erep, i, j, k, m, u, v, lam)
    return total


def serre_special(erep, i, j, u, lam):
    """sum_k (-1)^{m-k} [m choose k] T_k(u, u)."""
    d = erep.datum.d[i]
    m = 1 - int(erep.datum.A[i, j])
    total = np.zeros((erep.dim, erep.dim), dtype=complex)
    for k in range(m + 1):
        total = total + (-1) ** (m - k) * _qbin(m, k, erep.params, d) * _serre_T(erep, i, j, k, m, u, u, lam)
    return total


def check_serre(erep, i, j, plan=None, experimental=False):
    """Serre relation between nodes i != j; reports the v-variation and the v = u identity."""
    plan = plan or SamplePlan(count=10)
    if i == j:
        raise InvalidArgument("the Serre relation involves two distinct nodes")
    aij = int(erep.datum.A[i, j])
    if aij not in SERRE_ORDERS and not experimental:
        raise Unsupported(f"a_ij = {aij}: the Serre relation is only established for a_ij in {{0, -1}}")
    report = RelationReport(erep.params.tol_check * 10, env=_env(erep))
    smp = _Sampler(erep, plan, 11)
    h = erep.params.hbar
    m = 1 - aij
    ai, aj = _root(erep, i), _root(erep, j)

    def lattice_args(u, v, lam):
        out = [u - v]
        for k in range(m + 1):
            for r in range(m + 2):
                for l in (lam + r * h * ai, lam + r * h * ai + h * aj, lam + (k - 1) * h * ai + h * (ai + aj) / 2):
                    out.extend([erep.lam_i(l, i), erep.lam_i(l, j)])
        return out

    n = plan.n("serre")
    for _ in range(max(1, n // 5)):
        def make_u(sm):
            x, l = sm.u(), sm.lam()
            return (x, l), [x], lattice_args(x, x + 0.3, l)
        u, lam = smp.draw(make_u, "serre")
        li, lj = erep.lam_i(lam, i), erep.lam_i(lam, j)
        vals = []
        for _k in range(n):
            def make_v(sm):
                y = sm.u()
                return y, [y, y + li - lj], [u - y]
            v = smp.draw(make_v, "serre v")
            vals.append(serre_sum(erep, i, j, u, v, lam))
        ref = vals[0]
        for S in vals[1:]:
            report.add("serre_variation", max_norm(S - ref), u=u)
        report.add("serre_special", max_norm(serre_special(erep, i, j, u, lam)) /
                   max(1.0, max_norm(ref)), u=u)
        report.results["serre_variation"].tol = 1e-7
    if aij == 0:
        _check_serre_commuting(erep, i, j, report, smp, n)
    return report


def _check_serre_commuting(erep, i, j, report, smp, n):
    """a_ij = 0: X_i^-(u, lam - hbar alpha_j/2) X_j^-(v, lam + hbar alpha_i/2)
    = X_j^-(v, lam - hbar alpha_i/2) X_i^-(u, lam + hbar alpha_j/2)."""
    h = erep.params.hbar
    ai, aj = _root(erep, i), _root(erep, j)
    for s in (-1, 1):
        for _ in range(n):
            def make(sm):
                u, v, lam = sm.u(), sm.u(), sm.lam()
                ls = [erep.lam_i(l, k) for l in (lam + h * ai / 2, lam - h * ai / 2, lam + h * aj / 2,
                                                  lam - h * aj / 2) for k in (i, j)]
                return (u, v, lam), [u, v], ls
            u, v, lam = smp.draw(make, "serre a_ij = 0")
            lhs = erep.X(i, s, u, lam - s * h * aj / 2) @ erep.X(j, s, v, lam + s * h * ai / 2)
            rhs = erep.X(j, s, v, lam - s * h * ai / 2) @ erep.X(i, s, u, lam + s * h * aj / 2)
            report.add("serre_commuting", normalized_residual(lhs, rhs), sign=s, u=u, v=v)


# ----------------------------------------------------------------------------
# morphisms


def check_morphism(phi, V, W, plan=None):
    """Residuals of the two intertwining conditions for lam -> phi(lam) in Hom_h(V, W)."""
    plan = plan or SamplePlan(count=10)
    if V.datum != W.datum:
        raise InvalidMorphism("representations over different Cartan data")
    report = RelationReport(V.params.tol_check, env=_env(V))
    smp = _Sampler(V, plan, 21)
    smp.poles = smp.poles + list(W.x_poles()) + list(W.phi_poles())
    h = V.params.hbar
    test = np.asarray(phi(np.zeros(V.rank)), dtype=complex)
    if test.shape != (W.dim, V.dim):
        raise InvalidMorphism(f"phi has shape {test.shape}, expected {(W.dim, V.dim)}")
    # weight preservation
    for a, mu in enumerate(W.weights):
        for b, nu in enumerate(V.weights):
            if abs(test[a, b]) > 1e-12 and np.max(np.abs(mu - nu)) > 1e-9:
                raise InvalidMorphism("phi does not preserve weights")
    for _ in range(plan.n("morphism")):
        u, lam = smp.draw(_u_lam(V), "morphism")
        for i in range(V.rank):
            ai = _root(V, i)
            lhs = phi(lam + h * ai / 2) @ V.phi(i, u)
            rhs = W.phi(i, u) @ phi(lam - h * ai / 2)
            report.add("morphism_phi", normalized_residual(lhs, rhs), i=i, u=u)
            for s in (1, -1):
                for mu, P in _weight_projectors(V):
                    mu = np.asarray(mu, dtype=complex)
                    tgt = s * lam - s * h * (mu + s * ai) / 2 + h * ai / 2
                    src = s * lam - s * h * mu / 2 - h * ai / 2
                    lhs = phi(tgt) @ V.X(i, s, u, lam) @ P
                    rhs = W.X(i, s, u, lam) @ phi(src) @ P
                    report.add("morphism_X", normalized_residual(lhs, rhs), i=i, sign=s, u=u)
    return report
