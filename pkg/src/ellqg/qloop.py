"""Finite-dimensional representations of the quantum loop algebra in functional form.

A representation carries, per node i, rational End(V)-valued functions Psi_i(z) and
X_i^{+-}(z) regular at 0 and infinity, stored in partial-fraction form.
"""

from dataclasses import dataclass, field

import numpy as np

from .cartan import CartanDatum, cartan_of_type
from .errors import (FormMismatch, InvalidArgument, InvalidParams, NotHighestWeight,
                     PoleHit)
from .linalg import max_norm, normalized_residual
from .report import RelationReport, SamplePlan
from .theta import TWO_PI_I, ModularParams

POLE_REL_TOL = 1e-9


# ----------------------------------------------------------------------------
# weight-graded spaces


class WeightGradedSpace:
    """Basis vectors with weights (root coordinates), grouped into weight spaces."""

    def __init__(self, weights, tol=1e-9):
        w = np.asarray(weights, dtype=complex)
        if w.ndim == 1:
            w = w[:, None]
        self.weights = w
        self.tol = tol
        self.distinct = []
        self.members = []
        for k, mu in enumerate(w):
            g = self.find(mu)
            if g is None:
                self.distinct.append(mu)
                self.members.append([k])
            else:
                self.members[g].append(k)

    @property
    def dim(self):
        return self.weights.shape[0]

    @property
    def rank(self):
        return self.weights.shape[1]

    @property
    def dims(self):
        return [len(m) for m in self.members]

    def find(self, mu):
        mu = np.asarray(mu, dtype=complex)
        for g, nu in enumerate(self.distinct):
            if np.max(np.abs(nu - mu)) < self.tol:
                return g
        return None

    def projector(self, g):
        P = np.zeros((self.dim, self.dim), dtype=complex)
        for k in self.members[g]:
            P[k, k] = 1.0
        return P

    def weight_of(self, k):
        return self.weights[k]

    def to_json(self):
        return {"weights": [[float(x.real) for x in mu] for mu in self.weights]}


# ----------------------------------------------------------------------------
# rational matrix functions


@dataclass(frozen=True, eq=False)
class RationalMatFun:
    """value_at_inf + sum_k sum_j C_{k,j} / (z - z_k)^j."""

    value_at_inf: np.ndarray
    pole_terms: tuple = ()

    def __post_init__(self):
        v = np.array(self.value_at_inf, dtype=complex)
        terms = []
        for z0, coeffs in self.pole_terms:
            z0 = complex(z0)
            if z0 == 0:
                raise InvalidArgument("poles at z = 0 are not allowed (regularity at 0)")
            cs = tuple(np.array(c, dtype=complex) for c in coeffs)
            terms.append((z0, cs))
        object.__setattr__(self, "value_at_inf", v)
        object.__setattr__(self, "pole_terms", tuple(terms))

    @property
    def dim(self):
        return self.value_at_inf.shape[0]

    @property
    def poles(self):
        return [z0 for z0, _ in self.pole_terms]

    def pole_order(self, z0):
        for p, cs in self.pole_terms:
            if p == z0:
                return len(cs)
        return 0

    def __call__(self, z):
        z = complex(z)
        out = self.value_at_inf.copy()
        for z0, coeffs in self.pole_terms:
            dz = z - z0
            if abs(dz) < POLE_REL_TOL * max(1.0, abs(z0)):
                raise PoleHit(f"z = {z:.6g} hits the pole {z0:.6g}", pole=z0)
            inv = 1.0 / dz
            pw = inv
            for c in coeffs:
                out = out + c * pw
                pw = pw * inv
        return out

    def at_zero(self):
        return self(0.0)

    @classmethod
    def from_callable(cls, func, poles, orders, value_at_inf, nodes=96):
        """Partial-fraction form of a matrix function known to be rational with the given poles.

        The Laurent coefficients are circle integrals (trapezoid rule) around each pole.
        """
        poles = [complex(z) for z in poles]
        terms = []
        for k, (z0, order) in enumerate(zip(poles, orders)):
            others = [abs(z0 - w) for m, w in enumerate(poles) if m != k] + [abs(z0)]
            r = 0.4 * min(others)
            w = np.exp(2j * np.pi * (np.arange(nodes) + 0.5) / nodes)
            vals = [np.asarray(func(z0 + r * x), dtype=complex) for x in w]
            cs = []
            for j in range(1, int(order) + 1):
                # C_j = (1/2 pi i) oint F (z - z0)^{j-1} dz
                acc = sum(v * (r * x) ** j for v, x in zip(vals, w))
                cs.append(acc / nodes)
            terms.append((z0, tuple(cs)))
        return cls(np.asarray(value_at_inf, dtype=complex), tuple(terms))

    def significant(self, tol=1e-13):
        """Drop pole terms whose coefficients vanish to tol."""
        terms = []
        for z0, cs in self.pole_terms:
            cs = list(cs)
            while cs and max_norm(cs[-1]) <= tol:
                cs.pop()
            if cs:
                terms.append((z0, tuple(cs)))
        return RationalMatFun(self.value_at_inf, tuple(terms))

    def transform(self, f):
        """Apply a linear map to every coefficient matrix."""
        return RationalMatFun(f(self.value_at_inf),
                              tuple((z0, tuple(f(c) for c in cs)) for z0, cs in self.pole_terms))

    def to_json(self):
        def mat(M):
            return [[[float(x.real), float(x.imag)] for x in row] for row in M]
        return {
            "value_at_inf": mat(self.value_at_inf),
            "pole_terms": [{"pole": [z0.real, z0.imag], "coefficients": [mat(c) for c in cs]}
                           for z0, cs in self.pole_terms],
        }


def eval_rational_matfun(F, z):
    return F(z)


def block_diag_fun(funs):
    """Direct sum of rational matrix functions."""
    dims = [f.dim for f in funs]
    total = sum(dims)
    offs = np.cumsum([0] + dims)

    def embed(M, k):
        out = np.zeros((total, total), dtype=complex)
        out[offs[k]:offs[k + 1], offs[k]:offs[k + 1]] = M
        return out

    value = sum(embed(f.value_at_inf, k) for k, f in enumerate(funs))
    terms = {}
    for k, f in enumerate(funs):
        for z0, cs in f.pole_terms:
            key = next((p for p in terms if abs(p - z0) < 1e-14 * max(1, abs(z0))), z0)
            have = terms.setdefault(key, [])
            for j, c in enumerate(cs):
                if j < len(have):
                    have[j] = have[j] + embed(c, k)
                else:
                    have.append(embed(c, k))
    return RationalMatFun(value, tuple((z0, tuple(cs)) for z0, cs in terms.items()))


# ----------------------------------------------------------------------------
# representations


@dataclass(frozen=True, eq=False)
class DrinfeldData:
    """Highest weight and the roots of the Drinfeld polynomials."""

    mu: np.ndarray
    roots: tuple

    def to_json(self):
        return {"mu": [float(np.real(x)) for x in self.mu],
                "roots": [[[r.real, r.imag] for r in rs] for rs in self.roots]}


@dataclass(frozen=True, eq=False)
class QLoopRep:
    """Weight-graded space with rational fields Psi_i, X_i^+, X_i^-."""

    datum: CartanDatum
    params: ModularParams
    weights: np.ndarray
    Psi: tuple
    Xplus: tuple
    Xminus: tuple
    label: str = ""
    space: WeightGradedSpace = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex)
        if w.ndim == 1:
            w = w[:, None]
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "space", WeightGradedSpace(w))
        n = self.datum.rank
        if w.shape[1] != n:
            raise InvalidArgument("weights must have one coordinate per node")
        for name in ("Psi", "Xplus", "Xminus"):
            funs = tuple(getattr(self, name))
            if len(funs) != n:
                raise InvalidArgument(f"{name} needs one field per node")
            for f in funs:
                if f.dim != self.dim:
                    raise InvalidArgument(f"{name} field has the wrong size")
            object.__setattr__(self, name, funs)

    @property
    def dim(self):
        return self.weights.shape[0]

    @property
    def rank(self):
        return self.datum.rank

    def coroot_values(self):
        """Array (dim, rank) of mu(alpha_i^vee) per basis vector."""
        return np.array([self.datum.coroot_values(mu) for mu in self.weights])

    def K(self, i):
        """K_i = q_i^{alpha_i^vee} (diagonal in the weight basis)."""
        vals = self.coroot_values()[:, i]
        return np.diag(np.exp(1j * np.pi * self.datum.d[i] * self.params.hbar * vals))

    def X(self, i, sign):
        return self.Xplus[i] if sign > 0 else self.Xminus[i]

    def poles(self, i, sign):
        return self.X(i, sign).poles

    def to_json(self):
        return {
            "label": self.label,
            "weights": [[float(x.real) for x in mu] for mu in self.weights],
            "nodes": [{"Psi": self.Psi[i].to_json(), "Xplus": self.Xplus[i].to_json(),
                       "Xminus": self.Xminus[i].to_json()} for i in range(self.rank)],
        }


def trivial_module(datum, params):
    one = RationalMatFun(np.eye(1))
    zero = RationalMatFun(np.zeros((1, 1)))
    n = datum.rank
    return QLoopRep(datum, params, np.zeros((1, n)), (one,) * n, (zero,) * n, (zero,) * n,
                    label="trivial")


def direct_sum(*reps):
    """Direct sum of representations over the same Cartan datum."""
    if not reps:
        raise InvalidArgument("direct_sum needs at least one summand")
    datum, params = reps[0].datum, reps[0].params
    for r in reps[1:]:
        if r.datum != datum:
            raise InvalidArgument("summands must share the Cartan datum")
    n = datum.rank
    weights = np.concatenate([r.weights for r in reps], axis=0)
    Psi = tuple(block_diag_fun([r.Psi[i] for r in reps]) for i in range(n))
    Xp = tuple(block_diag_fun([r.Xplus[i] for r in reps]) for i in range(n))
    Xm = tuple(block_diag_fun([r.Xminus[i] for r in reps]) for i in range(n))
    return QLoopRep(datum, params, weights, Psi, Xp, Xm,
                    label=" + ".join(r.label or "V" for r in reps))


def conjugate_rep(rep, S):
    """The isomorphic representation S^{-1} V S (S must preserve weight spaces)."""
    S = np.asarray(S, dtype=complex)
    Si = np.linalg.inv(S)
    f = lambda M: Si @ M @ S  # noqa: E731
    return QLoopRep(rep.datum, rep.params, rep.weights,
                    tuple(F.transform(f) for F in rep.Psi),
                    tuple(F.transform(f) for F in rep.Xplus),
                    tuple(F.transform(f) for F in rep.Xminus), label=rep.label)


# ----------------------------------------------------------------------------
# evaluation modules


def _standard_data(kind):
    """Weight basis, raising matrices e_i and lowering matrices f_i (root coordinates)."""
    if kind == "sl2":
        E = np.array([[0, 1], [0, 0]], dtype=complex)
        return [[0.5], [-0.5]], [E], [E.T.copy()]
    if kind == "sl3":
        E1 = np.zeros((3, 3), dtype=complex)
        E1[0, 1] = 1
        E2 = np.zeros((3, 3), dtype=complex)
        E2[1, 2] = 1
        w = [[2 / 3, 1 / 3], [-1 / 3, 1 / 3], [-1 / 3, -2 / 3]]
        return w, [E1, E2], [E1.T.copy(), E2.T.copy()]
    if kind == "sl2xsl2":
        E = np.array([[0, 1], [0, 0]], dtype=complex)
        I2 = np.eye(2)
        w = [[0.5 * s1, 0.5 * s2] for s1 in (1, -1) for s2 in (1, -1)]
        return w, [np.kron(E, I2), np.kron(I2, E)], [np.kron(E.T, I2), np.kron(I2, E.T)]
    raise InvalidArgument(f"unknown evaluation module type {kind!r}")


def _simple_pole_fun(M, c):
    """M * z/(z - c) = M + c M/(z - c)."""
    return RationalMatFun(M, ((c, (c * M,)),))


def _node_poles(datum, params, kind, a, b):
    """Pole of the node-i currents.

    Node 1 carries the evaluation point; along an edge i -> j the pole moves to
    q_i^{-a_ij} times the pole of node i, the unique value for which the pole of
    X_j(q_i^{-+a_ij} z) in QL3 is cancelled.  Independent nodes carry their own point.
    """
    if kind == "sl2":
        return [a]
    if kind == "sl3":
        return [a, params.qd(datum.d[0]) ** (-datum.A[0, 1]) * a]
    if kind == "sl2xsl2":
        if b is None:
            raise InvalidArgument("sl2xsl2 modules need a second evaluation point b")
        return [a, b]
    raise InvalidArgument(f"unknown evaluation module type {kind!r}")


def _psi_fields(datum, params, weights, poles):
    """Diagonal Psi_i with entries (q_i^m z - q_i^{-m} c_i)/(z - c_i), m = mu(alpha_i^vee)."""
    out = []
    for i, c in enumerate(poles):
        qi = params.qd(datum.d[i])
        m = np.array([np.real(datum.coroot_values(mu)[i]) for mu in weights])
        inf = np.diag(qi ** m)
        res = np.diag((qi ** m - qi ** (-m)) * c)
        out.append(RationalMatFun(inf, ((c, (res,)),)).significant())
    return out


def _solve_lowering_scales(datum, params, weights, e, f, poles, Psi, rng):
    """Least-squares residue scale r_i of X_i^- = r_i f_i z/(z-c_i) from QL5 samples."""
    scales = []
    for i, c in enumerate(poles):
        qi = params.qd(datum.d[i])
        Xp = _simple_pole_fun(e[i], c)
        Xm1 = _simple_pole_fun(f[i], c)
        rows, rhs = [], []
        for _ in range(8):
            z, w = _draw_pair(rng, [c])
            lhs = (z - w) * (Xp(z) @ Xm1(w) - Xm1(w) @ Xp(z))
            target = (z * Psi[i](w) - w * Psi[i](z) - (z - w) * Psi[i](0.0)) / (qi - 1 / qi)
            rows.append(lhs.ravel())
            rhs.append(target.ravel())
        A = np.concatenate(rows)[:, None]
        y = np.concatenate(rhs)
        r, *_ = np.linalg.lstsq(A, y, rcond=None)
        scales.append(complex(r[0]))
    return scales


def _draw_pair(rng, poles, margin=0.05):
    for _ in range(1000):
        z, w = np.exp(rng.uniform(-1.2, 1.2, 2) + 1j * rng.uniform(0, 2 * np.pi, 2))
        pts = [z, w]
        if abs(z - w) < margin:
            continue
        if all(abs(x - c) > margin * max(1, abs(c)) for x in pts for c in poles):
            return complex(z), complex(w)
    raise InvalidArgument("could not draw sample points")


def make_evaluation_module(kind, a, params, b=None, seed=0):
    """Evaluation module of type 'sl2' (dim 2), 'sl3' (vector, dim 3) or 'sl2xsl2' (dim 4).

    The Drinfeld root of node 1 is a itself: Psi_1(z) Omega = (q z - q^{-1} a)/(z - a) Omega.
    """
    a = complex(a)
    if a == 0 or not np.isfinite(a):
        raise InvalidArgument("evaluation point must be finite and non-zero")
    for n in range(1, 25):
        if abs(params.q ** n - 1) <= 1e-8:
            raise InvalidParams(f"q is (numerically) a root of unity: |q^{n} - 1| <= 1e-8")
    datum = cartan_of_type(kind)
    weights, e, f = _standard_data(kind)
    poles = _node_poles(datum, params, kind, a, None if b is None else complex(b))
    Psi = _psi_fields(datum, params, weights, poles)
    rng = np.random.default_rng(seed)
    scales = _solve_lowering_scales(datum, params, weights, e, f, poles, Psi, rng)
    Xp = tuple(_simple_pole_fun(e[i], c) for i, c in enumerate(poles))
    Xm = tuple(_simple_pole_fun(scales[i] * f[i], c) for i, c in enumerate(poles))
    label = f"{kind}({a:.4g})" if b is None else f"{kind}({a:.4g},{complex(b):.4g})"
    return QLoopRep(datum, params, np.array(weights), tuple(Psi), Xp, Xm, label=label)


# ----------------------------------------------------------------------------
# relation checks


def _all_poles(rep):
    out = []
    for i in range(rep.rank):
        for F in (rep.Psi[i], rep.Xplus[i], rep.Xminus[i]):
            out.extend(F.poles)
    return out


def _safe_points(rep, pts, margin):
    poles = _all_poles(rep)
    return all(abs(x - c) > margin * max(1.0, abs(c)) for x in pts for c in poles)


def _draw_zw(rep, rng, margin, attempts=1000, shifts=()):
    for _ in range(attempts):
        z, w = np.exp(rng.uniform(-1.5, 1.5, 2) + 1j * rng.uniform(0, 2 * np.pi, 2))
        pts = [z, w] + [z * s for s in shifts] + [w * s for s in shifts]
        if abs(z - w) > margin and _safe_points(rep, pts, margin):
            return complex(z), complex(w)
    from .errors import SamplingError
    raise SamplingError("could not draw (z, w) away from the poles")


def check_qloop_relations(rep, plan=None):
    """Check normalization and QL1-QL5 at sampled points; returns a RelationReport."""
    plan = plan or SamplePlan(count=50)
    params = rep.params
    tol = params.tol_check
    report = RelationReport(tol=min(tol, 1e-10) if plan is None else tol,
                            env={"params": params.as_dict(), "module": rep.label})
    report.tol = tol
    n = rep.rank
    A = rep.datum.A
    d = rep.datum.d
    rng = plan.rng(101)
    sp = rep.space
    shifts = []
    for i in range(n):
        qi = params.qd(d[i])
        for j in range(n):
            shifts += [qi ** A[i, j], qi ** (-A[i, j])]
    # normalization
    for i in range(n):
        K = rep.K(i)
        report.add("normalization", normalized_residual(rep.Psi[i].value_at_inf, K), node=i, what="Psi(inf)")
        report.add("normalization", normalized_residual(rep.Psi[i].at_zero() @ K, np.eye(rep.dim)),
                   node=i, what="Psi(0)")
        for s in (1, -1):
            report.add("normalization", max_norm(rep.X(i, s).at_zero()), node=i, what=f"X{'+-'[s < 0]}(0)")
    for _ in range(plan.n("QL")):
        z, w = _draw_zw(rep, rng, plan.margin, plan.max_attempts, shifts)
        where = {"z": z, "w": w}
        Psi_z = [rep.Psi[i](z) for i in range(n)]
        Psi_w = [rep.Psi[i](w) for i in range(n)]
        Xz = {(i, s): rep.X(i, s)(z) for i in range(n) for s in (1, -1)}
        Xw = {(i, s): rep.X(i, s)(w) for i in range(n) for s in (1, -1)}
        Xinf = {(i, s): rep.X(i, s).value_at_inf for i in range(n) for s in (1, -1)}
        for i in range(n):
            for j in range(n):
                c = Psi_z[i] @ Psi_w[j] - Psi_w[j] @ Psi_z[i]
                report.add("QL1", max_norm(c) / max(1.0, max_norm(Psi_z[i]) * max_norm(Psi_w[j])),
                           i=i, j=j, **where)
            for g, _ in enumerate(sp.distinct):
                P = sp.projector(g)
                report.add("QL1", max_norm(P @ Psi_z[i] - Psi_z[i] @ P), i=i, weight=g, **where)
        # QL2: X_i^{+-} maps V_mu into V_{mu +- alpha_i}
        for i in range(n):
            for s in (1, -1):
                M = Xz[(i, s)]
                leak = 0.0
                for g, mu in enumerate(sp.distinct):
                    src = sp.projector(g)
                    tgt_idx = sp.find(mu + s * rep.datum.simple_root(i))
                    tgt = sp.projector(tgt_idx) if tgt_idx is not None else 0 * src
                    leak = max(leak, max_norm(M @ src - tgt @ M @ src))
                report.add("QL2", leak / max(1.0, max_norm(M)), i=i, sign=s, **where)
        for i in range(n):
            qi = params.qd(d[i])
            for j in range(n):
                for s in (1, -1):
                    qa = qi ** (s * A[i, j])
                    X = rep.X(j, s)
                    lhs = (z - qa * w) * Psi_z[i] @ Xw[(j, s)]
                    rhs = ((qa * z - w) * Xw[(j, s)] @ Psi_z[i]
                           - (qa - 1 / qa) * qa * w * X(z / qa) @ Psi_z[i])
                    report.add("QL3", normalized_residual(lhs, rhs), i=i, j=j, sign=s, **where)
                    # specialization w = q_i^{-+a_ij} z: both sides finite and equal
                    ws = z / qa
                    if _safe_points(rep, [ws, ws / qa], plan.margin):
                        lhs_s = (z - qa * ws) * Psi_z[i] @ X(ws)
                        rhs_s = ((qa * z - ws) * X(ws) @ Psi_z[i]
                                 - (qa - 1 / qa) * qa * ws * X(z / qa) @ Psi_z[i])
                        report.add("QL3_specialized", normalized_residual(lhs_s, rhs_s),
                                   i=i, j=j, sign=s, z=z)
                    Xi_z, Xj_w = Xz[(i, s)], Xw[(j, s)]
                    lhs = (z - qa * w) * Xi_z @ Xj_w - (qa * z - w) * Xj_w @ Xi_z
                    rhs = (z * (Xinf[(i, s)] @ Xj_w - qa * Xj_w @ Xinf[(i, s)])
                           + w * (Xinf[(j, s)] @ Xi_z - qa * Xi_z @ Xinf[(j, s)]))
                    report.add("QL4", normalized_residual(lhs, rhs), i=i, j=j, sign=s, **where)
                lhs = (z - w) * (Xz[(i, 1)] @ Xw[(j, -1)] - Xw[(j, -1)] @ Xz[(i, 1)])
                if i == j:
                    rhs = (z * Psi_w[i] - w * Psi_z[i] - (z - w) * rep.Psi[i].at_zero()) / (qi - 1 / qi)
                else:
                    rhs = np.zeros_like(lhs)
                report.add("QL5", normalized_residual(lhs, rhs), i=i, j=j, **where)
    return report


def poles_lemma_check(rep, tol=1e-9):
    """Every pole of Psi_i is a pole of X_i^+ and of X_i^-."""
    for i in range(rep.rank):
        for c in rep.Psi[i].significant().poles:
            for s in (1, -1):
                if not any(abs(c - x) < tol * max(1, abs(c)) for x in rep.X(i, s).significant().poles):
                    return False
    return True


# ----------------------------------------------------------------------------
# highest weight and congruence


def top_weights(space, datum):
    """Indices of weight spaces mu with mu + alpha_i not a weight for every i."""
    out = []
    for g, mu in enumerate(space.distinct):
        if all(space.find(mu + datum.simple_root(i)) is None for i in range(datum.rank)):
            out.append(g)
    return out


def _scalar_rational(F, v):
    """Diagonal matrix element <v, F(z) v> as (kappa, [(pole, [coeffs])])."""
    k = int(np.argmax(np.abs(v)))
    kappa = (F.value_at_inf @ v)[k] / v[k]
    terms = []
    for z0, cs in F.pole_terms:
        coeffs = [(c @ v)[k] / v[k] for c in cs]
        while coeffs and abs(coeffs[-1]) < 1e-13:
            coeffs.pop()
        if coeffs:
            terms.append((z0, coeffs))
    return complex(kappa), terms


def _ratio_exponent(x, y, q2, max_n=60, tol=1e-8):
    """Smallest n >= 1 with x/y = q2^(-n), or None."""
    r = x / y
    for n in range(1, max_n + 1):
        if abs(r - q2 ** (-n)) < tol * max(1.0, abs(r)):
            return n
    return None


def qloop_highest_weight(rep):
    """Drinfeld data (mu, roots of P_i) of a highest-weight representation."""
    sp = rep.space
    tops = top_weights(sp, rep.datum)
    if len(tops) != 1 or sp.dims[tops[0]] != 1:
        dims = [sp.dims[g] for g in tops]
        raise NotHighestWeight(f"top weight spaces have dimensions {dims}; need exactly one of dimension 1")
    g = tops[0]
    k = sp.members[g][0]
    omega = np.zeros(rep.dim, dtype=complex)
    omega[k] = 1.0
    mu = sp.distinct[g]
    for i in range(rep.rank):
        F = rep.Xplus[i]
        mats = [F.value_at_inf] + [c for _, cs in F.pole_terms for c in cs]
        if any(max_norm(M @ omega) > 1e-10 for M in mats):
            raise NotHighestWeight(f"X_{i}^+ does not kill the top vector")
    roots = []
    for i in range(rep.rank):
        qi = rep.params.qd(rep.datum.d[i])
        kappa, terms = _scalar_rational(rep.Psi[i], omega)
        # zeros of psi: numerator of kappa*prod(z - c)^n + ...
        poles = []
        for z0, cs in terms:
            poles += [z0] * len(cs)
        num = np.array([kappa], dtype=complex)
        den = np.array([1.0], dtype=complex)
        for c in poles:
            den = np.polymul(den, [1.0, -c])
        num = kappa * den
        for z0, cs in terms:
            for j, cj in enumerate(cs, start=1):
                other = np.array([1.0], dtype=complex)
                for c in poles:
                    other = np.polymul(other, [1.0, -c])
                # divide out (z - z0)^j
                for _ in range(j):
                    other, _r = np.polydiv(other, [1.0, -z0])
                num = np.polyadd(num, cj * other)
        zeros = list(np.roots(num)) if len(num) > 1 else []
        node_roots = []
        remaining = list(zeros)
        for beta in poles:
            best = None
            for idx, alpha in enumerate(remaining):
                nexp = _ratio_exponent(alpha, beta, qi ** 2)
                if nexp is not None and (best is None or nexp < best[1]):
                    best = (idx, nexp)
            if best is None:
                raise FormMismatch(f"Psi_{i} eigenvalue on the top vector is not q^-deg P(q^2 z)/P(z)")
            remaining.pop(best[0])
            node_roots += [beta * qi ** (-2 * j) for j in range(best[1])]
        if remaining:
            raise FormMismatch(f"Psi_{i} eigenvalue has unmatched zeros {remaining}")
        N = len(node_roots)

        def P(x):
            return np.prod([x - r for r in node_roots]) if node_roots else 1.0
        for zz in (0.37 + 1.1j, -1.3 + 0.4j, 2.1 - 0.7j):
            lhs = kappa + sum(cj / (zz - z0) ** j for z0, cs in terms for j, cj in enumerate(cs, 1))
            rhs = qi ** (-N) * P(qi ** 2 * zz) / P(zz)
            if abs(lhs - rhs) > 1e-8 * max(1.0, abs(lhs)):
                raise FormMismatch(f"Psi_{i} eigenvalue on the top vector is not q^-deg P(q^2 z)/P(z)")
        roots.append(tuple(complex(r) for r in node_roots))
    return DrinfeldData(np.asarray(mu), tuple(roots))


def congruence_exponent(x, y, params, kmax=None):
    """Non-zero k with x/y = p^k (|k| <= kmax), or None."""
    kmax = params.trunc if kmax is None else kmax
    v = np.log(complex(x) / complex(y)) / TWO_PI_I
    tau = params.tau
    t = v.imag / tau.imag
    s = v.real - t * tau.real
    k = int(np.round(t))
    if k == 0 or abs(k) > kmax:
        return None
    if abs(t - k) < 1e-8 and abs(s - np.round(s)) < 1e-8:
        return k
    return None


def is_non_congruent(rep, params=None):
    """No two distinct poles of any X_i^{+-} have ratio in p^Z."""
    params = params or rep.params
    for i in range(rep.rank):
        for s in (1, -1):
            poles = rep.X(i, s).significant().poles
            for a_idx, x in enumerate(poles):
                for y in poles[a_idx + 1:]:
                    if congruence_exponent(x, y, params) is not None:
                        return False
    return True
