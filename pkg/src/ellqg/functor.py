"""The monodromy functor: quantum loop representations -> elliptic representations.

Phi_i(u) = G_i^+(z) Psi_i(z) G_i^-(z) at z = e^{2 pi i u}, with

    G_i^+(z) = prod_{n >= 1} K_i Psi_i(p^n z),    G_i^-(z) = prod_{n >= 1} K_i^{-1} Psi_i(p^{-n} z),

and X_i^{+-}(u, lam) = c_i * (residue sum over the poles of X_i^{+-}(e^{2 pi i v}) mod Z) of
kernel(u - v, lam_i) G_i^{+-}(e^{2 pi i v}) X_i^{+-}(e^{2 pi i v}).
"""

import math

import numpy as np

from . import series
from .elliptic import (EllipticRep, HalfCurrent, LambdaCoeff, PhiBlock, knight_form,
                       quotient_from_rational)
from .errors import FunctorUndefined, InvalidArgument, PoleHit, Unsupported
from .linalg import joint_spectral_split, max_norm
from .qloop import POLE_REL_TOL, is_non_congruent
from .theta import TWO_PI_I, theta_plus

MAX_POLE_ORDER = 6
CAUCHY_NODES = 64


def functor_constant(params, d=1):
    """c_i with c_i^+ = c_i^- = 2 pi i theta_plus(0)/theta_plus(d_i hbar)."""
    return TWO_PI_I * theta_plus(0.0, params) / theta_plus(d * params.hbar, params)


def g_factor(rep, i, sign, z, trunc=None):
    """Truncated product G_i^{sign}(z); factors are ordered n = 1, 2, ... from the left."""
    params = rep.params
    trunc = params.trunc if trunc is None else int(trunc)
    z = complex(z)
    K = rep.K(i)
    Kpow = K if sign > 0 else np.linalg.inv(K)
    step = params.p if sign > 0 else 1.0 / params.p
    out = np.eye(rep.dim, dtype=complex)
    w = z
    for n in range(1, trunc + 1):
        w = w * step
        try:
            factor = Kpow @ rep.Psi[i](w)
        except PoleHit as exc:
            raise PoleHit(f"factor n={n} of G_{i}^{'+' if sign > 0 else '-'} hits a pole of Psi",
                          pole=exc.pole) from exc
        out = out @ factor
    return out


def phi_current(rep, i, u, trunc=None):
    """Phi_i(u) by the product formula."""
    z = np.exp(TWO_PI_I * complex(u))
    return g_factor(rep, i, 1, z, trunc) @ rep.Psi[i](z) @ g_factor(rep, i, -1, z, trunc)


def _log_point(z0):
    b = np.log(complex(z0)) / TWO_PI_I
    return b - math.floor(b.real)


def _g_singularities(rep, i, sign):
    """Representatives of the v-poles of G_i^{sign}(e^{2 pi i v}) near the slice."""
    out = []
    tau = rep.params.tau
    for z0 in rep.Psi[i].significant().poles:
        b = _log_point(z0)
        for n in range(1, 4):
            out.append(b - sign * n * tau)
    return out


def _g_taylor(rep, i, sign, b, n_terms):
    """Taylor coefficients of s -> G_i^{sign}(e^{2 pi i (b + s)})."""
    g0 = g_factor(rep, i, sign, np.exp(TWO_PI_I * b))
    if n_terms <= 1:
        return g0[None]
    dist = []
    for c in _g_singularities(rep, i, sign):
        x = b - c
        dist.append(min(abs(x - m) for m in (np.round(x.real) - 1, np.round(x.real), np.round(x.real) + 1)))
    rho = min([0.25] + [0.5 * d for d in dist])
    w = np.exp(2j * np.pi * (np.arange(CAUCHY_NODES) + 0.5) / CAUCHY_NODES)
    vals = [g_factor(rep, i, sign, np.exp(TWO_PI_I * (b + rho * x))) for x in w]
    out = np.zeros((n_terms, rep.dim, rep.dim), dtype=complex)
    out[0] = g0
    for j in range(1, n_terms):
        out[j] = sum(v * x ** (-j) for v, x in zip(vals, w)) / (CAUCHY_NODES * rho ** j)
    return out


def _e_series(n):
    """E(s) = (e^{2 pi i s} - 1)/(2 pi i s)."""
    return np.array([TWO_PI_I ** m / math.factorial(m + 1) for m in range(n)], dtype=complex)


def residue_coefficients(z0, coeffs, g):
    """X_{b,n} / c for the pole z0 with Laurent coefficients C_1..C_K and G-Taylor data g."""
    K = len(coeffs)
    E = _e_series(K + 1)
    out = []
    for n in range(K):
        acc = 0
        for k in range(n + 1, K + 1):
            Ek = series.power(E, -k, K + 1)
            pref = (z0 * TWO_PI_I) ** (-k)
            for j in range(k - n):
                m = k - n - 1 - j
                acc = acc + pref * Ek[m] * (g[j] @ coeffs[k - 1])
        out.append(acc)
    return out


def half_current_from_loop(rep, i, sign, c):
    X = rep.X(i, sign).significant()
    terms = []
    for z0, cs in X.pole_terms:
        if len(cs) > MAX_POLE_ORDER:
            raise Unsupported(f"pole of order {len(cs)} exceeds {MAX_POLE_ORDER}")
        b = _log_point(z0)
        g = _g_taylor(rep, i, sign, b, len(cs))
        coeffs = residue_coefficients(complex(z0), cs, g)
        terms.append((complex(b), tuple(LambdaCoeff.constant(c * M) for M in coeffs)))
    return HalfCurrent(i, sign, tuple(terms))


# ----------------------------------------------------------------------------
# spectral description of Phi


def _psi_sample_points(rep):
    poles = [z0 for i in range(rep.rank) for z0 in rep.Psi[i].poles]
    pts = []
    for z in np.exp(np.array([0.37 + 1.1j, -0.21 + 2.3j, 0.83 + 4.05j, -0.6 + 5.3j])):
        if all(abs(z - c) > 1e-3 * max(1.0, abs(c)) for c in poles):
            pts.append(complex(z))
    return pts[:3]


def _scalar_data(F, P, r):
    """kappa, [(z0, [c_1..c_k])] of tr(P F)/r."""
    kappa = np.trace(P @ F.value_at_inf) / r
    terms = []
    for z0, cs in F.pole_terms:
        vals = [np.trace(P @ c) / r for c in cs]
        while vals and abs(vals[-1]) < 1e-13 * max(1.0, abs(kappa)):
            vals.pop()
        if vals:
            terms.append((z0, vals))
    return complex(kappa), terms


def _rational_zeros(kappa, terms):
    """Zeros and poles (with multiplicity) of kappa + sum c_k/(z - z0)^k."""
    poly = np.polynomial.Polynomial
    den = poly([1.0])
    for z0, cs in terms:
        den = den * poly([-z0, 1.0]) ** len(cs)
    num = kappa * den
    for z0, cs in terms:
        rest = poly([1.0])
        for w0, ds in terms:
            if w0 != z0:
                rest = rest * poly([-w0, 1.0]) ** len(ds)
        for k, c in enumerate(cs, start=1):
            num = num + c * rest * poly([-z0, 1.0]) ** (len(cs) - k)
    zeros = list(num.roots()) if num.degree() > 0 else []
    poles = [z0 for z0, cs in terms for _ in cs]
    # cancel common factors
    out_z = []
    for a in zeros:
        hit = next((k for k, b in enumerate(poles) if abs(a - b) < 1e-7 * max(1.0, abs(b))), None)
        if hit is None:
            out_z.append(complex(a))
        else:
            poles.pop(hit)
    return out_z, poles


def phi_blocks_from_loop(rep):
    """Blocks of Phi from the joint spectral data of the Psi_i, or None when not semisimple."""
    params = rep.params
    pts = _psi_sample_points(rep)
    rng = np.random.default_rng(5)
    wdiag = np.diag(rep.weights @ (rng.normal(size=rep.rank) + 0.1))
    family = [rep.Psi[i](z) for i in range(rep.rank) for z in pts] + [wdiag]
    split = joint_spectral_split(family)
    blocks = []
    for P in split.projectors:
        r = np.trace(P).real
        mu = np.real(np.diag(P) @ rep.weights / r)
        quotients = []
        for i in range(rep.rank):
            F = rep.Psi[i].significant()
            kappa, terms = _scalar_data(F, P, r)
            for z in pts:
                psi = kappa + sum(c / (z - z0) ** k for z0, cs in terms for k, c in enumerate(cs, 1))
                dev = P @ F(z) - psi * P
                if max_norm(dev) > 1e-8 * max(1.0, max_norm(F(z))):
                    return None
            zeros, poles = _rational_zeros(kappa, terms)
            f = quotient_from_rational(kappa, zeros, poles, params)
            f, _ = knight_form(f, rep.datum.d[i] * params.hbar, params)
            quotients.append(f)
        blocks.append(PhiBlock(P, mu, tuple(quotients)))
    return tuple(blocks)


def theta_functor(rep, blocks=True):
    """Apply the functor to a non-congruent representation."""
    if not is_non_congruent(rep):
        raise FunctorUndefined("representation is congruent: two poles of some X_i differ by p^k")
    params = rep.params
    consts = tuple(functor_constant(params, rep.datum.d[i]) for i in range(rep.rank))
    half = {}
    for i in range(rep.rank):
        for s in (1, -1):
            half[(i, s)] = half_current_from_loop(rep, i, s, consts[i])
    phi_blocks = phi_blocks_from_loop(rep) if blocks else None
    override = None
    if phi_blocks is None:
        override = lambda i, u: phi_current(rep, i, u)  # noqa: E731
    return EllipticRep(rep.datum, params, rep.weights, phi_blocks, half, override, consts,
                       label=f"Theta({rep.label})" if rep.label else "Theta(V)")


def eval_half_current(erep, i, sign, u, lam):
    if sign not in (1, -1):
        raise InvalidArgument("sign must be +1 or -1")
    return erep.X(i, sign, u, lam)


def highest_weight_formulas(rep, samples=30, seed=7):
    """Compare Phi_i(u), G_i^{+-}(z) on the top vector with the theta products of the Drinfeld roots.

    With roots r = e^{2 pi i b} of P_i:  G_i^+ Omega = prod theta_plus(u - b + hbar_i)/theta_plus(u - b),
    G_i^- Omega = prod theta_minus(u - b + hbar_i)/theta_minus(u - b) and
    Phi_i Omega = prod theta(u - b + hbar_i)/theta(u - b).
    """
    from .qloop import qloop_highest_weight
    from .report import RelationReport
    from .theta import lattice_distance, theta, theta_minus
    data = qloop_highest_weight(rep)
    params = rep.params
    sp = rep.space
    g = sp.find(data.mu)
    omega = np.zeros(rep.dim, dtype=complex)
    omega[sp.members[g][0]] = 1.0
    report = RelationReport(params.tol_check, env={"params": params.as_dict(), "seed": seed})
    rng = np.random.default_rng(seed)
    bs = [[_log_point(r) for r in roots] for roots in data.roots]
    avoid = [b - s for i, bi in enumerate(bs) for b in bi for s in (0, rep.datum.d[i] * params.hbar)]
    done = 0
    while done < samples:
        u = complex(rng.uniform(0, 1) + rng.uniform(-0.45, 0.45) * params.tau)
        if any(lattice_distance(u - c, params.tau) < 0.05 for c in avoid):
            continue
        done += 1
        z = np.exp(TWO_PI_I * u)
        for i in range(rep.rank):
            hi = rep.datum.d[i] * params.hbar
            fp = fm = ff = 1.0 + 0j
            for b in bs[i]:
                fp *= theta_plus(u - b + hi, params) / theta_plus(u - b, params)
                fm *= theta_minus(u - b + hi, params) / theta_minus(u - b, params)
                ff *= theta(u - b + hi, params) / theta(u - b, params)
            for name, M, f in (("hw_Gplus", g_factor(rep, i, 1, z), fp), ("hw_Gminus", g_factor(rep, i, -1, z), fm),
                               ("hw_Phi", phi_current(rep, i, u), ff)):
                v = M @ omega
                report.add(name, np.linalg.norm(v - f * omega) / max(1.0, abs(f)), i=i, u=u)
    return report
