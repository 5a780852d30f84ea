"""Elliptic representations: commuting currents Phi_i(u) and dynamical half-currents.

Phi_i(u) is stored spectrally: a list of joint generalized eigenspaces (blocks), each
carrying one theta quotient per node and optional nilpotent log data.  Half-currents
are stored as partial fractions

    X_i^{+-}(u, lam) = sum_{b, n} X_{b,n}(lam) ((-d/du)^n / n!) theta(u-b+lam_i)/(theta(u-b) theta(lam_i))

with lam_i = (lam, alpha_i).  The coefficients X_{b,n}(lam) are finite sums
sum_k M_k exp(ell_k . lam) (lam in root coordinates), which keeps every gauge
transformation exact.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FormMismatch, InvalidArgument, PoleHit, Unsupported
from .linalg import max_norm, nilpotent_exp
from .qloop import WeightGradedSpace
from .theta import (POLE_TOL, TWO_PI_I, ThetaQuotient, kernel_eval, lattice_distance,
                    lattice_member, log_theta_derivative, slice_reduce, theta_quotient_eval)


# ----------------------------------------------------------------------------
# lambda-dependent coefficients


@dataclass(frozen=True, eq=False)
class LambdaCoeff:
    """sum_k M_k exp(ell_k . lam)."""

    terms: tuple

    @classmethod
    def constant(cls, M):
        M = np.array(M, dtype=complex)
        return cls(((M, np.zeros(0, dtype=complex)),))

    def __post_init__(self):
        clean = []
        for M, ell in self.terms:
            clean.append((np.array(M, dtype=complex), np.array(ell, dtype=complex).ravel()))
        object.__setattr__(self, "terms", tuple(clean))

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        out = 0
        for M, ell in self.terms:
            if ell.size == 0 or not np.any(ell):
                out = out + M
            else:
                out = out + M * np.exp(ell @ lam)
        return out

    @property
    def shape(self):
        return self.terms[0][0].shape

    def is_constant(self, tol=1e-12):
        return all(ell.size == 0 or np.max(np.abs(ell)) < tol or max_norm(M) < tol
                   for M, ell in self.terms)

    def exponents(self, tol=1e-12):
        return [ell for M, ell in self.terms if max_norm(M) >= tol]

    def at(self, lam):
        return self(lam)

    def map(self, f):
        return LambdaCoeff(tuple((f(M), ell) for M, ell in self.terms))

    def norm(self):
        return max((max_norm(M) for M, _ in self.terms), default=0.0)

    def to_json(self):
        def mat(M):
            return [[[float(x.real), float(x.imag)] for x in row] for row in M]
        return [{"M": mat(M), "ell": [[float(x.real), float(x.imag)] for x in ell]}
                for M, ell in self.terms]


def _pad(ell, n):
    ell = np.asarray(ell, dtype=complex).ravel()
    if ell.size == 0:
        return np.zeros(n, dtype=complex)
    return ell


# ----------------------------------------------------------------------------
# stored data


@dataclass(frozen=True, eq=False)
class PhiBlock:
    """Joint generalized eigenspace of the Phi_i with its eigenvalue quotients.

    On the block, Phi_i(u) = f_i(u) exp(N_i(u)) with N_i(u) = sum F (d^{n+1}/(n+1)!) log theta(u - a)
    over the entries (a, n, F) of ``nilpotent[i]``.
    """

    projector: np.ndarray
    weight: np.ndarray
    quotients: tuple
    nilpotent: tuple = ()

    @property
    def rank(self):
        return int(round(np.trace(self.projector).real))

    @property
    def semisimple(self):
        return not any(self.nilpotent)

    def log_part(self, i, u, params):
        if not self.nilpotent or not self.nilpotent[i]:
            return None
        N = 0
        for a, n, F in self.nilpotent[i]:
            N = N + F * log_theta_derivative(u - a, n + 1, params) / math.factorial(n + 1)
        return N

    def to_json(self):
        return {
            "weight": [float(np.real(x)) for x in self.weight],
            "rank": self.rank,
            "quotients": [f.to_json() for f in self.quotients],
            "semisimple": self.semisimple,
        }


@dataclass(frozen=True, eq=False)
class HalfCurrent:
    """Pole/coefficient table of one half-current X_i^{+-}."""

    node: int
    sign: int
    terms: tuple  # ((b, (LambdaCoeff for n = 0, 1, ...)), ...)

    @property
    def poles(self):
        return [b for b, _ in self.terms]

    def coefficient(self, b, n, lam, tol=1e-12):
        for bb, cs in self.terms:
            if abs(bb - b) < tol and n < len(cs):
                return cs[n](lam)
        return None

    def max_order(self):
        return max((len(cs) for _, cs in self.terms), default=0)

    def map(self, f):
        return HalfCurrent(self.node, self.sign,
                           tuple((b, tuple(c.map(f) for c in cs)) for b, cs in self.terms))

    def to_json(self):
        return {"node": self.node, "sign": self.sign,
                "terms": [{"b": [b.real, b.imag], "coefficients": [c.to_json() for c in cs]}
                          for b, cs in self.terms]}


@dataclass(frozen=True, eq=False)
class EllipticRep:
    """Weight-graded space with Phi_i(u) and X_i^{+-}(u, lam)."""

    datum: object
    params: object
    weights: np.ndarray
    blocks: tuple | None
    half: dict
    phi_override: object = None
    constants: tuple = ()
    label: str = ""
    space: WeightGradedSpace = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex)
        if w.ndim == 1:
            w = w[:, None]
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "space", WeightGradedSpace(w))
        if self.blocks is None and self.phi_override is None:
            raise InvalidArgument("an elliptic representation needs Phi data")

    @property
    def dim(self):
        return self.weights.shape[0]

    @property
    def rank(self):
        return self.datum.rank

    def lam_i(self, lam, i):
        return complex(self.datum.root_pairings(lam)[i])

    def K(self, i):
        vals = np.array([np.real(self.datum.coroot_values(mu)[i]) for mu in self.weights])
        return np.diag(np.exp(1j * np.pi * self.datum.d[i] * self.params.hbar * vals))

    def phi(self, i, u):
        u = complex(u)
        if self.blocks is None:
            return self.phi_override(i, u)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for B in self.blocks:
            val = theta_quotient_eval(B.quotients[i], u, self.params)
            N = B.log_part(i, u, self.params)
            if N is None:
                out = out + val * B.projector
            else:
                out = out + val * B.projector @ nilpotent_exp(B.projector @ N @ B.projector)
        return out

    def X(self, i, sign, u, lam):
        """X_i^{sign}(u, lam)."""
        hc = self.half[(i, sign)]
        lam = np.asarray(lam, dtype=complex)
        li = self.lam_i(lam, i)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for b, cs in hc.terms:
            for n, c in enumerate(cs):
                M = c(lam)
                if max_norm(M) == 0.0:
                    continue
                out = out + M * kernel_eval(complex(u) - b, li, n, self.params)
        return out

    def x_poles(self, i=None, sign=None):
        out = []
        for (j, s), hc in self.half.items():
            if (i is None or j == i) and (sign is None or s == sign):
                out.extend(hc.poles)
        return out

    def phi_poles(self):
        out = []
        if self.blocks is None:
            return out
        for B in self.blocks:
            for f in B.quotients:
                out.extend(f.poles)
                out.extend(f.zeros)
            for nil in B.nilpotent:
                out.extend(a for a, _, _ in nil)
        return out

    def replace(self, **kw):
        data = dict(datum=self.datum, params=self.params, weights=self.weights, blocks=self.blocks,
                    half=self.half, phi_override=self.phi_override, constants=self.constants,
                    label=self.label)
        data.update(kw)
        return EllipticRep(**data)

    def to_json(self):
        return {
            "label": self.label,
            "weights": [[float(x.real) for x in mu] for mu in self.weights],
            "constants": [[complex(c).real, complex(c).imag] for c in self.constants],
            "blocks": None if self.blocks is None else [B.to_json() for B in self.blocks],
            "half_currents": [self.half[k].to_json() for k in sorted(self.half)],
        }


def trivial_elliptic(datum, params):
    """One-dimensional representation with Phi = 1 and X = 0."""
    n = datum.rank
    block = PhiBlock(np.eye(1, dtype=complex), np.zeros(n), tuple(ThetaQuotient() for _ in range(n)))
    half = {(i, s): HalfCurrent(i, s, ()) for i in range(n) for s in (1, -1)}
    return EllipticRep(datum, params, np.zeros((1, n)), (block,), half, label="trivial")


# ----------------------------------------------------------------------------
# theta-quotient normal forms


def generic_point(avoid, params, tries=64, seed=11):
    """A spectral point far (mod the lattice) from every point of ``avoid``."""
    rng = np.random.default_rng(seed)
    best, best_d = None, -1.0
    for _ in range(tries):
        u = rng.uniform(0, 1) + rng.uniform(0, 1) * params.tau
        d = min((lattice_distance(u - a, params.tau) for a in avoid), default=1.0)
        if d > best_d:
            best, best_d = complex(u), d
        if d > 0.1:
            break
    return best


def quotient_from_rational(kappa, zeros_z, poles_z, params):
    """Theta quotient of the Phi-eigenvalue built from a Psi-eigenvalue.

    For psi(z) = kappa prod (z - alpha)/(z - beta) with kappa^2 prod(alpha/beta) = 1, the
    product G^+ psi G^- equals C prod theta(u - a)/theta(u - b), alpha = e^{2 pi i a},
    beta = e^{2 pi i b}, C = kappa exp(pi i sum(a - b)) = +-1; the sign is absorbed by
    moving one zero representative by 1.
    """
    def logs(zs):
        out = []
        for z in zs:
            x = np.log(complex(z)) / TWO_PI_I
            out.append(x - math.floor(x.real))
        return out

    a = logs(zeros_z)
    b = logs(poles_z)
    C = complex(kappa) * np.exp(1j * np.pi * (sum(a, 0j) - sum(b, 0j)))
    f = ThetaQuotient(C, a, b)
    if abs(C + 1) < 1e-6 and a:
        f = f.shift_zero(0, 1)
    return f


def knight_form(f, shift, params):
    """Rewrite f with slice-reduced poles and zeros placed exactly at b - shift or b + shift.

    Returns (quotient, complete) where complete is True when every zero was paired.
    The constant is recomputed numerically, so the function itself never changes.
    """
    f = f.simplified()
    poles = []
    for b in f.poles:
        b0, _, _ = slice_reduce(b, params.tau)
        poles.append(complex(b0))
    zeros = list(f.zeros)
    used = [False] * len(zeros)
    new_zeros = []
    for b in poles:
        hit = None
        for target in (b - shift, b + shift):
            for k, a in enumerate(zeros):
                if not used[k] and lattice_distance(a - target, params.tau) < 1e-8:
                    hit = (k, target)
                    break
            if hit:
                break
        if hit:
            used[hit[0]] = True
            new_zeros.append(hit[1])
    complete = all(used) and len(new_zeros) == len(poles)
    for k, a in enumerate(zeros):
        if not used[k]:
            new_zeros.append(a)
    g = ThetaQuotient(1.0, new_zeros, poles)
    u0 = generic_point(list(f.zeros) + list(f.poles) + new_zeros + poles, params)
    C = theta_quotient_eval(f, u0, params) / theta_quotient_eval(g, u0, params)
    u1 = generic_point(list(f.zeros) + list(f.poles) + [u0], params, seed=13)
    C1 = theta_quotient_eval(f, u1, params) / theta_quotient_eval(g, u1, params)
    if abs(C - C1) > 1e-8 * max(1.0, abs(C)):
        raise FormMismatch("zeros and poles do not reproduce the quotient after reduction")
    return ThetaQuotient(C, new_zeros, poles), complete


def quotients_proportional(f, g, params, tol=1e-8):
    """Return r with f = r g (both theta quotients), or None."""
    pts = list(f.zeros) + list(f.poles) + list(g.zeros) + list(g.poles)
    vals = []
    for seed in (3, 5, 9):
        u = generic_point(pts, params, seed=seed)
        vals.append(theta_quotient_eval(f, u, params) / theta_quotient_eval(g, u, params))
    if max(abs(v - vals[0]) for v in vals) > tol * max(1.0, abs(vals[0])):
        return None
    return complex(vals[0])


def pole_representatives(erep):
    """Poles of all stored half-currents, with their lattice class tags."""
    out = []
    for (i, s), hc in erep.half.items():
        for b in hc.poles:
            out.append((i, s, b))
    return out


def check_lattice_free(values, params, what):
    for k, x in enumerate(values):
        for y in values[k + 1:]:
            if lattice_member(x - y, params.tau, POLE_TOL)[0]:
                raise Unsupported(f"{what}: {x:.6g} and {y:.6g} are congruent")


def safe_kernel(x, lam, n, params):
    try:
        return kernel_eval(x, lam, n, params)
    except PoleHit:
        return np.inf


# ----------------------------------------------------------------------------
# constructions


def _embed(M, offs, k, total):
    out = np.zeros((total, total), dtype=complex)
    out[offs[k]:offs[k + 1], offs[k]:offs[k + 1]] = M
    return out


def direct_sum_elliptic(*reps):
    """Block-diagonal direct sum of elliptic representations."""
    if not reps:
        raise InvalidArgument("direct sum needs at least one summand")
    datum, params = reps[0].datum, reps[0].params
    dims = [r.dim for r in reps]
    offs = np.cumsum([0] + dims)
    total = int(offs[-1])
    weights = np.concatenate([r.weights for r in reps], axis=0)
    if any(r.blocks is None for r in reps):
        blocks = None

        def override(i, u):
            return sum(_embed(r.phi(i, u), offs, k, total) for k, r in enumerate(reps))
    else:
        override = None
        blocks = []
        for k, r in enumerate(reps):
            for B in r.blocks:
                nil = tuple(tuple((a, n, _embed(F, offs, k, total)) for a, n, F in node) for node in B.nilpotent)
                blocks.append(PhiBlock(_embed(B.projector, offs, k, total), B.weight, B.quotients, nil))
        blocks = tuple(blocks)
    half = {}
    for key in reps[0].half:
        terms = []
        for k, r in enumerate(reps):
            hc = r.half.get(key)
            if hc is None:
                continue
            for b, cs in hc.terms:
                terms.append((b, tuple(c.map(lambda M, k=k: _embed(M, offs, k, total)) for c in cs)))
        half[key] = HalfCurrent(key[0], key[1], tuple(terms))
    return EllipticRep(datum, params, weights, blocks, half, override, reps[0].constants,
                       label=" + ".join(r.label or "V" for r in reps))


def slice_reduced(erep):
    """Same representation with every half-current pole moved into the fundamental parallelogram.

    kernel(x - n tau) = e^{2 pi i n lam_i} kernel(x), so a pole b = b0 + m + n tau contributes
    X_{b,k}(lam) e^{2 pi i n lam_i} at b0.
    """
    half = {}
    Brow = erep.datum.B.astype(complex)
    for (i, s), hc in erep.half.items():
        terms = []
        for b, cs in hc.terms:
            b0, _, n = slice_reduce(b, erep.params.tau)
            shift = TWO_PI_I * n * Brow[i]
            new = []
            for c in cs:
                new.append(LambdaCoeff(tuple((M, _pad(ell, erep.rank) + shift) for M, ell in c.terms)))
            terms.append((complex(b0), tuple(new)))
        half[(i, s)] = HalfCurrent(i, s, tuple(terms))
    return erep.replace(half=half)
