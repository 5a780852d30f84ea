"""Theta functions, dynamical kernels and doubly quasi-periodic partial fractions.

Conventions: p = exp(2 pi i tau), q = exp(pi i hbar), z = exp(2 pi i u).  theta is the
odd Jacobi theta function with theta'(0) = 1,

    theta(u) = sin(pi u)/pi * theta_plus(u) theta_minus(u) / theta_plus(0)**2,
    theta_pm(u) = prod_{n >= 1} (1 - p**n z**(+-1)).
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import series
from .errors import InvalidArgument, InvalidParams, PoleHit, Unsupported

TWO_PI_I = 2j * np.pi
POLE_TOL = 1e-9
MAX_KERNEL_ORDER = 12


# ----------------------------------------------------------------------------
# parameters and the period lattice


@dataclass(frozen=True)
class ModularParams:
    """Modular parameter tau, step hbar, truncation order and tolerances."""

    tau: complex
    hbar: complex
    trunc: int = 40
    tol_eval: float = 1e-12
    tol_check: float = 1e-8
    n_generic: int = 24

    def __post_init__(self):
        for name in ("tau", "hbar"):
            try:
                v = complex(getattr(self, name))
            except (TypeError, ValueError) as exc:
                raise InvalidParams(f"{name} is not a complex number") from exc
            if not np.isfinite(v):
                raise InvalidParams(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.tau.imag <= 0:
            raise InvalidParams(f"Im(tau) = {self.tau.imag:g} must be positive so that |p| < 1")
        if int(self.trunc) < 1:
            raise InvalidParams("trunc must be a positive integer")
        object.__setattr__(self, "trunc", int(self.trunc))
        if abs(self.p) ** (self.trunc + 1) >= self.tol_eval:
            raise InvalidParams(
                f"|p|^(trunc+1) = {abs(self.p) ** (self.trunc + 1):.3g} is not below "
                f"tol_eval = {self.tol_eval:g}; increase trunc")
        for n in range(1, self.n_generic + 1):
            if lattice_distance(n * self.hbar, self.tau) < POLE_TOL:
                raise InvalidParams(f"{n}*hbar lies in Z + tau Z; hbar must be generic")

    @property
    def p(self):
        return np.exp(TWO_PI_I * self.tau)

    @property
    def q(self):
        return np.exp(1j * np.pi * self.hbar)

    def qd(self, d):
        """q_i = q**d_i."""
        return np.exp(1j * np.pi * d * self.hbar)

    @property
    def truncation_bound(self):
        ap = abs(self.p)
        return ap ** (self.trunc + 1) / (1 - ap)

    def replace(self, **kw):
        return replace(self, **kw)

    def as_dict(self):
        return {
            "tau": [self.tau.real, self.tau.imag],
            "hbar": [self.hbar.real, self.hbar.imag],
            "trunc": self.trunc,
            "tol_eval": self.tol_eval,
            "tol_check": self.tol_check,
            "truncation_bound": self.truncation_bound,
        }


def lattice_coords(x, tau):
    """Real coordinates (s, t) with x = s + t*tau."""
    x = np.asarray(x, dtype=complex)
    tau = complex(tau)
    t = x.imag / tau.imag
    s = x.real - t * tau.real
    return s, t


def reduce_mod_lattice(x, tau, centered=False):
    """Return (x0, m, n) with x = x0 + m + n*tau.

    x0 lies in the fundamental parallelogram {s + t tau : s, t in [0, 1)} or, when
    ``centered``, in the parallelogram with s, t in [-1/2, 1/2).
    """
    x = np.asarray(x, dtype=complex)
    s, t = lattice_coords(x, tau)
    shift = 0.5 if centered else 0.0
    n = np.floor(t + shift)
    m = np.floor(s + shift)
    x0 = x - m - n * tau
    return x0, m.astype(np.int64), n.astype(np.int64)


def slice_reduce(x, tau):
    """Representative of x mod Z + tau Z in the fundamental parallelogram, with offsets."""
    x0, m, n = reduce_mod_lattice(x, tau)
    s, t = lattice_coords(x0, tau)
    # guard against rounding pushing a coordinate onto 1.0
    m = m + (s >= 1.0)
    n = n + (t >= 1.0)
    x0 = np.asarray(x, dtype=complex) - m - n * complex(tau)
    return x0, m, n


def lattice_distance(x, tau):
    """Distance from x to the nearest point of Z + tau Z."""
    x0, _, _ = reduce_mod_lattice(x, tau, centered=True)
    tau = complex(tau)
    best = np.full(np.shape(x0), np.inf)
    for j in (-1, 0, 1):
        for k in (-1, 0, 1):
            best = np.minimum(best, np.abs(x0 - j - k * tau))
    return best if best.ndim else float(best)


def lattice_member(x, tau, tol=1e-8):
    """(is_member, m, n): whether x is within tol of m + n*tau."""
    s, t = lattice_coords(x, tau)
    m = int(np.round(s))
    n = int(np.round(t))
    return abs(complex(x) - m - n * complex(tau)) < tol, m, n


def _as_scalar(a):
    return complex(a) if np.ndim(a) == 0 else a


def _check_finite(u):
    u = np.asarray(u, dtype=complex)
    if not np.all(np.isfinite(u)):
        raise InvalidArgument("non-finite spectral argument")
    return u


# ----------------------------------------------------------------------------
# theta, theta_plus, theta_minus


def _pn(params, n_terms=None):
    n_terms = params.trunc if n_terms is None else n_terms
    return params.p ** np.arange(1, n_terms + 1)


def _theta_reduced(u0, params):
    pn = _pn(params)
    z = np.exp(TWO_PI_I * u0)[..., None]
    num = np.prod((1 - pn * z) * (1 - pn / z), axis=-1)
    return np.sin(np.pi * u0) / np.pi * num / np.prod(1 - pn) ** 2


def theta(u, params):
    """Odd Jacobi theta function, theta'(0) = 1."""
    u = _check_finite(u)
    u0, m, n = reduce_mod_lattice(u, params.tau, centered=True)
    sign = np.where((m + n) % 2 == 0, 1.0, -1.0)
    pref = sign * np.exp(-1j * np.pi * params.tau * n ** 2 - TWO_PI_I * n * u0)
    return _as_scalar(pref * _theta_reduced(u0, params))


def _plus_terms(z, params):
    """Number of factors so that |p|^(N+1) |z| is negligible."""
    ap = abs(params.p)
    zmax = float(np.max(np.abs(z))) if np.size(z) else 1.0
    need = math.ceil((math.log(1e-18) - math.log(max(zmax, 1e-300))) / math.log(ap)) if zmax > 0 else 1
    return max(params.trunc, need)


def theta_plus(u, params):
    """theta_plus(u) = prod_{n>=1} (1 - p**n e^{2 pi i u})."""
    u = _check_finite(u)
    u = u - np.round(u.real)
    z = np.exp(TWO_PI_I * u)
    pn = _pn(params, _plus_terms(z, params))
    return _as_scalar(np.prod(1 - pn * z[..., None], axis=-1))


def theta_minus(u, params):
    """theta_minus(u) = prod_{n>=1} (1 - p**n e^{-2 pi i u})."""
    return theta_plus(-np.asarray(u, dtype=complex), params)


def theta_eval(kind, u, params):
    """Evaluate theta ('full'), theta_plus ('plus') or theta_minus ('minus')."""
    if kind == "full":
        return theta(u, params)
    if kind == "plus":
        return theta_plus(u, params)
    if kind == "minus":
        return theta_minus(u, params)
    raise InvalidArgument(f"unknown theta kind {kind!r}")


# ----------------------------------------------------------------------------
# logarithmic derivatives and Taylor series

_STIRLING2 = {}


def _stirling2(n, k):
    if (n, k) not in _STIRLING2:
        if n == k:
            val = 1
        elif k == 0 or k > n:
            val = 0
        else:
            val = k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)
        _STIRLING2[(n, k)] = val
    return _STIRLING2[(n, k)]


def polylog_neg(k, y):
    """Li_{-k}(y) = sum_{r>=1} r**k y**r as a rational function (k >= 0)."""
    y = np.asarray(y, dtype=complex)
    r = y / (1 - y)
    out = np.zeros_like(r)
    for j in range(k + 1):
        out = out + math.factorial(j) * _stirling2(k + 1, j + 1) * r ** (j + 1)
    return out


def log_theta_derivative(u, m, params, kind="full"):
    """m-th derivative (m >= 1) of log theta, log theta_plus or log theta_minus at u.

    Uses d^m/du^m log(1 - c e^{2 pi i u}) = -(2 pi i)^m Li_{1-m}(c e^{2 pi i u}), exact
    for every order.
    """
    if m < 1:
        raise InvalidArgument("derivative order must be >= 1")
    u = _check_finite(u)
    if kind == "minus":
        return _as_scalar((-1) ** m * np.asarray(log_theta_derivative(-u, m, params, "plus")))
    if kind == "plus":
        u = u - np.round(u.real)
        z = np.exp(TWO_PI_I * u)
        pn = _pn(params, _plus_terms(z, params))
        val = -(TWO_PI_I ** m) * np.sum(polylog_neg(m - 1, pn * z[..., None]), axis=-1)
        return _as_scalar(val)
    if kind != "full":
        raise InvalidArgument(f"unknown theta kind {kind!r}")
    u0, _, n = reduce_mod_lattice(u, params.tau, centered=True)
    z = np.exp(TWO_PI_I * u0)
    pn = _pn(params)
    val = (-(TWO_PI_I ** m) * (polylog_neg(m - 1, z)
                                + np.sum(polylog_neg(m - 1, pn * z[..., None]), axis=-1))
           - (-TWO_PI_I) ** m * np.sum(polylog_neg(m - 1, pn / z[..., None]), axis=-1))
    if m == 1:
        val = val - 1j * np.pi - TWO_PI_I * n
    return _as_scalar(val)


def theta_logderiv(u, params):
    """theta'(u)/theta(u)."""
    return log_theta_derivative(u, 1, params, "full")


def _half_taylor(x, n, params, kind):
    """Taylor coefficients of theta_plus/theta_minus at x (n terms)."""
    val = theta_eval(kind, x, params)
    logs = np.zeros(n, dtype=complex)
    for m in range(1, n):
        logs[m] = log_theta_derivative(x, m, params, kind) / math.factorial(m)
    return val * series.exp(logs, n)


def theta_taylor(x, n, params, kind="full"):
    """Coefficients c_k (k < n) with theta(x + s) = sum c_k s**k.

    Valid at every x, including lattice points (where c_0 = 0).
    """
    x = complex(_check_finite(x))
    if kind in ("plus", "minus"):
        return _half_taylor(x, n, params, kind)
    x0, m, k = reduce_mod_lattice(x, params.tau, centered=True)
    x0, m, k = complex(x0), int(m), int(k)
    sign = -1.0 if (m + k) % 2 else 1.0
    pref = sign * np.exp(-1j * np.pi * params.tau * k * k - TWO_PI_I * k * x0) \
        * series.exp_linear(-TWO_PI_I * k, n)
    sine = series.sin_shift(x0, np.pi, n) / np.pi
    plus = _half_taylor(x0, n, params, "plus")
    minus = _half_taylor(x0, n, params, "minus")
    out = series.mul(series.mul(pref, sine, n), series.mul(plus, minus, n), n)
    return out / theta_plus(0.0, params) ** 2


# ----------------------------------------------------------------------------
# dynamical kernel


def _check_off_lattice(x, params, what):
    if lattice_distance(x, params.tau) < POLE_TOL:
        raise PoleHit(f"{what} = {complex(x):.6g} lies on the period lattice", pole=complex(x))


def kernel_taylor(x, lam, n, params):
    """Taylor coefficients in s of theta(x+s+lam)/(theta(x+s) theta(lam))."""
    _check_off_lattice(x, params, "x")
    _check_off_lattice(lam, params, "lambda")
    num = theta_taylor(complex(x) + complex(lam), n, params)
    den = theta_taylor(complex(x), n, params)
    return series.mul(num, series.inv(den, n), n) / theta(lam, params)


def kernel_eval(x, lam, order, params):
    """((-d/dx)^n / n!) [theta(x+lam)/(theta(x) theta(lam))]."""
    order = int(order)
    if order < 0:
        raise InvalidArgument("order must be non-negative")
    if order > MAX_KERNEL_ORDER:
        raise Unsupported(f"kernel derivative order {order} exceeds {MAX_KERNEL_ORDER}")
    x = _check_finite(x)
    if x.ndim:
        return np.array([kernel_eval(xx, lam, order, params) for xx in x.ravel()]).reshape(x.shape)
    x = complex(x)
    _check_off_lattice(x, params, "x")
    _check_off_lattice(lam, params, "lambda")
    if order == 0:
        return theta(x + lam, params) / (theta(x, params) * theta(lam, params))
    coeffs = kernel_taylor(x, lam, order + 1, params)
    return (-1) ** order * coeffs[order]


def logderiv_kernel_eval(x, order, params):
    """((-d/dx)^n / n!) [theta'(x)/theta(x)] -- the kernel used when lam lies on the lattice."""
    x = complex(_check_finite(x))
    _check_off_lattice(x, params, "x")
    return (-1) ** order * log_theta_derivative(x, order + 1, params) / math.factorial(order)


# ----------------------------------------------------------------------------
# theta quotients


def _ctuple(values):
    return tuple(complex(v) for v in values)


@dataclass(frozen=True)
class ThetaQuotient:
    """C * prod theta(u - a_k) / prod theta(u - b_k)."""

    constant: complex = 1.0
    zeros: tuple = field(default_factory=tuple)
    poles: tuple = field(default_factory=tuple)

    def __post_init__(self):
        c = complex(self.constant)
        if c == 0 or not np.isfinite(c):
            raise InvalidArgument("theta quotient constant must be finite and non-zero")
        object.__setattr__(self, "constant", c)
        object.__setattr__(self, "zeros", _ctuple(self.zeros))
        object.__setattr__(self, "poles", _ctuple(self.poles))

    # -- structure
    def simplified(self, tol=1e-13):
        """Cancel zero/pole pairs that coincide exactly (not merely mod the lattice)."""
        zeros = list(self.zeros)
        poles = []
        for b in self.poles:
            hit = next((k for k, a in enumerate(zeros) if abs(a - b) < tol), None)
            if hit is None:
                poles.append(b)
            else:
                zeros.pop(hit)
        return ThetaQuotient(self.constant, zeros, poles)

    def __mul__(self, other):
        if isinstance(other, ThetaQuotient):
            return ThetaQuotient(self.constant * other.constant,
                                 self.zeros + other.zeros, self.poles + other.poles)
        return ThetaQuotient(self.constant * complex(other), self.zeros, self.poles)

    __rmul__ = __mul__

    def inverse(self):
        return ThetaQuotient(1.0 / self.constant, self.poles, self.zeros)

    @property
    def degree(self):
        return len(self.poles)

    def tau_multiplier(self):
        """f(u + tau)/f(u) for a balanced quotient: exp(2 pi i sum(a - b))."""
        if len(self.zeros) != len(self.poles):
            raise InvalidArgument("tau-multiplier is u-independent only for balanced quotients")
        return np.exp(TWO_PI_I * (sum(self.zeros, 0j) - sum(self.poles, 0j)))

    def one_multiplier(self):
        return (-1) ** ((len(self.zeros) - len(self.poles)) % 2)

    def shift_pair(self, zero_index, pole_index, m, n, tau):
        """Same function, with zero and pole representatives both moved by m + n*tau."""
        zeros = list(self.zeros)
        poles = list(self.poles)
        a, b = zeros[zero_index], poles[pole_index]
        ell = m + n * complex(tau)
        zeros[zero_index] = a + ell
        poles[pole_index] = b + ell
        c = self.constant * np.exp(TWO_PI_I * n * (a - b))
        return ThetaQuotient(c, zeros, poles)

    def shift_zero(self, zero_index, m):
        """Same function with one zero representative moved by the integer m."""
        zeros = list(self.zeros)
        zeros[zero_index] += m
        return ThetaQuotient(self.constant * (-1) ** (m % 2), zeros, self.poles)

    def shift_pole(self, pole_index, m):
        poles = list(self.poles)
        poles[pole_index] += m
        return ThetaQuotient(self.constant * (-1) ** (m % 2), self.zeros, poles)

    # -- evaluation
    def __call__(self, u, params):
        return theta_quotient_eval(self, u, params)

    def laurent(self, b, n_terms, params):
        """Laurent data at u = b: (order k, coefficients c_j of (u-b)^(j-k), j < n_terms)."""
        f = self.simplified()
        k = sum(1 for x in f.poles if abs(x - b) < 1e-13) - sum(1 for x in f.zeros if abs(x - b) < 1e-13)
        num = np.zeros(n_terms + abs(k) + 1, dtype=complex)
        num[0] = f.constant
        total = len(num)
        for a in f.zeros:
            t = theta_taylor(b - a, total, params)
            if abs(a - b) < 1e-13:
                t = np.concatenate([t[1:], [0.0]])
            num = series.mul(num, t, total)
        den = np.zeros(total, dtype=complex)
        den[0] = 1.0
        for c in f.poles:
            t = theta_taylor(b - c, total, params)
            if abs(c - b) < 1e-13:
                t = np.concatenate([t[1:], [0.0]])
            den = series.mul(den, t, total)
        out = series.mul(num, series.inv(den, total), total)
        return k, out[:n_terms]

    def principal_parts(self, params):
        """List of (b, n, f_{b,n}): coefficient of (u-b)^(-n-1) at each distinct pole."""
        f = self.simplified()
        seen = []
        for b in f.poles:
            if not any(abs(b - c) < 1e-13 for c in seen):
                seen.append(b)
        out = []
        for b in seen:
            k, coeffs = f.laurent(b, max(1, len(f.poles)) + 1, params)
            for n in range(k):
                out.append((b, n, complex(coeffs[k - 1 - n])))
        return out

    # -- serialization
    def to_json(self):
        return {
            "C": [self.constant.real, self.constant.imag],
            "zeros": [[a.real, a.imag] for a in self.zeros],
            "poles": [[b.real, b.imag] for b in self.poles],
        }

    @classmethod
    def from_json(cls, obj):
        def cx(v):
            return complex(v[0], v[1])
        return cls(cx(obj["C"]), [cx(v) for v in obj.get("zeros", [])],
                   [cx(v) for v in obj.get("poles", [])])


def theta_quotient_eval(f, u, params):
    """C * prod theta(u - a_k) / prod theta(u - b_k)."""
    f = f.simplified()
    u = complex(_check_finite(u))
    for b in f.poles:
        if lattice_distance(u - b, params.tau) < POLE_TOL:
            raise PoleHit(f"u = {u:.6g} hits the pole {b:.6g}", pole=b)
    val = f.constant
    for a in f.zeros:
        val *= theta(u - a, params)
    for b in f.poles:
        val /= theta(u - b, params)
    return val


def fay_residual(a, b, c, d, params):
    """Normalized residual of Fay's trisecant identity."""
    th = lambda x: theta(x, params)  # noqa: E731
    lhs = th(a - c) * th(a + c) * th(b - d) * th(b + d)
    rhs = (th(a - b) * th(a + b) * th(c - d) * th(c + d)
           + th(a - d) * th(a + d) * th(b - c) * th(b + c))
    return float(abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0))


# ----------------------------------------------------------------------------
# partial fractions for doubly quasi-periodic functions


@dataclass(frozen=True)
class QuasiPeriodicExpansion:
    """f(u) = sum f_{b,n} (-d)^n/n! kernel(u - b) (+ constant when the exponent is a period)."""

    quasi_exponent: complex
    terms: tuple
    constant: complex | None
    params: ModularParams

    @property
    def periodic(self):
        return self.constant is not None

    def __call__(self, u):
        u = complex(u)
        total = 0j
        for b, n, c in self.terms:
            if self.periodic:
                total += c * logderiv_kernel_eval(u - b, n, self.params)
            else:
                total += c * kernel_eval(u - b, self.quasi_exponent, n, self.params)
        if self.periodic:
            total += self.constant
        return total


def quasi_periodic_expand(principal_parts, quasi_exponent, params, constant=0.0):
    """Build the expansion of the function with the given principal parts and f(u+tau) = e^{-2 pi i a} f(u).

    ``principal_parts`` is a list of (b, n, f_{b,n}) where f_{b,n} multiplies (u-b)^(-n-1).
    When a lies in Z the expansion needs the additive ``constant`` (the K of the lemma).
    """
    terms = tuple((complex(b), int(n), complex(c)) for b, n, c in principal_parts)
    poles = []
    for b, n, _ in terms:
        if n < 0:
            raise InvalidArgument("pole orders are non-negative integers")
        if not any(abs(b - c) < 1e-13 for c in poles):
            poles.append(b)
    for i, b1 in enumerate(poles):
        for b2 in poles[i + 1:]:
            if lattice_distance(b1 - b2, params.tau) < POLE_TOL:
                raise InvalidArgument(f"poles {b1:.6g} and {b2:.6g} are congruent mod the lattice")
    a = complex(quasi_exponent)
    member, _, n_tau = lattice_member(a, params.tau, POLE_TOL)
    if member:
        if n_tau != 0:
            raise Unsupported("quasi-exponent with a non-zero tau component")
        residue_sum = sum(c for _, n, c in terms if n == 0)
        if abs(residue_sum) > 1e-9 * max(1.0, max((abs(c) for *_, c in terms), default=1.0)):
            raise InvalidArgument("an elliptic function must have vanishing residue sum")
        return QuasiPeriodicExpansion(a, terms, complex(constant), params)
    return QuasiPeriodicExpansion(a, terms, None, params)


# ----------------------------------------------------------------------------
# identity suite


def check_theta_identities(params, samples=200, seed=7):
    """Quasi-periodicity, oddness, the theta_plus/theta_minus splitting and Fay's identity."""
    from .report import RelationReport
    rng = np.random.default_rng(seed)
    tau = params.tau
    report = RelationReport(params.tol_check, env={"params": params.as_dict(), "seed": seed})

    def rel(a, b):
        return abs(a - b) / max(abs(a), abs(b), 1e-300)

    done = 0
    while done < samples:
        u = complex(rng.uniform(-1, 1) + rng.uniform(-1, 1) * tau)
        if lattice_distance(u, tau) < 0.05:
            continue
        done += 1
        th = theta(u, params)
        report.add("quasi_1", rel(theta(u + 1, params), -th), u=u)
        report.add("quasi_tau", rel(theta(u + tau, params), -np.exp(-1j * np.pi * tau - TWO_PI_I * u) * th), u=u)
        report.add("odd", rel(theta(-u, params), -th), u=u)
        split = np.sin(np.pi * u) / np.pi * theta_plus(u, params) * theta_minus(u, params) / theta_plus(0.0, params) ** 2
        report.add("splitting", rel(split, th), u=u)
        a, b, c, d = (complex(x) for x in rng.uniform(-0.5, 0.5, 4) + 1j * rng.uniform(-0.5, 0.5, 4) * tau.imag)
        report.add("fay", fay_residual(a, b, c, d, params), a=a)
    return report
