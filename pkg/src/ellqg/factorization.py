"""Abelian multiplicative factorization Phi(z) = H^+(z)^{-1} H^-(z) with Phi(pz) = K^{-2} Phi(z).

Per joint eigenspace with eigenvalue C prod theta(u - a)/theta(u - b) and K = eta there:

    H^+(z)^{-1} = C eta prod (z - alpha)/(z - beta) theta_plus(u - a)/theta_plus(u - b)
    H^-(z)      = prod theta_minus(u - a)/theta_minus(u - b)

(alpha = e^{2 pi i a}, beta = e^{2 pi i b}, eta = exp(pi i sum(b - a))).  Unipotent parts
N = sum F d^{n+1}/(n+1)! log theta(u - a) are split additively as N = h^- - h^+.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import series
from .errors import InconsistentData, InvalidArgument, Unsupported
from .linalg import max_norm, nilpotent_exp, normalized_residual, unipotent_log
from .qloop import RationalMatFun
from .theta import (TWO_PI_I, ThetaQuotient, lattice_distance, log_theta_derivative, theta_eval,
                    theta_taylor)


@dataclass(frozen=True, eq=False)
class FactorBlock:
    """Joint eigenspace: projector, eigenvalue quotient and unipotent log data ((a, n, F), ...)."""

    projector: np.ndarray
    quotient: ThetaQuotient
    nilpotent: tuple = ()

    @property
    def rank(self):
        return int(round(np.trace(self.projector).real))


@dataclass(frozen=True, eq=False)
class FactorizationProblem:
    K: np.ndarray
    blocks: tuple
    params: object

    @property
    def dim(self):
        return self.K.shape[0]

    def phi(self, u):
        """Phi at z = e^{2 pi i u} from the block data."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for B in self.blocks:
            val = B.quotient(u, self.params)
            if B.nilpotent:
                N = _log_sum(B.nilpotent, u, self.params, "full")
                out = out + val * B.projector @ nilpotent_exp(B.projector @ N @ B.projector)
            else:
                out = out + val * B.projector
        return out

    def to_json(self):
        return {"K": [[[complex(x).real, complex(x).imag] for x in row] for row in self.K],
                "blocks": [{"rank": B.rank, "quotient": B.quotient.to_json(),
                            "unipotent_terms": len(B.nilpotent)} for B in self.blocks]}


def _log_sum(terms, u, params, kind):
    """sum F d^{n+1}/(n+1)! log theta_kind(u - a)."""
    out = 0
    for a, n, F in terms:
        out = out + F * log_theta_derivative(u - a, n + 1, params, kind) / math.factorial(n + 1)
    return out


def _log_sin_derivative(x, m):
    """d^m/dx^m log sin(pi x) for m >= 1: pi cot(pi x) and its derivatives."""
    if m == 1:
        return np.pi / np.tan(np.pi * x)
    # cot^{(k)} via the polynomial recursion in c = cot: d/dx P(c) = -pi (1 + c^2) P'(c)
    P = np.polynomial.Polynomial([0.0, 1.0])
    for _ in range(m - 1):
        P = -np.pi * np.polynomial.Polynomial([1.0, 0.0, 1.0]) * P.deriv()
    return np.pi * P(1.0 / np.tan(np.pi * x))


def _h_plus(terms, u, params):
    """h^+ = -sum F d^{n+1}/(n+1)! log(sin(pi (u - a)) theta_plus(u - a))."""
    out = 0
    for a, n, F in terms:
        m = n + 1
        val = _log_sin_derivative(u - a, m) + log_theta_derivative(u - a, m, params, "plus")
        out = out - F * val / math.factorial(m)
    return out


def _h_plus_at_zero(terms, dim):
    """Limit u -> +i infinity of h^+: pi cot -> -pi i, higher cot derivatives -> 0."""
    out = np.zeros((dim, dim), dtype=complex)
    for a, n, F in terms:
        if n == 0:
            out = out - F * (-1j * np.pi)
    return out


@dataclass(frozen=True, eq=False)
class FactorizationSolution:
    problem: FactorizationProblem
    A: RationalMatFun
    etas: tuple

    @property
    def params(self):
        return self.problem.params

    def _blocks(self):
        return zip(self.problem.blocks, self.etas)

    def Hplus_inv(self, z):
        u = np.log(complex(z)) / TWO_PI_I
        out = 0
        for B, eta in self._blocks():
            f = B.quotient
            val = f.constant * eta
            for a in f.zeros:
                val *= (z - np.exp(TWO_PI_I * a)) * theta_eval("plus", u - a, self.params)
            for b in f.poles:
                val /= (z - np.exp(TWO_PI_I * b)) * theta_eval("plus", u - b, self.params)
            M = val * B.projector
            if B.nilpotent:
                M = M @ nilpotent_exp(-B.projector @ _h_plus(B.nilpotent, u, self.params) @ B.projector)
            out = out + M
        return out

    def Hplus(self, z):
        return np.linalg.inv(self.Hplus_inv(z))

    def Hminus(self, z):
        u = np.log(complex(z)) / TWO_PI_I
        out = 0
        for B, _ in self._blocks():
            f = B.quotient
            val = 1.0 + 0j
            for a in f.zeros:
                val *= theta_eval("minus", u - a, self.params)
            for b in f.poles:
                val /= theta_eval("minus", u - b, self.params)
            M = val * B.projector
            if B.nilpotent:
                M = M @ nilpotent_exp(B.projector @ _log_sum(B.nilpotent, u, self.params, "minus") @ B.projector)
            out = out + M
        return out

    def Gminus(self, z):
        return self.Hminus(z)

    def Gplus(self, z):
        """G^+ = H^{+,-1} A^{-1}; for semisimple blocks C prod theta_plus(u - a)/theta_plus(u - b)."""
        return self.Hplus_inv(z) @ np.linalg.inv(self.A(z))

    def Gplus_at_zero(self):
        """Exact value at z = 0 (theta_plus -> 1, h^+ -> its limit)."""
        d = self.problem.dim
        out = np.zeros((d, d), dtype=complex)
        for B, _ in self._blocks():
            M = B.quotient.constant * B.projector
            if B.nilpotent:
                h0 = _h_plus_at_zero(B.nilpotent, d)
                # G^+ = H^{+,-1} A^{-1}; at 0, A_U(0) = K_U^{-1} and H^{+,-1}_U(0) = exp(-h^+(0))
                KU = self._k_unipotent(B)
                M = M @ nilpotent_exp(-B.projector @ h0 @ B.projector) @ KU
            out = out + M
        return out

    def _k_unipotent(self, B):
        P = B.projector
        r = B.rank
        eta = np.trace(P @ self.problem.K) / r
        return P @ (self.problem.K / eta) @ P + (np.eye(self.problem.dim) - P)

    def Gplus_inv_taylor(self, b, n):
        """Taylor coefficients in s of G^+(e^{2 pi i (b + s)})^{-1} (semisimple blocks)."""
        return self._inv_taylor(b, n, "plus", use_constant=True)

    def Gminus_inv_taylor(self, b, n):
        return self._inv_taylor(b, n, "minus", use_constant=False)

    def _inv_taylor(self, b, n, kind, use_constant):
        d = self.problem.dim
        out = np.zeros((n, d, d), dtype=complex)
        for B, _ in self._blocks():
            if B.nilpotent:
                raise Unsupported("Taylor data of G^{+-} on unipotent blocks is not implemented")
            f = B.quotient
            s = np.zeros(n, dtype=complex)
            s[0] = 1.0 / f.constant if use_constant else 1.0
            for bb in f.poles:
                s = series.mul(s, theta_taylor(b - bb, n, self.params, kind), n)
            for a in f.zeros:
                s = series.mul(s, series.inv(theta_taylor(b - a, n, self.params, kind), n), n)
            out = out + s[:, None, None] * B.projector[None]
        return out

    def zeros_and_poles(self):
        """Known zeros and poles of A (as z-values) from the block data."""
        Z, P = [], []
        for B in self.problem.blocks:
            Z.extend(np.exp(TWO_PI_I * a) for a in B.quotient.zeros)
            P.extend(np.exp(TWO_PI_I * b) for b in B.quotient.poles)
            for a, _, _ in B.nilpotent:
                Z.append(np.exp(TWO_PI_I * a))
                P.append(np.exp(TWO_PI_I * a))
        return _dedupe(Z), _dedupe(P)


def _dedupe(values, tol=1e-10):
    out = []
    for x in values:
        x = complex(x)
        if not any(abs(x - y) < tol * max(1.0, abs(y)) for y in out):
            out.append(x)
    return out


def _check_consistency(problem):
    """Per block: eta = exp(pi i sum(b - a)), moving a zero by 1 to fix the sign if needed."""
    blocks, etas = [], []
    for B in problem.blocks:
        P = B.projector
        r = B.rank
        eta = complex(np.trace(P @ problem.K) / r)
        f = B.quotient
        if len(f.zeros) != len(f.poles):
            raise InconsistentData("eigenvalue quotient must have as many zeros as poles")
        target = np.exp(1j * np.pi * (sum(f.poles, 0j) - sum(f.zeros, 0j)))
        ratio = eta / target
        if abs(ratio + 1) < 1e-8 and f.zeros:
            f = f.shift_zero(0, 1)
            ratio = -ratio
        if abs(ratio - 1) > 1e-8:
            raise InconsistentData(f"K-eigenvalue {eta:.6g} violates the consistency condition "
                                   f"(expected {target:.6g})")
        nil = B.nilpotent
        if nil:
            # log(K^{-2}) = -2 pi i sum F_{a,0} on the block
            KU = P @ (problem.K / eta) @ P + (np.eye(problem.dim) - P)
            L = unipotent_log(KU)
            k = sum((F for _, n, F in nil if n == 0), np.zeros_like(P))
            if max_norm(-2 * L - (-TWO_PI_I) * k) > 1e-8 * max(1.0, max_norm(L)):
                raise InconsistentData("unipotent part of K does not match the log principal parts")
        blocks.append(FactorBlock(P, f, nil))
        etas.append(eta)
    return FactorizationProblem(problem.K, tuple(blocks), problem.params), tuple(etas)


def _coefficient_matrix(problem, etas, Hminus):
    params = problem.params
    poles = []
    orders = {}
    dim = problem.dim
    for B in problem.blocks:
        for b in B.quotient.poles:
            z0 = complex(np.exp(TWO_PI_I * b))
            key = next((p for p in poles if abs(p - z0) < 1e-10 * max(1, abs(z0))), None)
            if key is None:
                poles.append(z0)
                orders[z0] = 1
            else:
                orders[key] += 1
        for a, n, _ in B.nilpotent:
            z0 = complex(np.exp(TWO_PI_I * a))
            key = next((p for p in poles if abs(p - z0) < 1e-10 * max(1, abs(z0))), None)
            bound = (n + 1) * dim
            if key is None:
                poles.append(z0)
                orders[z0] = bound
            else:
                orders[key] = max(orders[key], bound) + 1
    K = problem.K
    p = params.p
    if not poles:
        return RationalMatFun(K)

    def func(z):
        return K @ Hminus(p * z) @ np.linalg.inv(Hminus(z))
    A = RationalMatFun.from_callable(func, poles, [orders[z] for z in poles], K)
    scale = max(1.0, max_norm(K))
    return A.significant(1e-11 * scale)


def solve_factorization(problem):
    """Solve the factorization problem blockwise; returns a FactorizationSolution."""
    fixed, etas = _check_consistency(problem)
    partial = FactorizationSolution(fixed, RationalMatFun(fixed.K), etas)
    A = _coefficient_matrix(fixed, etas, partial.Hminus)
    return FactorizationSolution(fixed, A, etas)


def check_factorization(sol, phi=None, samples=20, seed=7, tol=None):
    """Residuals of (F1)-(F4) and of A(infinity) = K = A(0)^{-1}."""
    params = sol.params
    tol = params.tol_check if tol is None else tol
    phi = phi or sol.problem.phi
    rng = np.random.default_rng(seed)
    avoid = []
    for B in sol.problem.blocks:
        avoid.extend(B.quotient.zeros)
        avoid.extend(B.quotient.poles)
        avoid.extend(a for a, _, _ in B.nilpotent)
    f1 = f2 = 0.0
    drawn = 0
    for _ in range(1000 * samples):
        if drawn >= samples:
            break
        u = complex(rng.uniform(0, 1) + rng.uniform(0.05, 0.95) * params.tau)
        if any(lattice_distance(u - a, params.tau) < 0.02 for a in avoid):
            continue
        if any(lattice_distance(u - a + params.tau, params.tau) < 0.02 for a in avoid):
            continue
        drawn += 1
        z = np.exp(TWO_PI_I * u)
        Hpi, Hm = sol.Hplus_inv(z), sol.Hminus(z)
        f1 = max(f1, normalized_residual(phi(u), Hpi @ Hm))
        K = sol.problem.K
        f2 = max(f2, max_norm(K @ Hm - Hm @ K), max_norm(K @ Hpi - Hpi @ K))
    big = np.exp(TWO_PI_I * (0.37 - 30j * params.tau.imag / abs(params.tau.imag)))
    f4 = max_norm(sol.Hminus(big) - np.eye(sol.problem.dim))
    K = sol.problem.K
    a_inf = normalized_residual(sol.A.value_at_inf, K)
    a_zero = normalized_residual(sol.A.at_zero() @ K, np.eye(sol.problem.dim))
    out = {"F1": f1, "F2": f2, "F4": f4, "A_infinity": a_inf, "A_zero": a_zero, "samples": drawn}
    out["pass"] = all(v < tol for k, v in out.items() if k not in ("samples",))
    return out


def _det_zeros(A, n_probe=None):
    """Zeros of det A(z) away from its poles (interpolation of det A * prod (z - z_k)^{d n_k})."""
    d = A.dim
    poles = A.poles
    orders = [len(cs) for _, cs in A.pole_terms]
    D = sum(d * n for n in orders)
    if D == 0:
        return []
    R = 2.0 * max(abs(z) for z in poles) + 1.0
    m = D + 1
    w = R * np.exp(2j * np.pi * np.arange(m) / m)
    vals = []
    for x in w:
        v = np.linalg.det(A(x))
        for z0, n in zip(poles, orders):
            v *= (x - z0) ** (d * n)
        vals.append(v)
    coeffs = np.fft.fft(np.array(vals)) / m  # coefficients of (z/R)^k
    coeffs = coeffs / R ** np.arange(m)
    coeffs[np.abs(coeffs) < 1e-13 * np.max(np.abs(coeffs))] = 0
    nz = np.nonzero(coeffs)[0]
    if len(nz) == 0:
        return []
    poly = np.polynomial.Polynomial(coeffs[: nz[-1] + 1])
    roots = list(poly.roots()) if poly.degree() > 0 else []
    pole_left = []
    for z0, n in zip(poles, orders):
        pole_left.extend([z0] * (d * n))
    out = []
    for r in roots:
        hit = next((k for k, z0 in enumerate(pole_left) if abs(r - z0) < 1e-5 * max(1, abs(z0))), None)
        if hit is None:
            if abs(r) > 1e-10:
                out.append(complex(r))
        else:
            pole_left.pop(hit)
    return _dedupe(out, 1e-6)


def uniqueness_preconditions(A, params, zeros=None, other=None, kmax=None):
    """True iff (Z, P), (Z, Z) and (P, P) (and the pairs with ``other``) are non-congruent."""
    from .qloop import congruence_exponent
    kmax = params.trunc if kmax is None else kmax
    P1 = list(A.poles)
    Z1 = _det_zeros(A) if zeros is None else list(zeros)
    pairs = [(Z1, P1), (Z1, Z1), (P1, P1)]
    if other is not None:
        P2 = list(other.poles)
        Z2 = _det_zeros(other)
        pairs += [(Z2, P2), (Z1, Z2), (P1, P2)]
    for S1, S2 in pairs:
        for x in S1:
            for y in S2:
                if congruence_exponent(x, y, params, kmax) is not None:
                    return False
    return True


def isomonodromy_residual(sol1, sol2, samples=10, seed=3):
    """max |A_2(z) - G(pz) A_1(z) G(z)^{-1}| with G = H_2^- H_1^{-,-1}."""
    params = sol1.params
    rng = np.random.default_rng(seed)
    worst = 0.0
    poles = list(sol1.A.poles) + list(sol2.A.poles)
    done = 0
    while done < samples:
        z = np.exp(rng.uniform(-1.0, 1.0) + 1j * rng.uniform(0, 2 * np.pi))
        if any(abs(z - c) < 0.05 or abs(params.p * z - c) < 0.05 for c in poles):
            continue
        done += 1
        G = lambda x: sol2.Hminus(x) @ np.linalg.inv(sol1.Hminus(x))  # noqa: E731
        rhs = G(params.p * z) @ sol1.A(z) @ np.linalg.inv(G(z))
        worst = max(worst, normalized_residual(sol2.A(z), rhs))
    return worst


def problem_from_erep(erep, i):
    """Factorization problem for Phi_i of an elliptic representation."""
    if erep.blocks is None:
        raise Unsupported("Phi has no spectral description (non-semisimple Psi data)")
    blocks = []
    for B in erep.blocks:
        nil = B.nilpotent[i] if B.nilpotent else ()
        blocks.append(FactorBlock(B.projector, B.quotients[i], tuple(nil)))
    return FactorizationProblem(erep.K(i), tuple(blocks), erep.params)


def scalar_problem(quotient, eta, params, nilpotent=(), dim=1, K=None):
    """Convenience: single-block problem on C^dim."""
    if K is None:
        K = eta * np.eye(dim)
    if quotient is None:
        raise InvalidArgument("a quotient is required")
    return FactorizationProblem(np.asarray(K, dtype=complex),
                                (FactorBlock(np.eye(dim, dtype=complex), quotient, tuple(nilpotent)),), params)


def gplus_zero_residual(sol, nodes=64):
    """Circle mean of G^+ near 0 against the exact G^+(0) = sum C_B P_B (eigenvalues are the constants)."""
    Z, P = sol.zeros_and_poles()
    r = 0.5 * min([1.0] + [abs(z) for z in list(Z) + list(P) + list(sol.A.poles)])
    w = r * np.exp(2j * np.pi * (np.arange(nodes) + 0.5) / nodes)
    mean = sum(sol.Gplus(z) for z in w) / nodes
    exact = sol.Gplus_at_zero()
    return normalized_residual(mean, exact)


def permuted_resolve_residual(sol, samples=10, seed=5):
    """Re-solve with the blocks in reverse order and compare the coefficient matrices."""
    prob = sol.problem
    other = solve_factorization(FactorizationProblem(prob.K, tuple(reversed(prob.blocks)), prob.params))
    rng = np.random.default_rng(seed)
    poles = list(sol.A.poles)
    worst = 0.0
    done = 0
    while done < samples:
        z = np.exp(rng.uniform(-1.5, 1.5) + 1j * rng.uniform(0, 2 * np.pi))
        if any(abs(z - c) < 0.05 for c in poles):
            continue
        done += 1
        worst = max(worst, normalized_residual(sol.A(z), other.A(z)))
    return worst, other


def factorization_report(erep, samples=20, seed=7):
    """Per node: (F1)-(F4), G^+(0), and uniqueness under a permuted re-solve."""
    out = {}
    for i in range(erep.rank):
        sol = solve_factorization(problem_from_erep(erep, i))
        res = check_factorization(sol, phi=lambda u, i=i: erep.phi(i, u), samples=samples, seed=seed)
        res["Gplus_zero"] = gplus_zero_residual(sol)
        perm, other = permuted_resolve_residual(sol, seed=seed)
        res["preconditions"] = bool(uniqueness_preconditions(sol.A, erep.params, other=other.A))
        res["permuted_resolve"] = perm
        out[str(i)] = res
    return out
