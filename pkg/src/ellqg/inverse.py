"""Gauge normalization and the inverse functor (elliptic -> quantum loop).

A gauge is a block-scalar function phi(lam) = sum_B exp(w_B . lam + c_B) P_B.  The gauged
representation V' is defined so that phi is a morphism V' -> V:

    Phi'_i(u)      = phi(lam + hbar alpha_i/2)^{-1} Phi_i(u) phi(lam - hbar alpha_i/2)
    X'^{+-}_i(u, lam) = phi(tgt)^{-1} X^{+-}_i(u, lam) phi(src)

with tgt = +-lam -+ hbar(mu +- alpha_i)/2 + hbar alpha_i/2 and src = +-lam -+ hbar mu/2 - hbar alpha_i/2.
On a block, Phi'_i = e^{-hbar w_i} Phi_i, so only the constants of the eigenvalue quotients move.
"""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .elliptic import EllipticRep, HalfCurrent, LambdaCoeff, PhiBlock, _pad, quotients_proportional
from .errors import InconsistentData, InvalidArgument, Unsupported
from .factorization import problem_from_erep, solve_factorization
from .linalg import max_norm, normalized_residual
from .qloop import QLoopRep, RationalMatFun
from .theta import TWO_PI_I, ThetaQuotient

PIECE_TOL = 1e-12
MAX_FLAT_SHIFT = 12


@dataclass(frozen=True, eq=False)
class GaugeRecord:
    """Composite gauge phi(lam) = sum_B exp(w_B . lam + c_B) P_B (a morphism normalized -> original)."""

    projectors: tuple
    w: tuple
    c: tuple
    flat_exponents: dict = field(default_factory=dict)
    constants_before: tuple = ()
    branches: tuple = ()

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        out = 0
        for P, w, c in zip(self.projectors, self.w, self.c):
            out = out + np.exp(np.dot(w, lam) + c) * P
        return out

    def inverse(self, lam):
        lam = np.asarray(lam, dtype=complex)
        out = 0
        for P, w, c in zip(self.projectors, self.w, self.c):
            out = out + np.exp(-np.dot(w, lam) - c) * P
        return out

    @property
    def is_identity(self):
        return all(max(np.max(np.abs(w)), abs(c)) < 1e-12 for w, c in zip(self.w, self.c))

    def to_json(self):
        cx = lambda x: [float(np.real(x)), float(np.imag(x))]  # noqa: E731
        return {
            "blocks": [{"rank": int(round(np.trace(P).real)), "w": [cx(x) for x in w], "c": cx(c)}
                       for P, w, c in zip(self.projectors, self.w, self.c)],
            "flat_exponents": {str(k): [int(x) for x in v] for k, v in self.flat_exponents.items()},
            "constants_before": [[cx(x) for x in C] for C in self.constants_before],
            "branches": [[cx(x) for x in b] for b in self.branches],
        }


def _need_blocks(erep):
    if erep.blocks is None:
        raise Unsupported("gauge normalization needs the spectral (block) description of Phi")


def _pieces(erep, M):
    """(B', B, P_{B'} M P_B) for the non-zero block pieces of M."""
    out = []
    for kp, Bp in enumerate(erep.blocks):
        left = Bp.projector @ M
        if max_norm(left) < PIECE_TOL:
            continue
        for k, B in enumerate(erep.blocks):
            piece = left @ B.projector
            if max_norm(piece) >= PIECE_TOL * max(1.0, max_norm(M)):
                out.append((kp, k, piece))
    return out


def _merge_terms(terms, tol=1e-12):
    merged = []
    for M, ell in terms:
        for idx, (M2, ell2) in enumerate(merged):
            if np.max(np.abs(ell - ell2)) < tol:
                merged[idx] = (M2 + M, ell2)
                break
        else:
            merged.append((M, ell))
    kept = [(M, ell) for M, ell in merged if max_norm(M) > 0]
    return tuple(kept) if kept else (merged[0],)


def apply_gauge(erep, w, c):
    """The representation V^phi for phi = sum_B exp(w_B . lam + c_B) P_B (phi : V^phi -> V)."""
    _need_blocks(erep)
    h = erep.params.hbar
    n = erep.rank
    w = [np.asarray(x, dtype=complex) for x in w]
    blocks = []
    for B, wB in zip(erep.blocks, w):
        qs = tuple(ThetaQuotient(f.constant * np.exp(-h * wB[i]), f.zeros, f.poles)
                   for i, f in enumerate(B.quotients))
        blocks.append(PhiBlock(B.projector, B.weight, qs, B.nilpotent))
    half = {}
    for (i, s), hc in erep.half.items():
        ai = erep.datum.simple_root(i).astype(complex)
        terms = []
        for b, cs in hc.terms:
            new_cs = []
            for coeff in cs:
                new_terms = []
                for M, ell in coeff.terms:
                    ell = _pad(ell, n)
                    for kp, k, piece in _pieces(erep, M):
                        mu = erep.blocks[k].weight
                        shift_t = -s * h * (mu + s * ai) / 2 + h * ai / 2
                        shift_s = -s * h * mu / 2 - h * ai / 2
                        scale = np.exp(-np.dot(w[kp], shift_t) - c[kp] + np.dot(w[k], shift_s) + c[k])
                        new_terms.append((scale * piece, ell - s * w[kp] + s * w[k]))
                if not new_terms:
                    new_terms = [(np.zeros_like(coeff.terms[0][0]), np.zeros(n, dtype=complex))]
                new_cs.append(LambdaCoeff(_merge_terms(new_terms)))
            terms.append((b, tuple(new_cs)))
        half[(i, s)] = HalfCurrent(i, s, tuple(terms))
    return erep.replace(blocks=tuple(blocks), half=half)


def twist(erep, block_exponents):
    """Twist by psi(lam) = exp(-2 pi i (lam, alpha)) on the listed blocks ({block index: alpha}).

    The result V^psi is isomorphic to V; psi is a morphism V^psi -> V.
    """
    _need_blocks(erep)
    Bm = erep.datum.B.astype(complex)
    w, c = [], []
    for k in range(len(erep.blocks)):
        alpha = np.asarray(block_exponents.get(k, np.zeros(erep.rank)), dtype=complex)
        w.append(-TWO_PI_I * Bm @ alpha)
        c.append(0.0)
    return apply_gauge(erep, w, c), GaugeRecord(tuple(B.projector for B in erep.blocks), tuple(w), tuple(c))


# ----------------------------------------------------------------------------
# first gauge: lambda-flatness


def _flat_exponent(erep, Bk, Bl):
    """Integer alpha with f_{l,i} = f_{k,i} exp(2 pi i hbar (alpha_i, alpha)) for all i, or None."""
    h = erep.params.hbar
    n_vals = []
    for i in range(erep.rank):
        r = quotients_proportional(Bl.quotients[i], Bk.quotients[i], erep.params)
        if r is None:
            return None
        hit = None
        for m in range(-MAX_FLAT_SHIFT, MAX_FLAT_SHIFT + 1):
            if abs(r - np.exp(TWO_PI_I * h * m)) < 1e-8 * max(1.0, abs(r)):
                hit = m
                break
        if hit is None:
            return None
        n_vals.append(hit)
    alpha = np.linalg.solve(erep.datum.B.astype(float), np.array(n_vals, dtype=float))
    if np.max(np.abs(alpha - np.round(alpha))) > 1e-9:
        return None
    return np.round(alpha).astype(int)


def _log_size(B):
    return sum(abs(np.log(f.constant)) for f in B.quotients)


def first_gauge(erep):
    """Gauge data making equivalent eigenvalues coincide; returns (w, c, exponents)."""
    _need_blocks(erep)
    blocks = erep.blocks
    nB = len(blocks)
    Bm = erep.datum.B.astype(complex)
    w = [np.zeros(erep.rank, dtype=complex) for _ in range(nB)]
    c = [0.0] * nB
    exponents = {}
    assigned = [False] * nB
    order = sorted(range(nB), key=lambda k: _log_size(blocks[k]))
    for k in order:
        if assigned[k]:
            continue
        assigned[k] = True
        for l in order:
            if assigned[l] or np.max(np.abs(blocks[l].weight - blocks[k].weight)) > 1e-9:
                continue
            alpha = _flat_exponent(erep, blocks[k], blocks[l])
            if alpha is None:
                continue
            assigned[l] = True
            exponents[l] = alpha
            w[l] = TWO_PI_I * Bm @ alpha
    return w, c, exponents


def merge_equal_blocks(erep):
    """Merge blocks of one weight with identical eigenvalue quotients."""
    _need_blocks(erep)
    groups = []
    for k, B in enumerate(erep.blocks):
        for g in groups:
            A = erep.blocks[g[0]]
            if np.max(np.abs(A.weight - B.weight)) > 1e-9:
                continue
            if all(_same_quotient(f, g2, erep.params) for f, g2 in zip(A.quotients, B.quotients)):
                g.append(k)
                break
        else:
            groups.append([k])
    if len(groups) == len(erep.blocks):
        return erep
    new = []
    for g in groups:
        P = sum(erep.blocks[k].projector for k in g)
        nil = ()
        if any(erep.blocks[k].nilpotent for k in g):
            nil = tuple(tuple(t for k in g for t in (erep.blocks[k].nilpotent[i] if erep.blocks[k].nilpotent else ()))
                        for i in range(erep.rank))
        new.append(PhiBlock(P, erep.blocks[g[0]].weight, erep.blocks[g[0]].quotients, nil))
    return erep.replace(blocks=tuple(new))


def _same_quotient(f, g, params):
    r = quotients_proportional(f, g, params)
    return r is not None and abs(r - 1) < 1e-8


# ----------------------------------------------------------------------------
# second gauge: constants and lambda-independence


def _edges(erep):
    """(source block, target block, sign, ell) for every non-zero piece of every coefficient."""
    out = []
    for (i, s), hc in erep.half.items():
        for _, cs in hc.terms:
            for coeff in cs:
                for M, ell in coeff.terms:
                    for kp, k, _ in _pieces(erep, M):
                        out.append((k, kp, s, _pad(ell, erep.rank)))
    return out


def second_gauge(erep):
    """Gauge data giving C = 1 on every block and lambda-independent coefficients.

    Per connected component (blocks linked by half-currents) the root block takes the
    principal logarithm w = ln(C)/hbar; other blocks inherit w along the links so that every
    coefficient exponent vanishes.  c_B = (hbar/2) (w_B . mu_B).
    """
    _need_blocks(erep)
    h = erep.params.hbar
    nB = len(erep.blocks)
    adj = [[] for _ in range(nB)]
    for k, kp, s, ell in _edges(erep):
        adj[k].append((kp, ell / s))
        adj[kp].append((k, -ell / s))
    w = [None] * nB
    branches = []
    for root in range(nB):
        if w[root] is not None:
            continue
        logs = np.array([np.log(f.constant) for f in erep.blocks[root].quotients])
        branches.append(logs)
        w[root] = logs / h
        queue = deque([root])
        while queue:
            k = queue.popleft()
            for kp, delta in adj[k]:
                cand = w[k] + delta
                if w[kp] is None:
                    w[kp] = cand
                    queue.append(kp)
                elif np.max(np.abs(w[kp] - cand)) > 1e-8 * max(1.0, np.max(np.abs(cand))):
                    raise InconsistentData("half-current exponents are not compatible with a block gauge")
    for B, wB in zip(erep.blocks, w):
        for i, f in enumerate(B.quotients):
            if abs(f.constant * np.exp(-h * wB[i]) - 1) > 1e-7:
                raise InconsistentData(
                    f"block of weight {np.real(B.weight).tolist()}: constant {f.constant:.6g} is not "
                    "reachable from its neighbours (eigenvalues not in Knight form)")
    c = [0.5 * h * np.dot(wB, B.weight) for B, wB in zip(erep.blocks, w)]
    return w, c, branches


def normalize_gauges(erep):
    """First gauge (lambda-flat, merged blocks) followed by the second gauge; returns (erep', record)."""
    _need_blocks(erep)
    if not erep.datum.nondegenerate:
        raise Unsupported("the second gauge uses fundamental coweights (nondegenerate Cartan matrix)")
    before = tuple(tuple(f.constant for f in B.quotients) for B in erep.blocks)
    w1, c1, exps = first_gauge(erep)
    flat = merge_equal_blocks(apply_gauge(erep, w1, c1))
    w2, c2, branches = second_gauge(flat)
    out = apply_gauge(flat, w2, c2)
    out = _snap(out)
    # compose: both gauges are scalar on every original block
    W, C = [], []
    for k, B in enumerate(erep.blocks):
        g = next(m for m, FB in enumerate(flat.blocks)
                 if max_norm(FB.projector @ B.projector - B.projector) < 1e-8)
        W.append(np.asarray(w1[k]) + w2[g])
        C.append(c1[k] + c2[g])
    record = GaugeRecord(tuple(B.projector for B in erep.blocks), tuple(W), tuple(C), exps, before,
                         tuple(branches))
    return out, record


def _snap(erep, tol=1e-10):
    """Set numerically unit constants and vanishing exponents to exact values."""
    blocks = []
    for B in erep.blocks:
        qs = tuple(ThetaQuotient(1.0 if abs(f.constant - 1) < tol else f.constant, f.zeros, f.poles)
                   for f in B.quotients)
        blocks.append(PhiBlock(B.projector, B.weight, qs, B.nilpotent))
    half = {}
    for key, hc in erep.half.items():
        terms = []
        for b, cs in hc.terms:
            new = []
            for coeff in cs:
                tt = tuple((M, np.where(np.abs(ell) < tol, 0, ell)) for M, ell in coeff.terms)
                new.append(LambdaCoeff(_merge_terms(tt)))
            terms.append((b, tuple(new)))
        half[key] = HalfCurrent(key[0], key[1], tuple(terms))
    return erep.replace(blocks=tuple(blocks), half=half)


def is_normalized(erep, tol=1e-8):
    if erep.blocks is None:
        return False
    for B in erep.blocks:
        if any(abs(f.constant - 1) > tol for f in B.quotients):
            return False
    for hc in erep.half.values():
        for _, cs in hc.terms:
            for coeff in cs:
                if not coeff.is_constant(tol):
                    return False
    return True


# ----------------------------------------------------------------------------
# inverse functor


def _y_coefficients(z0, k):
    """Partial-fraction coefficients {m: coeff of (z - z0)^{-m}} of (2 pi i)^k/k! (z0 d_{z0})^k [z0/(z - z0)]."""
    mono = {(1, 1): 1.0 + 0j}
    for _ in range(k):
        nxt = {}
        for (a, b), cf in mono.items():
            nxt[(a, b)] = nxt.get((a, b), 0) + a * cf
            nxt[(a + 1, b + 1)] = nxt.get((a + 1, b + 1), 0) + b * cf
        mono = nxt
    out = {}
    for (a, b), cf in mono.items():
        out[b] = out.get(b, 0) + cf * z0 ** a
    pref = TWO_PI_I ** k / math.factorial(k)
    return {m: pref * v for m, v in out.items()}


def _loop_current(erep, sol, i, sign, c):
    hc = erep.half[(i, sign)]
    d = erep.dim
    const = np.zeros((d, d), dtype=complex)
    poles = {}
    lam0 = np.zeros(erep.rank)
    for b, cs in hc.terms:
        X = [coeff(lam0) for coeff in cs]
        K = len(X)
        h = sol.Gplus_inv_taylor(b, K) if sign > 0 else sol.Gminus_inv_taylor(b, K)
        z0 = complex(np.exp(TWO_PI_I * b))
        parts = poles.setdefault(z0, {})
        for n in range(K):
            for k in range(n + 1):
                M = h[n - k] @ X[n]
                if k == 0:
                    const = const + M
                for m, cf in _y_coefficients(z0, k).items():
                    parts[m] = parts.get(m, 0) + cf * M
    scale = TWO_PI_I / c
    terms = []
    for z0, parts in poles.items():
        top = max(parts)
        terms.append((z0, tuple(scale * parts.get(m, np.zeros((d, d))) for m in range(1, top + 1))))
    return RationalMatFun(scale * const, tuple(terms)).significant(1e-14)


def xi_functor(erep):
    """Quantum loop representation of a gauge-normalized elliptic representation."""
    _need_blocks(erep)
    if not is_normalized(erep):
        raise InconsistentData("xi_functor needs a gauge-normalized representation (run normalize_gauges)")
    if any(B.nilpotent and any(B.nilpotent) for B in erep.blocks):
        raise Unsupported("the inverse functor is implemented for semisimple Phi only")
    Psi, Xp, Xm = [], [], []
    for i in range(erep.rank):
        sol = solve_factorization(problem_from_erep(erep, i))
        c = erep.constants[i] if erep.constants else _default_constant(erep, i)
        Psi.append(sol.A)
        Xp.append(_loop_current(erep, sol, i, 1, c))
        Xm.append(_loop_current(erep, sol, i, -1, c))
    label = f"Xi({erep.label})" if erep.label else "Xi(V)"
    return QLoopRep(erep.datum, erep.params, erep.weights, tuple(Psi), tuple(Xp), tuple(Xm), label=label)


def _default_constant(erep, i):
    from .functor import functor_constant
    return functor_constant(erep.params, erep.datum.d[i])


# ----------------------------------------------------------------------------
# round trips


def _loop_residual(V, W, samples=20, seed=7):
    rng = np.random.default_rng(seed)
    poles = [z for i in range(V.rank) for F in (V.Psi[i], V.Xplus[i], V.Xminus[i], W.Psi[i], W.Xplus[i],
                                                 W.Xminus[i]) for z in F.poles]
    worst = 0.0
    done = 0
    while done < samples:
        z = complex(np.exp(rng.uniform(-1.5, 1.5) + 1j * rng.uniform(0, 2 * np.pi)))
        if any(abs(z - c) < 0.05 * max(1, abs(c)) for c in poles):
            continue
        done += 1
        for i in range(V.rank):
            for F, G in ((V.Psi[i], W.Psi[i]), (V.Xplus[i], W.Xplus[i]), (V.Xminus[i], W.Xminus[i])):
                worst = max(worst, normalized_residual(F(z), G(z)))
    return worst


def _elliptic_residual(E, F, samples=20, seed=7):
    rng = np.random.default_rng(seed)
    params = E.params
    poles = list(E.x_poles()) + list(E.phi_poles()) + list(F.x_poles()) + list(F.phi_poles())
    from .theta import lattice_distance
    worst = 0.0
    done = 0
    while done < samples:
        u = complex(rng.uniform(0, 1) + rng.uniform(0, 1) * params.tau)
        lam = 0.6 * (rng.uniform(-1, 1, E.rank) + 1j * rng.uniform(-1, 1, E.rank))
        if any(lattice_distance(u - b, params.tau) < 0.05 for b in poles):
            continue
        if any(lattice_distance(E.lam_i(lam, i), params.tau) < 0.05 for i in range(E.rank)):
            continue
        done += 1
        for i in range(E.rank):
            worst = max(worst, normalized_residual(E.phi(i, u), F.phi(i, u)))
            for s in (1, -1):
                worst = max(worst, normalized_residual(E.X(i, s, u, lam), F.X(i, s, u, lam)))
    return worst


def roundtrip_report(rep, samples=20, seed=7):
    """Residuals of Xi(Theta(V)) vs V and Theta(Xi(W)) vs W (W the normalized elliptic side)."""
    from .functor import theta_functor
    if isinstance(rep, QLoopRep):
        E = theta_functor(rep)
        W, record = normalize_gauges(E)
        V2 = xi_functor(W)
        res1 = _loop_residual(rep, V2, samples, seed)
        res2 = _elliptic_residual(W, theta_functor(V2), samples, seed)
        gauge_identity = record.is_identity
    elif isinstance(rep, EllipticRep):
        W, record = normalize_gauges(rep)
        V2 = xi_functor(W)
        res2 = _elliptic_residual(W, theta_functor(V2), samples, seed)
        res1 = _loop_residual(V2, xi_functor(_snap(normalize_gauges(theta_functor(V2))[0])), samples, seed)
        gauge_identity = record.is_identity
    else:
        raise InvalidArgument("roundtrip_report expects a QLoopRep or an EllipticRep")
    return {"xi_theta": res1, "theta_xi": res2, "gauge_identity": bool(gauge_identity),
            "samples": samples}
