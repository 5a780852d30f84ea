"""Elliptic Drinfeld data, isomorphism classes mod the lattice, hbar-strings and triangularity."""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .elliptic import generic_point, quotients_proportional
from .errors import FormMismatch, InconsistentData, NotHighestWeight, Unsupported
from .linalg import max_norm
from .qloop import top_weights
from .theta import ThetaQuotient, lattice_member, slice_reduce, theta_quotient_eval

MAX_STRING_SHIFT = 40
MEMBER_TOL = 1e-8


def _cx(x):
    return [float(np.real(x)), float(np.imag(x))]


# ----------------------------------------------------------------------------
# hbar-strings


@dataclass(frozen=True)
class HbarString:
    """Points base + n*step (mod the lattice) with net orders (+ pole, - zero)."""

    base: complex
    positions: tuple
    orders: tuple
    expression: str
    balanced: bool
    first_positive: object = None      # point at which the counter first turns positive

    def points(self, step):
        return [self.base + n * step for n in self.positions]

    def to_json(self):
        return {"base": _cx(self.base), "positions": list(self.positions), "orders": list(self.orders),
                "expression": self.expression, "balanced": self.balanced,
                "first_positive": None if self.first_positive is None else _cx(self.first_positive)}


@dataclass(frozen=True)
class StringDiagnostic:
    """Per node: the hbar_i-strings of an eigenvalue and their balance verdicts."""

    nodes: dict = field(default_factory=dict)   # node -> (step, tuple of HbarString)

    @property
    def passed(self):
        return all(s.balanced for _, strings in self.nodes.values() for s in strings)

    def unbalanced(self):
        return [(i, s) for i, (_, strings) in self.nodes.items() for s in strings if not s.balanced]

    def to_json(self):
        return {"pass": self.passed,
                "nodes": {str(i): {"step": _cx(step), "strings": [s.to_json() for s in strings]}
                          for i, (step, strings) in self.nodes.items()}}


def string_offset(x, y, step, params, max_shift=MAX_STRING_SHIFT, tol=MEMBER_TOL):
    """n with x - y - n*step in the lattice, or None."""
    for n in sorted(range(-max_shift, max_shift + 1), key=abs):
        if lattice_member(x - y - n * step, params.tau, tol)[0]:
            return n
    return None


def parenthesize(positions, orders):
    """Expression read from the top of the string down: a pole of order k gives k '(', a zero ')'."""
    out = []
    for n, o in sorted(zip(positions, orders), key=lambda t: -t[0]):
        out.append(("(" if o > 0 else ")") * abs(o))
    return "".join(out)


def counter_check(expression):
    """Right-to-left counter: ')' decrements, '(' increments.

    Returns (balanced, index of the character at which the counter first becomes positive).
    """
    counter = 0
    first = None
    for k in range(len(expression) - 1, -1, -1):
        counter += 1 if expression[k] == "(" else -1
        if counter > 0 and first is None:
            first = k
    return (first is None and counter == 0), first


def hbar_strings(zeros, poles, step, params):
    """Decompose the divisor (zeros, poles) mod the lattice into step-strings."""
    pts = [(complex(z), -1) for z in zeros] + [(complex(b), 1) for b in poles]
    strings = []         # [base, {position: order}]
    for x, o in pts:
        for s in strings:
            n = string_offset(x, s[0], step, params)
            if n is not None:
                s[1][n] = s[1].get(n, 0) + o
                break
        else:
            strings.append([x, {0: o}])
    out = []
    for base, orders in strings:
        items = sorted((n, o) for n, o in orders.items() if o != 0)
        if not items:
            continue
        # re-base at the lowest point so positions are non-negative
        n0 = items[0][0]
        base = base + n0 * step
        positions = tuple(n - n0 for n, _ in items)
        ords = tuple(o for _, o in items)
        expr = parenthesize(positions, ords)
        ok, first = counter_check(expr)
        first_pt = None
        if first is not None:
            # map the character index back to its point (top of the string first)
            k = 0
            for n, o in sorted(zip(positions, ords), key=lambda t: -t[0]):
                k += abs(o)
                if k > first:
                    first_pt = base + n * step
                    break
        out.append(HbarString(base, positions, ords, expr, ok, first_pt))
    return tuple(out)


def raising_multiplicities(positions, orders):
    """m(n) = sum_{k >= 0} ord(n + k): multiplicity of the factor theta(u - c + step)/theta(u - c) at c = n."""
    ords = dict(zip(positions, orders))
    top = max(positions)
    out = {}
    acc = 0
    for n in range(top, min(positions) - 1, -1):
        acc += ords.get(n, 0)
        if acc:
            out[n] = acc
    return out


def theta_quotient_form_check(f, d, params, node=0):
    """String diagnostic of a theta quotient for the shift d*hbar."""
    step = d * params.hbar
    strings = hbar_strings(f.zeros, f.poles, step, params)
    return StringDiagnostic({node: (complex(step), strings)})


def product_form(f, d, params):
    """(C, [c_k]) with f = C prod theta(u - c_k + d hbar)/theta(u - c_k), or raise FormMismatch."""
    diag = theta_quotient_form_check(f, d, params)
    if not diag.passed:
        raise FormMismatch("eigenvalue is not a product of raising theta pairs", diag)
    step = d * params.hbar
    cs = []
    for s in diag.nodes[0][1]:
        for n, m in raising_multiplicities(s.positions, s.orders).items():
            c0, _, _ = slice_reduce(s.base + n * step, params.tau)
            cs.extend([complex(c0)] * m)
    g = ThetaQuotient(1.0, [c - step for c in cs], cs)
    C = quotients_proportional(f, g, params)
    if C is None:
        raise InconsistentData("product form does not reproduce the quotient")
    return C, cs


def balanced_oracle(positions, orders):
    """Brute force: does some multiset of factor positions reproduce the divisor?

    A factor at position c contributes a pole at c and a zero at c - 1.  Every multiplicity
    vector on the window of the string, with entries up to the total pole order, is tried.
    """
    target = {n: o for n, o in zip(positions, orders) if o}
    if not target:
        return True
    n_poles = sum(o for o in target.values() if o > 0)
    if n_poles != -sum(o for o in target.values() if o < 0):
        return False
    lo, hi = min(target), max(target)
    # multiplicities on lo..hi; the divisor lives on lo-1..hi
    want = np.array([target.get(n, 0) for n in range(lo - 1, hi + 1)])
    grid = np.array(list(itertools.product(range(n_poles + 1), repeat=hi - lo + 1)))
    zero = np.zeros((len(grid), 1), dtype=int)
    div = np.hstack([zero, grid]) - np.hstack([grid, zero])
    return bool(np.any(np.all(div == want, axis=1)))


# ----------------------------------------------------------------------------
# highest-weight data


@dataclass(frozen=True)
class EllipticHighestWeight:
    """(mu, b) with b[i] the slice-reduced multiset of node i, of size N_i = mu(alpha_i^vee)."""

    mu: np.ndarray
    b: tuple
    constants: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "b", tuple(tuple(sorted((complex(x) for x in bi),
                                                         key=lambda z: (round(z.real, 10), z.imag)))
                                            for bi in self.b))

    @property
    def N(self):
        return tuple(len(bi) for bi in self.b)

    def to_json(self):
        return {"mu": [float(x) for x in self.mu], "N": list(self.N),
                "b": [[_cx(x) for x in bi] for bi in self.b],
                "constants": [_cx(c) for c in self.constants]}


def _top_block(erep):
    if erep.blocks is None:
        raise Unsupported("highest-weight data need the spectral (block) description of Phi")
    space = erep.space
    tops = top_weights(space, erep.datum)
    dims = [space.dims[g] for g in tops]
    if len(tops) != 1 or dims[0] != 1:
        raise NotHighestWeight(f"top weight spaces have dimensions {dims}; need exactly one of dimension 1")
    mu = space.distinct[tops[0]]
    for B in erep.blocks:
        if np.max(np.abs(B.weight - mu)) < 1e-9:
            return np.real(mu), B
    raise NotHighestWeight("no Phi-eigenblock at the top weight")


def elliptic_drinfeld_data(erep, normalize=True):
    """Highest-weight data read off the Phi-eigenvalues on the top vector.

    With ``normalize`` the gauge normalization runs first (so the constants are 1 when it succeeds);
    the zero/pole data do not depend on the gauge.
    """
    if normalize and erep.blocks is not None:
        from .inverse import is_normalized, normalize_gauges
        if not is_normalized(erep):
            try:
                erep = normalize_gauges(erep)[0]
            except InconsistentData:
                pass       # the form check below reports what is wrong
    mu, B = _top_block(erep)
    if B.nilpotent and any(B.nilpotent):
        raise FormMismatch("Phi is not semisimple on the top vector")
    Acor = erep.datum.A.astype(float) @ mu
    bs, consts = [], []
    nodes = {}
    for i in range(erep.rank):
        d = erep.datum.d[i]
        diag = theta_quotient_form_check(B.quotients[i], d, erep.params, node=i)
        nodes.update(diag.nodes)
        if not diag.passed:
            raise FormMismatch(f"Phi_{i} eigenvalue on the top vector is not of raising form",
                               StringDiagnostic(nodes))
        C, cs = product_form(B.quotients[i], d, erep.params)
        if abs(len(cs) - Acor[i]) > 1e-9:
            raise FormMismatch(f"node {i}: {len(cs)} factors but mu(alpha_{i}^vee) = {Acor[i]:g}",
                               StringDiagnostic(nodes))
        bs.append(cs)
        consts.append(C)
    return EllipticHighestWeight(mu, tuple(bs), tuple(consts))


def _match_multisets(xs, ys, params, tol):
    used = [False] * len(ys)
    for x in xs:
        for k, y in enumerate(ys):
            if not used[k] and lattice_member(x - y, params.tau, tol)[0]:
                used[k] = True
                break
        else:
            return False
    return all(used)


def same_isoclass(hw1, hw2, params, tol=MEMBER_TOL):
    """True iff the weights agree and, per node, the multisets agree modulo the lattice."""
    if hw1.mu.shape != hw2.mu.shape or np.max(np.abs(hw1.mu - hw2.mu), initial=0) > 1e-9:
        return False
    if hw1.N != hw2.N:
        return False
    return all(_match_multisets(x, y, params, tol) for x, y in zip(hw1.b, hw2.b))


# ----------------------------------------------------------------------------
# triangularity


@dataclass(frozen=True)
class TriangularityReport:
    top_weight: np.ndarray
    raising_residual: float
    eigen_residual: float
    closure_dim: int
    closure_dim_multi_lambda: int
    dim: int
    samples: int

    @property
    def spanning(self):
        return self.closure_dim == self.dim

    @property
    def span_collapse(self):
        return self.closure_dim == self.closure_dim_multi_lambda

    def to_json(self):
        return {"top_weight": [float(x) for x in self.top_weight], "raising_residual": self.raising_residual,
                "eigen_residual": self.eigen_residual, "closure_dim": self.closure_dim,
                "closure_dim_multi_lambda": self.closure_dim_multi_lambda, "dim": self.dim,
                "spanning": self.spanning, "span_collapse": self.span_collapse, "samples": self.samples}


def _lowering_matrices(erep, lams):
    mats = []
    for i in range(erep.rank):
        for _, cs in erep.half[(i, -1)].terms:
            for coeff in cs:
                for lam in lams:
                    mats.append(coeff(lam))
    return mats


def _closure(start, mats, tol=1e-9):
    basis = start / np.linalg.norm(start)
    basis = basis[:, None]
    while True:
        cand = np.hstack([basis] + [M @ basis for M in mats])
        U, s, _ = np.linalg.svd(cand, full_matrices=False)
        r = int(np.sum(s > tol * s[0]))
        if r == basis.shape[1]:
            return r
        basis = U[:, :r]


def verify_triangularity(erep, samples=10, seed=7):
    """Top vector, raising annihilation, eigenvector property and the lowering closure."""
    if erep.blocks is None:
        raise Unsupported("triangularity check needs the spectral (block) description of Phi")
    space = erep.space
    tops = top_weights(space, erep.datum)
    if not tops:
        raise NotHighestWeight("no top weight")
    g = min(tops, key=lambda k: -float(np.sum(np.real(space.distinct[k]))))
    mu = space.distinct[g]
    blocks = [B for B in erep.blocks if np.max(np.abs(B.weight - mu)) < 1e-9]
    if not blocks:
        raise NotHighestWeight("degenerate top: no Phi-eigenvector at the top weight")
    B = blocks[0]
    col = int(np.argmax(np.linalg.norm(B.projector, axis=0)))
    omega = B.projector[:, col]
    if np.linalg.norm(omega) < 1e-12:
        raise NotHighestWeight("degenerate top: empty eigenblock")
    omega = omega / np.linalg.norm(omega)
    rng = np.random.default_rng(seed)
    params = erep.params
    avoid = list(erep.x_poles()) + list(erep.phi_poles())
    raise_res = eig_res = 0.0
    for k in range(samples):
        u = generic_point(avoid, params, seed=seed + k)
        lam = 0.5 * (rng.normal(size=erep.rank) + 1j * rng.normal(size=erep.rank))
        for i in range(erep.rank):
            X = erep.X(i, 1, u, lam)
            raise_res = max(raise_res, np.linalg.norm(X @ omega) / max(1.0, max_norm(X)))
            P = erep.phi(i, u)
            a = theta_quotient_eval(B.quotients[i], u, params)
            eig_res = max(eig_res, np.linalg.norm(P @ omega - a * omega) / max(1.0, abs(a)))
    lam0 = [0.37 - 0.21j + 0.13 * np.arange(erep.rank)]
    lams = lam0 + [0.4 * (rng.normal(size=erep.rank) + 1j * rng.normal(size=erep.rank)) for _ in range(3)]
    d1 = _closure(omega, _lowering_matrices(erep, lam0))
    d2 = _closure(omega, _lowering_matrices(erep, lams))
    return TriangularityReport(np.real(mu), float(raise_res), float(eig_res), d1, d2, erep.dim, samples)
