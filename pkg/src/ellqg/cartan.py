"""Cartan data, the invariant form and weight bookkeeping.

Weights of the root span are stored as coordinate vectors in the basis of simple
roots: mu = sum_k mu[k] alpha_k.  With B = D A (B_ij = d_i a_ij = (alpha_i, alpha_j)):

    (mu, alpha_i)     = (B @ mu)[i]
    mu(alpha_i^vee)   = (A @ mu)[i]
    (mu, varpi_j^vee) = mu[j]          (dual basis of the simple roots)
"""

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .errors import InvalidArgument, InvalidCartan, Unsupported


def _lcm(a, b):
    return a * b // gcd(a, b)


def _symmetrizers(A):
    n = len(A)
    d = [None] * n
    for start in range(n):
        if d[start] is not None:
            continue
        d[start] = Fraction(1)
        component = [start]
        stack = [start]
        while stack:
            i = stack.pop()
            for j in range(n):
                if i == j or A[i][j] == 0:
                    continue
                # d_i a_ij = d_j a_ji
                dj = d[i] * Fraction(A[i][j], A[j][i])
                if d[j] is None:
                    d[j] = dj
                    component.append(j)
                    stack.append(j)
                elif d[j] != dj:
                    raise InvalidCartan("matrix is not symmetrizable (inconsistent cycle)")
        denom = 1
        for k in component:
            denom = _lcm(denom, d[k].denominator)
        ints = [int(d[k] * denom) for k in component]
        g = 0
        for v in ints:
            g = gcd(g, v)
        for k, v in zip(component, ints):
            d[k] = Fraction(v // g)
    return tuple(int(x) for x in d)


@dataclass(frozen=True, eq=False)
class CartanDatum:
    """A symmetrizable generalized Cartan matrix with its symmetrizers."""

    A: np.ndarray
    d: tuple
    labels: tuple

    @property
    def rank(self):
        return self.A.shape[0]

    @property
    def B(self):
        """Invariant form on the simple roots: B_ij = (alpha_i, alpha_j) = d_i a_ij."""
        return np.diag(self.d) @ self.A

    @property
    def nondegenerate(self):
        return abs(np.linalg.det(self.A.astype(float))) > 1e-12

    @property
    def realization_dim(self):
        return 2 * self.rank - int(np.linalg.matrix_rank(self.A.astype(float)))

    def __eq__(self, other):
        return isinstance(other, CartanDatum) and np.array_equal(self.A, other.A)

    def __hash__(self):
        return hash(self.A.tobytes())

    # -- pairings on root coordinates
    def form(self, x, y):
        """(x, y) for weights in root coordinates."""
        return complex(np.asarray(x) @ self.B @ np.asarray(y))

    def root_pairings(self, lam):
        """Vector ((lam, alpha_i))_i."""
        return self.B @ np.asarray(lam, dtype=complex)

    def coroot_values(self, mu):
        """Vector (mu(alpha_i^vee))_i."""
        return self.A @ np.asarray(mu, dtype=complex)

    def simple_root(self, i):
        e = np.zeros(self.rank)
        e[i] = 1.0
        return e

    def fundamental_weight(self, j):
        """varpi_j with varpi_j(alpha_i^vee) = delta_ij (root coordinates)."""
        self._need_nondegenerate()
        return np.linalg.solve(self.A.astype(float), self.simple_root(j))

    def weight_from_root_pairings(self, values):
        """The weight lam with (lam, alpha_i) = values[i]."""
        self._need_nondegenerate()
        return np.linalg.solve(self.B.astype(float), np.asarray(values, dtype=complex))

    def _need_nondegenerate(self):
        if not self.nondegenerate:
            raise Unsupported("fundamental (co)weights require a nondegenerate Cartan matrix")

    def is_dominant_integral(self, mu, tol=1e-9):
        vals = self.coroot_values(mu)
        return bool(np.all(np.abs(vals - np.round(vals.real)) < tol) and np.all(vals.real > -tol))

    def to_json(self):
        return {"A": self.A.tolist(), "labels": list(self.labels)}


def validate_cartan(A, labels=None):
    """Validate a generalized Cartan matrix and compute minimal symmetrizers."""
    try:
        arr = np.array(A)
    except Exception as exc:  # pragma: no cover - defensive
        raise InvalidCartan("matrix could not be read") from exc
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidCartan("Cartan matrix must be square and non-empty")
    if not np.all(np.equal(np.round(arr.astype(float)), arr.astype(float))):
        raise InvalidCartan("Cartan matrix must have integer entries")
    arr = arr.astype(int)
    n = arr.shape[0]
    for i in range(n):
        if arr[i, i] != 2:
            raise InvalidCartan(f"diagonal entry a_{i}{i} = {arr[i, i]} != 2")
        for j in range(n):
            if i != j:
                if arr[i, j] > 0:
                    raise InvalidCartan(f"off-diagonal entry a_{i}{j} > 0")
                if (arr[i, j] == 0) != (arr[j, i] == 0):
                    raise InvalidCartan(f"a_{i}{j} and a_{j}{i} must vanish together")
    d = _symmetrizers(arr.tolist())
    if labels is None:
        labels = tuple(str(k + 1) for k in range(n))
    labels = tuple(str(x) for x in labels)
    if len(labels) != n:
        raise InvalidCartan("one label per node is required")
    arr.setflags(write=False)
    return CartanDatum(arr, d, labels)


def cartan_of_type(name):
    """Cartan data for the types used throughout the package."""
    table = {
        "sl2": [[2]],
        "sl3": [[2, -1], [-1, 2]],
        "sl2xsl2": [[2, 0], [0, 2]],
    }
    if name not in table:
        raise InvalidArgument(f"unknown type {name!r}")
    return validate_cartan(table[name])


def pair(datum, lam, x):
    """Pair a weight (root coordinates) with ('root', j), ('coroot', j) or ('fund_coweight', j)."""
    kind, j = x
    lam = np.asarray(lam, dtype=complex)
    if kind == "root":
        return complex(datum.root_pairings(lam)[j])
    if kind == "coroot":
        return complex(datum.coroot_values(lam)[j])
    if kind == "fund_coweight":
        datum._need_nondegenerate()
        return complex(lam[j])
    raise InvalidArgument(f"unknown pairing target {kind!r}")
