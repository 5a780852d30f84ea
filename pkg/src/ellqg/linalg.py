"""Linear algebra for commuting families of dense complex matrices."""

from dataclasses import dataclass

import numpy as np

from .errors import CommutatorTooLarge, InvalidArgument

CLUSTER_TOL = 1e-7


def max_norm(M):
    """Max absolute entry (0 for empty arrays)."""
    M = np.asarray(M)
    return float(np.max(np.abs(M))) if M.size else 0.0


def normalized_residual(lhs, rhs):
    """||lhs - rhs|| / max(1, ||lhs||, ||rhs||) in the max-entry norm."""
    return max_norm(np.asarray(lhs) - np.asarray(rhs)) / max(1.0, max_norm(lhs), max_norm(rhs))


@dataclass(frozen=True)
class JointSpectralSplit:
    """Simultaneous generalized eigenspaces of a commuting family.

    ``projectors[k]`` is the spectral idempotent of block k and ``labels[k][j]`` the
    eigenvalue of the j-th family member on it.
    """

    projectors: tuple
    labels: tuple
    basis: np.ndarray

    def __len__(self):
        return len(self.projectors)

    def ranks(self):
        return [int(round(np.trace(P).real)) for P in self.projectors]


def commuting_check(family, tol=1e-9):
    """Largest pairwise commutator of a family, with pass/fail against tol."""
    family = [np.asarray(A, dtype=complex) for A in family]
    worst, pair = 0.0, None
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            c = max_norm(family[i] @ family[j] - family[j] @ family[i])
            if c > worst:
                worst, pair = c, (i, j)
    return {"max_norm": worst, "pair": pair, "pass": worst < tol}


def _clusters(values, tol):
    order = np.argsort(values.real + 1e-3 * values.imag)
    groups = []
    for idx in order:
        for g in groups:
            if np.min(np.abs(values[g] - values[idx])) < tol:
                g.append(idx)
                break
        else:
            groups.append([idx])
    # merge transitively connected groups
    merged = True
    while merged:
        merged = False
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                if np.min(np.abs(values[groups[a]][:, None] - values[groups[b]][None, :])) < tol:
                    groups[a].extend(groups.pop(b))
                    merged = True
                    break
            if merged:
                break
    return [np.array(sorted(g)) for g in groups]


def riesz_projector(M, center, radius, nodes=64):
    """(1/2 pi i) * contour integral of (z - M)^{-1} over a circle."""
    d = M.shape[0]
    eye = np.eye(d, dtype=complex)
    P = np.zeros((d, d), dtype=complex)
    for k in range(nodes):
        w = np.exp(2j * np.pi * (k + 0.5) / nodes)
        z = center + radius * w
        P += radius * w * np.linalg.inv(z * eye - M)
    return P / nodes


def joint_spectral_split(family, tol=CLUSTER_TOL, seed=0):
    """Decompose the space into joint generalized eigenspaces of a commuting family."""
    family = [np.asarray(A, dtype=complex) for A in family]
    if not family:
        raise InvalidArgument("empty family")
    d = family[0].shape[0]
    scale = max(1.0, max(max_norm(A) for A in family))
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            c = max_norm(family[i] @ family[j] - family[j] @ family[i])
            if c > tol * scale:
                raise CommutatorTooLarge(
                    f"family members {i} and {j} do not commute (norm {c:.3g})", pair=(i, j), norm=c)
    rng = np.random.default_rng(seed)
    weights = rng.normal(size=len(family)) + 1j * rng.normal(size=len(family))
    M = sum(w * A / max(1.0, max_norm(A)) for w, A in zip(weights, family))
    vals = np.linalg.eigvals(M)
    groups = _clusters(vals, tol * max(1.0, max_norm(M)))
    centers = [vals[g].mean() for g in groups]
    projectors = []
    if len(groups) == 1:
        projectors.append(np.eye(d, dtype=complex))
    else:
        for k, g in enumerate(groups):
            others = np.concatenate([vals[h] for m, h in enumerate(groups) if m != k])
            spread = np.max(np.abs(vals[g] - centers[k]))
            gap = np.min(np.abs(others - centers[k]))
            radius = spread + 0.5 * (gap - spread)
            projectors.append(riesz_projector(M, centers[k], radius))
    labels = []
    for P in projectors:
        tr = np.trace(P)
        labels.append(tuple(complex(np.trace(P @ A) / tr) for A in family))
    cols = []
    for P in projectors:
        u, s, _ = np.linalg.svd(P)
        r = int(round(np.trace(P).real))
        cols.append(u[:, :r])
    basis = np.concatenate(cols, axis=1) if cols else np.zeros((d, 0))
    return JointSpectralSplit(tuple(projectors), tuple(labels), basis)


def unipotent_log(M, tol=1e-10):
    """Logarithm of a unipotent matrix via the terminating Mercator series."""
    M = np.asarray(M, dtype=complex)
    d = M.shape[0]
    N = M - np.eye(d)
    Nd = np.linalg.matrix_power(N, d)
    if max_norm(Nd) >= tol * max(1.0, max_norm(M)) ** d:
        ev = np.linalg.eigvals(M)
        raise InvalidArgument(f"matrix is not unipotent (eigenvalues {np.round(ev, 6).tolist()})")
    out = np.zeros_like(N)
    power = np.eye(d, dtype=complex)
    for k in range(1, d):
        power = power @ N
        out += (-1) ** (k + 1) * power / k
    return out


def nilpotent_exp(N):
    """exp of a nilpotent matrix (terminating series)."""
    N = np.asarray(N, dtype=complex)
    d = N.shape[0]
    out = np.eye(d, dtype=complex)
    power = np.eye(d, dtype=complex)
    for k in range(1, d + 1):
        power = power @ N / k
        out += power
    return out
