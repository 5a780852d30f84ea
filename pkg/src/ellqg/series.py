"""Truncated power series in one variable.

A series of length n is an array ``a`` with ``a[k]`` the coefficient of s**k.
Coefficients may be scalars (shape ``(n,)``) or matrices (shape ``(n, d, d)``).
"""

import math

import numpy as np


def mul(a, b, n=None):
    """Product of two scalar series, truncated to n terms."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if n is None:
        n = min(len(a), len(b))
    return np.convolve(a[:n], b[:n])[:n]


def inv(a, n=None):
    """Multiplicative inverse of a scalar series with a[0] != 0."""
    a = np.asarray(a, dtype=complex)
    if n is None:
        n = len(a)
    if a[0] == 0:
        raise ZeroDivisionError("series with vanishing constant term is not invertible")
    out = np.zeros(n, dtype=complex)
    out[0] = 1.0 / a[0]
    for k in range(1, n):
        m = min(k, len(a) - 1)
        out[k] = -np.dot(a[1:m + 1], out[k - 1::-1][:m]) / a[0]
    return out


def exp(a, n=None):
    """exp of a scalar series (the constant term is allowed)."""
    a = np.asarray(a, dtype=complex)
    if n is None:
        n = len(a)
    out = np.zeros(n, dtype=complex)
    out[0] = np.exp(a[0])
    # b' = a' b  =>  k b_k = sum_{j=1}^k j a_j b_{k-j}
    for k in range(1, n):
        m = min(k, len(a) - 1)
        j = np.arange(1, m + 1)
        out[k] = np.dot(j * a[1:m + 1], out[k - j]) / k
    return out


def power(a, k, n=None):
    """Integer power (k may be negative) of a scalar series."""
    a = np.asarray(a, dtype=complex)
    if n is None:
        n = len(a)
    base = a if k >= 0 else inv(a, n)
    out = np.zeros(n, dtype=complex)
    out[0] = 1.0
    for _ in range(abs(k)):
        out = mul(out, base, n)
    return out


def exp_linear(c, n):
    """Series of exp(c*s)."""
    k = np.arange(n)
    return np.array([c ** int(j) / math.factorial(int(j)) for j in k], dtype=complex)


def sin_shift(x0, c, n):
    """Series of sin(c*(x0 + s)) in s."""
    e = exp_linear(1j * c, n) * np.exp(1j * c * x0)
    f = exp_linear(-1j * c, n) * np.exp(-1j * c * x0)
    return (e - f) / 2j


def mat_mul(a, b, n=None):
    """Product of two matrix-valued series (shape (n, d, d))."""
    if n is None:
        n = min(len(a), len(b))
    d = a.shape[-1]
    out = np.zeros((n, d, d), dtype=complex)
    for k in range(n):
        for j in range(k + 1):
            out[k] += a[j] @ b[k - j]
    return out


def mat_scalar_mul(s, a, n=None):
    """Product of a scalar series s with a matrix series a."""
    s = np.asarray(s, dtype=complex)
    if n is None:
        n = min(len(s), len(a))
    d = a.shape[-1]
    out = np.zeros((n, d, d), dtype=complex)
    for k in range(n):
        for j in range(k + 1):
            out[k] += s[j] * a[k - j]
    return out


def mat_inv(a, n=None):
    """Inverse of a matrix series with invertible constant term."""
    if n is None:
        n = len(a)
    d = a.shape[-1]
    out = np.zeros((n, d, d), dtype=complex)
    a0inv = np.linalg.inv(a[0])
    out[0] = a0inv
    for k in range(1, n):
        acc = np.zeros((d, d), dtype=complex)
        for j in range(1, min(k, len(a) - 1) + 1):
            acc += a[j] @ out[k - j]
        out[k] = -a0inv @ acc
    return out


def taylor_shift(coeffs, x0):
    """Ascending coefficients of P(x0 + s) given ascending coefficients of P."""
    c = np.asarray(coeffs, dtype=complex)
    n = len(c)
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        for j in range(k + 1):
            out[j] += c[k] * math.comb(k, j) * x0 ** (k - j)
    return out
