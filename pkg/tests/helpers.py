"""Shared independent oracles for the test suite.

Everything here is deliberately dumb: central finite differences, dense
factorizations, and eigendecompositions.  Tests compare the library's
fast paths against these, never against themselves.
"""

import numpy as np


def central_diff_grad(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def central_diff_hvp(grad, x, v, h=1e-5):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return (grad(x + h * v) - grad(x - h * v)) / (2.0 * h)


def random_symmetric(rng, dim, eig_low, eig_high):
    """Symmetric matrix with eigenvalues uniform in [eig_low, eig_high]."""
    vals = rng.uniform(eig_low, eig_high, size=dim)
    return symmetric_with_spectrum(rng, vals)


def symmetric_with_spectrum(rng, eigenvalues):
    vals = np.asarray(eigenvalues, dtype=float)
    dim = vals.size
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return (Q * vals) @ Q.T


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = max(np.linalg.norm(b), 1e-30)
    return np.linalg.norm(a - b) / denom
