"""Input validation helpers used by the library surface and the estimators."""

import numbers

import numpy as np
import scipy.sparse as sp


def check_vector(x, name="x", dim=None):
    """Coerce to a finite 1-D float64 array, optionally of fixed length."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("%s must be a 1-D vector, got shape %s" % (name, (x.shape,)))
    if dim is not None and x.shape[0] != dim:
        raise ValueError("%s must have length %d, got %d" % (name, dim, x.shape[0]))
    if not np.all(np.isfinite(x)):
        raise ValueError("%s contains non-finite entries" % name)
    return x


def check_matrix(A, name="A"):
    """Coerce to 2-D float64, dense ndarray or CSR. Rejects non-finite data."""
    if sp.issparse(A):
        A = A.tocsr().astype(np.float64, copy=False)
        if not np.all(np.isfinite(A.data)):
            raise ValueError("%s contains non-finite entries" % name)
        return A
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("%s must be 2-D, got shape %s" % (name, (A.shape,)))
    if not np.all(np.isfinite(A)):
        raise ValueError("%s contains non-finite entries" % name)
    return A


def check_X_y(X, y):
    """Validate a feature matrix / label vector pair of matching length."""
    X = check_matrix(X, "X")
    y = check_vector(y, "y")
    if X.shape[0] != y.shape[0]:
        raise ValueError(
            "X and y disagree on sample count: %d vs %d" % (X.shape[0], y.shape[0])
        )
    if X.shape[0] == 0:
        raise ValueError("X must contain at least one row")
    return X, y


def check_index_set(indices, n, name="index_set"):
    """Validate a nonempty integer index set into range(n)."""
    idx = np.asarray(indices)
    if idx.ndim != 1:
        idx = idx.ravel()
    if idx.size == 0:
        raise ValueError("%s is empty; the mean over it is undefined" % name)
    if not np.issubdtype(idx.dtype, np.integer):
        if np.issubdtype(idx.dtype, np.floating) and np.all(idx == idx.astype(np.int64)):
            idx = idx.astype(np.int64)
        else:
            raise ValueError("%s must contain integers" % name)
    if idx.min() < 0 or idx.max() >= n:
        raise IndexError(
            "%s out of range: values must lie in [0, %d)" % (name, n)
        )
    return idx.astype(np.int64, copy=False)


def check_interval(value, name, low, high, low_open=True, high_open=True):
    """Validate a scalar against an interval, open by default."""
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError("%s must be a finite real number, got %r" % (name, value))
    value = float(value)
    lo_ok = value > low if low_open else value >= low
    hi_ok = value < high if high_open else value <= high
    if not (lo_ok and hi_ok):
        lo_br = "(" if low_open else "["
        hi_br = ")" if high_open else "]"
        raise ValueError(
            "%s must lie in %s%g, %g%s, got %g" % (name, lo_br, low, high, hi_br, value)
        )
    return value


def as_generator(seed):
    """Accept an int seed or an existing numpy Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
