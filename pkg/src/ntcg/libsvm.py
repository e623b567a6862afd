"""LIBSVM text format: line-oriented loader and writer.

Line grammar: ``label index:value index:value ...`` with 1-based, strictly
increasing feature indices.  The dimension is inferred as the largest index
seen; an empty feature list is a valid zero row.  Malformed lines are
reported with their 1-based line number.  Values are written with Python's
shortest round-trip float repr, so a write/read cycle is bit-exact.
"""

import numpy as np
import scipy.sparse as sp

from .exceptions import LibSVMFormatError


def load_libsvm(path, sparse=False, comment_char="#"):
    """Parse a LIBSVM file into (A, b).

    A : (n, d) float64 ndarray, or CSR when sparse=True.
    b : (n,) float64 labels, used as loaded (no remapping).
    """
    labels = []
    rows = []  # list of (indices, values), 0-based
    max_index = 0
    n_lines = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split(comment_char, 1)[0].strip()
            if not line:
                continue
            n_lines += 1
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError:
                raise LibSVMFormatError(
                    "label %r is not a number" % parts[0], lineno
                ) from None
            idxs = []
            vals = []
            prev = 0
            for token in parts[1:]:
                if ":" not in token:
                    raise LibSVMFormatError(
                        "feature %r lacks an index:value separator" % token, lineno
                    )
                idx_s, val_s = token.split(":", 1)
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise LibSVMFormatError(
                        "cannot parse feature %r" % token, lineno
                    ) from None
                if idx < 1:
                    raise LibSVMFormatError(
                        "feature index %d is not 1-based" % idx, lineno
                    )
                if idx <= prev:
                    raise LibSVMFormatError(
                        "feature indices must be strictly increasing "
                        "(%d after %d)" % (idx, prev),
                        lineno,
                    )
                prev = idx
                idxs.append(idx - 1)
                vals.append(val)
            labels.append(label)
            rows.append((idxs, vals))
            if prev > max_index:
                max_index = prev
    if n_lines == 0:
        raise LibSVMFormatError("file %r contains no data lines" % str(path))

    n, d = len(rows), max(max_index, 1)
    b = np.asarray(labels, dtype=np.float64)
    if sparse:
        indptr = np.zeros(n + 1, dtype=np.int64)
        for i, (idxs, _) in enumerate(rows):
            indptr[i + 1] = indptr[i] + len(idxs)
        indices = np.concatenate(
            [np.asarray(idxs, dtype=np.int64) for idxs, _ in rows]
        ) if indptr[-1] else np.zeros(0, dtype=np.int64)
        data = np.concatenate(
            [np.asarray(vals, dtype=np.float64) for _, vals in rows]
        ) if indptr[-1] else np.zeros(0)
        A = sp.csr_matrix((data, indices, indptr), shape=(n, d))
    else:
        A = np.zeros((n, d))
        for i, (idxs, vals) in enumerate(rows):
            A[i, idxs] = vals
    return A, b


def dump_libsvm(path, A, b):
    """Write (A, b) in LIBSVM format; zeros are omitted."""
    A_sp = sp.csr_matrix(A) if not sp.issparse(A) else A.tocsr()
    b = np.asarray(b, dtype=np.float64)
    if A_sp.shape[0] != b.shape[0]:
        raise ValueError("row/label count mismatch")
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(A_sp.shape[0]):
            start, end = A_sp.indptr[i], A_sp.indptr[i + 1]
            feats = " ".join(
                "%d:%s" % (j + 1, repr(float(v)))
                for j, v in zip(A_sp.indices[start:end], A_sp.data[start:end])
            )
            fh.write(repr(float(b[i])) + (" " + feats if feats else "") + "\n")
