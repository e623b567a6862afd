"""Objective oracles, implicit Hessian operators, and oracle-call accounting.

The cost model is the propagation count used throughout the benchmark
drivers: one unit per component function value, two per component gradient,
four per component Hessian-vector product.  All counting happens here, so
drivers cannot miscount; see :class:`OracleLedger`.

Concurrency: oracles are immutable after construction and safe to evaluate
from several threads, but each ledger assumes a single writer.  The drivers
in :mod:`ntcg.solver` run on one logical thread, which satisfies that
contract.
"""

import numpy as np

from ._validation import check_index_set, check_vector


class OracleLedger:
    """Counters for component-level oracle calls.

    `props` is derived, never stored: props = f_calls + 2*grad_calls +
    4*hv_calls.  Counters are plain Python ints (arbitrary precision, so
    64-bit-safe by construction).
    """

    __slots__ = ("f_calls", "grad_calls", "hv_calls")

    def __init__(self):
        self.f_calls = 0
        self.grad_calls = 0
        self.hv_calls = 0

    @property
    def props(self):
        return self.f_calls + 2 * self.grad_calls + 4 * self.hv_calls

    def snapshot(self):
        return {
            "f_calls": self.f_calls,
            "grad_calls": self.grad_calls,
            "hv_calls": self.hv_calls,
            "props": self.props,
        }

    def reset(self):
        self.f_calls = 0
        self.grad_calls = 0
        self.hv_calls = 0

    def __repr__(self):
        return "OracleLedger(f=%d, grad=%d, hv=%d, props=%d)" % (
            self.f_calls,
            self.grad_calls,
            self.hv_calls,
            self.props,
        )


class ObjectiveOracle:
    """Finite-sum objective with per-component value/gradient/Hessian-vector.

    Subclasses implement the uncounted batch primitives `_value`, `_grad`
    and `_hvp`, each taking an explicit index array and returning the MEAN
    over those components.  The public ``eval_*`` methods validate, count
    into the ledger, and apply the sum-mode scale.

    Parameters
    ----------
    n, dim : component count and parameter dimension.
    averaged : if True (default) the objective is (1/n) * sum_i f_i; if
        False it is the plain sum, in which case batch estimates are
        rescaled by n so they stay unbiased for the full objective.
    """

    def __init__(self, n, dim, averaged=True):
        if n < 1 or dim < 1:
            raise ValueError("need n >= 1 and dim >= 1")
        self.n = int(n)
        self.dim = int(dim)
        self.averaged = bool(averaged)
        self.ledger = OracleLedger()
        # Audit-mode evaluations (exact quantities used for reporting and
        # contract checks) are ledger-exempt and tallied separately.
        self.audit_ledger = OracleLedger()

    # -- batch primitives, uncounted, mean over `idx` ---------------------

    def _value(self, x, idx):
        raise NotImplementedError

    def _grad(self, x, idx):
        raise NotImplementedError

    def _hvp(self, x, v, idx):
        raise NotImplementedError

    # -- counted evaluation surface ---------------------------------------

    @property
    def _scale(self):
        return 1.0 if self.averaged else float(self.n)

    def full_index_set(self):
        return np.arange(self.n, dtype=np.int64)

    def eval_f(self, x, index_set, ledger=None):
        """Mean of f_i(x) over index_set (times n in sum mode)."""
        x = check_vector(x, "x", self.dim)
        idx = check_index_set(index_set, self.n)
        ledger = ledger if ledger is not None else self.ledger
        ledger.f_calls += idx.size
        return self._scale * float(self._value(x, idx))

    def eval_grad(self, x, index_set, ledger=None):
        x = check_vector(x, "x", self.dim)
        idx = check_index_set(index_set, self.n)
        ledger = ledger if ledger is not None else self.ledger
        ledger.grad_calls += idx.size
        return self._scale * self._grad(x, idx)

    def eval_hvp(self, x, v, index_set, ledger=None):
        x = check_vector(x, "x", self.dim)
        v = check_vector(v, "v", self.dim)
        idx = check_index_set(index_set, self.n)
        ledger = ledger if ledger is not None else self.ledger
        ledger.hv_calls += idx.size
        return self._scale * self._hvp(x, v, idx)

    # -- audit accessors: exact full-set quantities, ledger-exempt --------

    def audit_f(self, x):
        return self.eval_f(x, self.full_index_set(), ledger=self.audit_ledger)

    def audit_grad(self, x):
        return self.eval_grad(x, self.full_index_set(), ledger=self.audit_ledger)

    def dense_hessian(self, x, index_set=None):
        """Dense mean Hessian over index_set; for audits on small problems.

        Default assembles column by column from `_hvp`, uncounted.  Problem
        classes override with closed forms where cheap.
        """
        x = check_vector(x, "x", self.dim)
        idx = (
            self.full_index_set()
            if index_set is None
            else check_index_set(index_set, self.n)
        )
        H = np.empty((self.dim, self.dim))
        eye = np.eye(self.dim)
        for j in range(self.dim):
            H[:, j] = self._hvp(x, eye[j], idx)
        return self._scale * H


class CallableOracle(ObjectiveOracle):
    """Oracle built from per-component callables.

    `value_fn(x, i)`, `grad_fn(x, i)`, `hvp_fn(x, v, i)` evaluate a single
    component; batches loop.  Convenient for synthetic diagnostics where n
    is small; the NLS problems use vectorized subclasses instead.
    """

    def __init__(self, n, dim, value_fn, grad_fn, hvp_fn, averaged=True):
        super().__init__(n, dim, averaged=averaged)
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self._hvp_fn = hvp_fn

    def _value(self, x, idx):
        return sum(self._value_fn(x, int(i)) for i in idx) / idx.size

    def _grad(self, x, idx):
        g = np.zeros(self.dim)
        for i in idx:
            g += self._grad_fn(x, int(i))
        return g / idx.size

    def _hvp(self, x, v, idx):
        out = np.zeros(self.dim)
        for i in idx:
            out += self._hvp_fn(x, v, int(i))
        return out / idx.size


class HessianOperator:
    """Implicit symmetric linear map v -> Hv.

    Symmetry and determinism (for fixed state) are contracts on the wrapped
    callable, not enforced per call; the test suite checks them on every
    problem Hessian.  `n_applies` counts operator applications, which is
    what the iteration caps of the iterative kernels are stated in.
    """

    __slots__ = ("dim", "_apply", "n_applies")

    def __init__(self, dim, apply_fn):
        self.dim = int(dim)
        self._apply = apply_fn
        self.n_applies = 0

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        self.n_applies += 1
        out = np.asarray(self._apply(v), dtype=np.float64)
        if out.shape != (self.dim,):
            raise ValueError(
                "operator returned shape %s, expected (%d,)" % ((out.shape,), self.dim)
            )
        return out

    def __matmul__(self, v):
        return self.apply(v)

    @classmethod
    def from_matrix(cls, A):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("need a square matrix")
        return cls(A.shape[0], lambda v: A @ v)

    @classmethod
    def from_oracle(cls, oracle, x, index_set, ledger=None):
        """Subsampled (or exact) Hessian of `oracle` at the point x."""
        x = np.array(x, dtype=np.float64, copy=True)
        idx = np.asarray(index_set, dtype=np.int64)
        return cls(
            oracle.dim, lambda v: oracle.eval_hvp(x, v, idx, ledger=ledger)
        )
