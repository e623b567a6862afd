"""Analytic test objectives.

Three nonlinear-least-squares families over rows (a_i, b_i):

  sigmoid / tanh :   f_i(x) = (b_i - phi(<a_i, x>))^2
  welsch         :   f_i(x) = phi(b_i - <a_i, x>),  phi(z) = (1 - e^{-a z^2})/a

plus synthetic diagnostics with known spectra (quadratic bowl, planted
strict saddle).  Gradients and Hessian-vector products are hand-derived
closed forms, so the oracle-call accounting is exact; there is no autodiff
anywhere.

Each problem exposes smoothness/boundedness constants computed from its
data: per-component gradient and Hessian bounds K_g / K_H, a Hessian-norm
bound U_H (= K_H), and a Hessian-Lipschitz bound L_H.  For the NLS rows
these are the standard per-row formulas maximized over the data:

  sigmoid: L_H = max 2(|b|+4)||a||^3, K_g = max (|b|+1)||a||/2,
           K_H = max (|b|+2)||a||^2
  tanh:    L_H as sigmoid, K_g = max 2(|b|+1)||a||, K_H = max (|b|+2)||a||^2
  welsch:  L_H = 9 a^{3/2} max ||a_i||^3, K_g = sqrt(2/a) max ||a_i||,
           K_H = 2 max ||a_i||^2
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from ._validation import check_matrix, check_vector
from .oracle import ObjectiveOracle

SIGMOID = "sigmoid"
TANH = "tanh"
WELSCH = "welsch"


@dataclass
class ProblemConstants:
    L_H: float
    K_g: float
    K_H: float
    U_H: float
    U_g: float
    f_low: float = 0.0


# -- link functions: value and first two derivatives ------------------------


def sigmoid_link(z):
    p = expit(z)
    d1 = p * (1.0 - p)
    d2 = d1 * (1.0 - 2.0 * p)
    return p, d1, d2


def tanh_link(z):
    t = np.tanh(z)
    d1 = 1.0 - t * t
    d2 = -2.0 * t * d1
    return t, d1, d2


def welsch_loss(z, alpha):
    e = np.exp(-alpha * z * z)
    value = (1.0 - e) / alpha
    d1 = 2.0 * z * e
    d2 = (2.0 - 4.0 * alpha * z * z) * e
    return value, d1, d2


def _row_norms(A):
    if sp.issparse(A):
        return np.sqrt(np.asarray(A.multiply(A).sum(axis=1)).ravel())
    return np.linalg.norm(A, axis=1)


class NLSProblem(ObjectiveOracle):
    """Finite-sum nonlinear least squares over rows (a_i, b_i).

    A may be a dense ndarray or a CSR matrix; evaluation over an index
    batch is vectorized either way.  Labels are used exactly as loaded
    (no remapping of {-1, 1} to {0, 1}); they enter the constants through
    |b_i| only.
    """

    def __init__(self, A, b, link=SIGMOID, alpha=1.0, averaged=True):
        A = check_matrix(A, "A")
        b = check_vector(b, "b")
        if A.shape[0] != b.shape[0]:
            raise ValueError("row/label count mismatch")
        if link not in (SIGMOID, TANH, WELSCH):
            raise ValueError("unknown link %r" % (link,))
        if link == WELSCH and alpha <= 0:
            raise ValueError("welsch alpha must be positive")
        super().__init__(A.shape[0], A.shape[1], averaged=averaged)
        self.A = A
        self.b = b
        self.link = link
        self.alpha = float(alpha)

    # -- chain-rule kernels -------------------------------------------------

    def _margins(self, x, idx):
        Ai = self.A[idx]
        return Ai, np.asarray(Ai @ x).ravel()

    def _grad_weights(self, x, idx):
        """w_i such that grad f_i = w_i * a_i."""
        Ai, z = self._margins(x, idx)
        if self.link == WELSCH:
            r = self.b[idx] - z
            _, d1, _ = welsch_loss(r, self.alpha)
            return Ai, -d1
        phi, d1, _ = (sigmoid_link if self.link == SIGMOID else tanh_link)(z)
        resid = self.b[idx] - phi
        return Ai, -2.0 * resid * d1

    def _curv_weights(self, x, idx):
        """c_i such that hess f_i = c_i * a_i a_i^T."""
        Ai, z = self._margins(x, idx)
        if self.link == WELSCH:
            r = self.b[idx] - z
            _, _, d2 = welsch_loss(r, self.alpha)
            return Ai, d2
        phi, d1, d2 = (sigmoid_link if self.link == SIGMOID else tanh_link)(z)
        resid = self.b[idx] - phi
        return Ai, 2.0 * (d1 * d1 - resid * d2)

    # -- oracle primitives (means over idx) ----------------------------------

    def _value(self, x, idx):
        _, z = self._margins(x, idx)
        if self.link == WELSCH:
            val, _, _ = welsch_loss(self.b[idx] - z, self.alpha)
            return float(np.mean(val))
        phi = expit(z) if self.link == SIGMOID else np.tanh(z)
        resid = self.b[idx] - phi
        return float(np.mean(resid * resid))

    def _grad(self, x, idx):
        Ai, w = self._grad_weights(x, idx)
        return np.asarray(Ai.T @ w).ravel() / idx.size

    def _hvp(self, x, v, idx):
        Ai, c = self._curv_weights(x, idx)
        t = np.asarray(Ai @ v).ravel()
        return np.asarray(Ai.T @ (c * t)).ravel() / idx.size

    def dense_hessian(self, x, index_set=None):
        idx = (
            self.full_index_set()
            if index_set is None
            else np.asarray(index_set, dtype=np.int64)
        )
        x = check_vector(x, "x", self.dim)
        Ai, c = self._curv_weights(x, idx)
        if sp.issparse(Ai):
            H = np.asarray((Ai.multiply(c[:, None])).T @ Ai.todense())
        else:
            H = (c[:, None] * Ai).T @ Ai
        return self._scale * np.asarray(H) / idx.size


def constants_for(problem):
    """Smoothness and boundedness constants from the problem data."""
    if not isinstance(problem, NLSProblem):
        raise TypeError("constants_for expects an NLSProblem")
    norms = _row_norms(problem.A)
    absb = np.abs(problem.b)
    if problem.link in (SIGMOID, TANH):
        L_H = float(np.max(2.0 * (absb + 4.0) * norms**3))
        K_H = float(np.max((absb + 2.0) * norms**2))
        if problem.link == SIGMOID:
            K_g = float(np.max((absb + 1.0) * norms / 2.0))
        else:
            K_g = float(np.max(2.0 * (absb + 1.0) * norms))
    else:
        a = problem.alpha
        max_norm = float(np.max(norms))
        L_H = 9.0 * a**1.5 * max_norm**3
        K_g = math.sqrt(2.0 / a) * max_norm
        K_H = 2.0 * max_norm**2
    # Squared residuals and the welsch loss are both nonnegative.
    return ProblemConstants(L_H=L_H, K_g=K_g, K_H=K_H, U_H=K_H, U_g=K_g, f_low=0.0)


# -- synthetic diagnostics ---------------------------------------------------


class QuadraticProblem(ObjectiveOracle):
    """f(x) = 0.5 x^T D x for a fixed diagonal D, as a single component."""

    def __init__(self, diag):
        diag = check_vector(np.asarray(diag, dtype=float), "diag")
        super().__init__(1, diag.shape[0])
        self.diag = diag

    def _value(self, x, idx):
        return 0.5 * float(x @ (self.diag * x))

    def _grad(self, x, idx):
        return self.diag * x

    def _hvp(self, x, v, idx):
        return self.diag * v

    def dense_hessian(self, x, index_set=None):
        return np.diag(self.diag)

    def constants(self, radius=10.0):
        top = float(np.max(np.abs(self.diag)))
        f_low = 0.0 if np.all(self.diag >= 0) else -math.inf
        return ProblemConstants(
            L_H=0.0, K_g=top * radius, K_H=top, U_H=top, U_g=top * radius,
            f_low=f_low,
        )


class SaddleProblem(ObjectiveOracle):
    """Strict saddle with a quartic bowl keeping it bounded below.

    f(x) = 0.5 x^T D x + (gamma/4) ||x||^4 with D = diag(-mu, 1, ..., 1).
    The origin is a stationary point with lambda_min(hess f) = -mu; the
    global minimum value is -mu^2 / (4 gamma).
    """

    def __init__(self, dim, mu=1.0, gamma=1.0):
        if dim < 2:
            raise ValueError("need dim >= 2")
        if mu <= 0 or gamma <= 0:
            raise ValueError("mu and gamma must be positive")
        super().__init__(1, dim)
        self.mu = float(mu)
        self.gamma = float(gamma)
        self.diag = np.ones(dim)
        self.diag[0] = -mu

    def _value(self, x, idx):
        return 0.5 * float(x @ (self.diag * x)) + 0.25 * self.gamma * float(
            (x @ x) ** 2
        )

    def _grad(self, x, idx):
        return self.diag * x + self.gamma * (x @ x) * x

    def _hvp(self, x, v, idx):
        return self.diag * v + self.gamma * ((x @ x) * v + 2.0 * (x @ v) * x)

    def dense_hessian(self, x, index_set=None):
        x = np.asarray(x, dtype=float)
        return (
            np.diag(self.diag)
            + self.gamma * ((x @ x) * np.eye(self.dim) + 2.0 * np.outer(x, x))
        )

    def constants(self, radius=None):
        """Constants valid on the ball ||x|| <= radius.

        The default radius covers the sublevel set of f(x0) for start
        points with ||x0|| <= 1, inflated so that line-search trial points
        x + alpha*d stay inside.
        """
        if radius is None:
            radius = self.default_radius()
        mu, gamma, R = self.mu, self.gamma, float(radius)
        return ProblemConstants(
            L_H=6.0 * gamma * R,
            K_g=max(self.mu, 1.0) * R + gamma * R**3,
            K_H=max(self.mu, 1.0) + 3.0 * gamma * R**2,
            U_H=max(self.mu, 1.0) + 3.0 * gamma * R**2,
            U_g=max(self.mu, 1.0) * R + gamma * R**3,
            f_low=-(mu**2) / (4.0 * gamma),
        )

    def default_radius(self):
        # f >= -mu/2 r^2 + gamma/4 r^4, so f <= f0 confines ||x|| to a
        # computable ball; inflate generously for trial points.
        f0 = 0.5 + 0.25 * self.gamma  # value bound for ||x0|| <= 1
        # solve gamma/4 r^4 - mu/2 r^2 - f0 = 0 for r^2
        disc = math.sqrt((self.mu / 2.0) ** 2 + self.gamma * f0)
        r2 = (self.mu / 2.0 + disc) / (self.gamma / 2.0)
        return 2.0 * math.sqrt(r2)


def synthetic_saddle(dim, mu=1.0, gamma=1.0):
    """Saddle fixture: returns (problem, constants) with documented bounds."""
    problem = SaddleProblem(dim, mu=mu, gamma=gamma)
    return problem, problem.constants()


def synthetic_nls(n, dim, link=SIGMOID, alpha=1.0, row_norm=1.0, seed=0,
                  averaged=True):
    """Random NLS instance with controlled row norms and binary labels.

    Rows are uniform on the sphere of radius `row_norm` scaled by a uniform
    factor in [0.5, 1]; labels follow a planted linear rule through the
    link, so the instance is learnable but not separable.
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, dim))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    A *= row_norm * rng.uniform(0.5, 1.0, size=(n, 1))
    x_star = rng.standard_normal(dim)
    x_star /= np.linalg.norm(x_star)
    z = A @ (3.0 * x_star)
    if link == SIGMOID:
        b = (expit(z) + 0.1 * rng.standard_normal(n) > 0.5).astype(float)
    elif link == TANH:
        b = np.sign(np.tanh(z) + 0.1 * rng.standard_normal(n))
        b[b == 0] = 1.0
    else:
        b = z + 0.1 * rng.standard_normal(n)
    return NLSProblem(A, b, link=link, alpha=alpha, averaged=averaged)
