"""Capped conjugate gradient on the damped system (H + 2*eps*I) d = -g.

Classical CG instrumented to detect directions along which the curvature of
H is at most -eps.  Returns either an approximate solution of the damped
system (tag ``SOL``) or a sufficient-negative-curvature direction (tag
``NC``).  Every quantity the instrumentation needs beyond the single
matrix-vector product per iteration is recovered from stored iterates:

  Hbar y_j = r_j - g            (residual identity, y_0 = 0)
  H r_j    = beta_j H p_{j-1} - H p_j

so a run costs exactly ``iterations + 1`` operator applications.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_interval, check_vector
from .exceptions import ContractViolation

SOL = "SOL"
NC = "NC"

# Below this gradient norm the damped system is meaningless; drivers
# guarantee ||g|| >= eps_g before calling.
_MIN_GRAD_NORM = 1e-300


@dataclass
class CappedCGParams:
    """Inputs of the capped CG kernel.

    epsilon : damping parameter in (0, 1).
    zeta : relative accuracy for the SOL branch, in (0, 1).
    M_init : optional initial curvature bound (>= 0, defaults to 0); if the
        caller knows a bound U_H on ||H|| it should pass it here.
    max_iters_override : optional hard cap replacing min(dim, J).
    """

    epsilon: float
    zeta: float
    M_init: float = 0.0
    max_iters_override: Optional[int] = None

    def __post_init__(self):
        self.epsilon = check_interval(self.epsilon, "epsilon", 0.0, 1.0)
        self.zeta = check_interval(self.zeta, "zeta", 0.0, 1.0)
        if self.M_init < 0 or not np.isfinite(self.M_init):
            raise ValueError("M_init must be finite and >= 0")


@dataclass
class CappedCGResult:
    d_type: str
    d: np.ndarray
    iterations: int
    M_final: float
    kappa: float
    zeta_hat: float
    tau: float
    T: float
    residual_norm: Optional[float] = None  # SOL only
    nc_source: Optional[str] = None  # "p0", "y", "p", "slow_decay"
    extraction_index: Optional[int] = None  # slow-decay branch only
    diagnostics: dict = field(default_factory=dict)


def _derived(M, epsilon, zeta):
    """kappa, zeta_hat, tau, T from the current curvature bound.

    tau is needed by T, so it is computed first.  1 - sqrt(1 - tau) is
    evaluated as tau / (1 + sqrt(1 - tau)) to avoid cancellation when kappa
    is large.
    """
    kappa = (M + 2.0 * epsilon) / epsilon
    zeta_hat = zeta / (3.0 * kappa)
    tau = 1.0 / (math.sqrt(kappa) + 1.0)
    gap = tau / (1.0 + math.sqrt(1.0 - tau))
    T = 4.0 * kappa**4 / gap**2
    return kappa, zeta_hat, tau, T


def j_cap(M, epsilon, zeta):
    """Smallest integer J with sqrt(T) * (1-tau)^(J/2) <= zeta_hat.

    Dimension-independent; callers clamp at the problem dimension.  Solved
    in closed form with logarithms, then nudged so the two-sided property
    (J satisfies the inequality, J-1 does not) holds in floating point.
    """
    if M < 0 or not np.isfinite(M):
        raise ValueError("M must be finite and >= 0")
    epsilon = check_interval(epsilon, "epsilon", 0.0, 1.0)
    zeta = check_interval(zeta, "zeta", 0.0, 1.0)
    kappa, zeta_hat, tau, T = _derived(M, epsilon, zeta)
    log_decay = math.log1p(-tau)  # < 0
    target = math.log(zeta_hat) - 0.5 * math.log(T)  # < 0
    J = max(1, math.ceil(2.0 * target / log_decay))
    while J > 1 and math.sqrt(T) * (1.0 - tau) ** ((J - 1) / 2.0) <= zeta_hat:
        J -= 1
    while math.sqrt(T) * (1.0 - tau) ** (J / 2.0) > zeta_hat:
        J += 1
    return J


def _safe_ratio(Hw, w):
    nw = np.linalg.norm(w)
    if nw == 0.0:
        return 0.0
    return np.linalg.norm(Hw) / nw


def extract_accumulated_nc(ys, rs, y_next, r_next, epsilon):
    """Scan accumulated iterates for a negative-curvature difference.

    Uses the residual identity Hbar*y_j = r_j - r_0 + Hbar*y_0 (y_0 = 0), so
    the damped quadratic form over differences needs no operator products:
    Hbar*(y_next - y_i) = r_next - r_i.  Returns (i, d, quotient) for the
    first i whose normalized form is at most epsilon, else None.  Scanning
    from i = 0 upward makes the choice deterministic.
    """
    for i in range(len(ys)):
        diff = y_next - ys[i]
        nd2 = diff @ diff
        if nd2 == 0.0:
            continue
        quotient = diff @ (r_next - rs[i]) / nd2
        if quotient <= epsilon:
            return i, diff, quotient
    return None


def capped_cg(H, g, params, trace=None):
    """Run capped CG; returns a :class:`CappedCGResult`.

    H : HessianOperator-like object with `dim` and `apply(v)`.
    g : right-hand-side gradient, nonzero.
    trace : optional callable receiving one dict per event (per-iteration
        residual norms, termination branch); used for diagnostics only.

    Raises ValueError for g = 0 and ContractViolation if no termination
    branch fires within the proven cap (inconsistent operator) or the
    operator produces non-finite output.
    """
    g = check_vector(g, "g", H.dim)
    norm_g = np.linalg.norm(g)
    if norm_g < _MIN_GRAD_NORM:
        raise ValueError("capped_cg requires a nonzero gradient")

    eps = params.epsilon
    M = float(params.M_init)
    kappa, zeta_hat, tau, T = _derived(M, eps, params.zeta)
    dim = H.dim

    def emit(event, **kw):
        if trace is not None:
            kw["event"] = event
            trace(kw)

    y = np.zeros(dim)
    r = g.copy()
    p = -g
    Hp = H.apply(p)
    if not np.all(np.isfinite(Hp)):
        raise ContractViolation("operator returned non-finite values")

    p_bar_p = p @ Hp + 2.0 * eps * (p @ p)
    if p_bar_p < eps * (p @ p):
        emit("terminate", j=0, branch="nc_p0")
        return CappedCGResult(
            d_type=NC, d=p, iterations=0, M_final=M, kappa=kappa,
            zeta_hat=zeta_hat, tau=tau, T=T, nc_source="p0",
        )
    ratio0 = _safe_ratio(Hp, p)
    if ratio0 > M:
        M = ratio0
        kappa, zeta_hat, tau, T = _derived(M, eps, params.zeta)

    ys = [y.copy()]
    rs = [r.copy()]
    norm_r0 = norm_g
    j = 0

    while True:
        alpha = (r @ r) / p_bar_p
        y = y + alpha * p
        Hbar_p = Hp + 2.0 * eps * p
        r_new = r + alpha * Hbar_p
        beta = (r_new @ r_new) / (r @ r)
        p_new = -r_new + beta * p
        Hp_prev, r, p = Hp, r_new, p_new
        j += 1
        ys.append(y.copy())
        rs.append(r.copy())

        Hp = H.apply(p)
        if not np.all(np.isfinite(Hp)):
            raise ContractViolation("operator returned non-finite values")
        # Curvature-bound update from the three directions at hand; Hy and
        # Hr come from stored quantities, not extra products.
        Hy = r - g - 2.0 * eps * y
        Hr = beta * Hp_prev - Hp
        observed = max(_safe_ratio(Hp, p), _safe_ratio(Hy, y), _safe_ratio(Hr, r))
        if observed > M:
            M = observed
            kappa, zeta_hat, tau, T = _derived(M, eps, params.zeta)

        norm_r = np.linalg.norm(r)
        emit("iter", j=j, r_norm=norm_r, y=y.copy(), r=r.copy(), M=M)

        y_bar_y = y @ Hy + 2.0 * eps * (y @ y)
        p_bar_p = p @ Hp + 2.0 * eps * (p @ p)

        if y_bar_y <= eps * (y @ y):
            emit("terminate", j=j, branch="nc_y")
            return CappedCGResult(
                d_type=NC, d=y, iterations=j, M_final=M, kappa=kappa,
                zeta_hat=zeta_hat, tau=tau, T=T, nc_source="y",
            )
        if norm_r <= zeta_hat * norm_r0:
            emit("terminate", j=j, branch="sol")
            return CappedCGResult(
                d_type=SOL, d=y, iterations=j, M_final=M, kappa=kappa,
                zeta_hat=zeta_hat, tau=tau, T=T, residual_norm=norm_r,
            )
        if p_bar_p <= eps * (p @ p):
            emit("terminate", j=j, branch="nc_p")
            return CappedCGResult(
                d_type=NC, d=p, iterations=j, M_final=M, kappa=kappa,
                zeta_hat=zeta_hat, tau=tau, T=T, nc_source="p",
            )
        if norm_r >= math.sqrt(T) * (1.0 - tau) ** (j / 2.0) * norm_r0:
            # Residual decays slower than positive-definite CG allows: a
            # negative-curvature direction hides among the accumulated
            # iterates.  Take one more CG step, then scan for it.
            alpha = (r @ r) / p_bar_p
            y_next = y + alpha * p
            r_next = r + alpha * (Hp + 2.0 * eps * p)
            found = extract_accumulated_nc(ys[:j], rs[:j], y_next, r_next, eps)
            if found is None:
                raise ContractViolation(
                    "slow residual decay detected but no accumulated "
                    "direction has curvature <= eps; operator is likely "
                    "inconsistent",
                    detail={"j": j, "M": M},
                )
            idx_found, d, quotient = found
            emit("terminate", j=j, branch="nc_slow_decay", i=idx_found,
                 quotient=quotient)
            return CappedCGResult(
                d_type=NC, d=d, iterations=j, M_final=M, kappa=kappa,
                zeta_hat=zeta_hat, tau=tau, T=T, nc_source="slow_decay",
                extraction_index=idx_found,
            )

        cap = min(dim, j_cap(M, eps, params.zeta))
        if params.max_iters_override is not None:
            cap = min(cap, params.max_iters_override)
        if j >= cap:
            raise ContractViolation(
                "capped CG exceeded its iteration cap without any "
                "termination test firing",
                detail={"j": j, "cap": cap, "M": M},
            )
