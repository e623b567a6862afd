"""Outer drivers: damped-Newton steps with negative-curvature exploitation.

Two variants share one control flow.  Per iteration, with gradient estimate
g_k and Hessian estimate H_k:

  * ||g_k|| >= eps_g: solve the damped system with capped CG.  A returned
    negative-curvature direction is rescaled so its norm equals its
    curvature magnitude; an approximate solution whose norm is at most
    eps_g/eps_H triggers the minimum-eigenvalue oracle, which either
    certifies approximate second-order optimality (terminate at x_k + d_k)
    or supplies a curvature direction to step along.  The small-step block
    can be skipped (`skip_small_step_block`), the practical mode used by
    the benchmark presets.
  * ||g_k|| < eps_g: the minimum-eigenvalue oracle either certifies
    (terminate at x_k) or supplies a curvature direction.

The LineSearch variant picks steps by backtracking on the cubic decrease
condition

    f(x + alpha d) < f(x) - (eta/6) |alpha|^3 ||d||^3,

bidirectionally (1, -1, theta, -theta, ...) for curvature directions, since
the sign of d^T grad f is unknown when the gradient is inexact.  The
FixedStep variant replaces the search with predefined step sizes that
provably satisfy the same decrease condition given accuracy levels
(delta_g, delta_H) on the estimates.

Audit mode recomputes exact quantities through a ledger-exempt channel and
enforces the per-step decrease floors, backtracking caps, and iteration
bounds, raising ContractViolation on any failure; outside audit mode,
violations are logged and the run terminates with a ContractViolation
status only when it cannot make progress at all.

The driver is a single logical thread: all randomness (batch draws and
oracle start vectors) flows from one seeded generator, so a (config,
policy, problem) triple determines the run exactly.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import as_generator, check_interval, check_vector
from .capped_cg import NC, SOL, CappedCGParams, capped_cg
from .exceptions import ContractViolation
from .meo import meo_lanczos
from .oracle import HessianOperator
from .sampling import (
    COND2,
    COND3,
    EXACT,
    SamplingPolicy,
    grad_sample_size,
    verify_condition,
)

logger = logging.getLogger(__name__)

LINE_SEARCH = "LineSearch"
FIXED_STEP = "FixedStep"

TERM_FIRST_ORDER_AND_CERTIFIED = "FirstOrderAndCertified"  # returned x_k + d_k
TERM_CERTIFIED_AT_CURRENT = "CertifiedAtCurrentPoint"  # returned x_k
TERM_MAX_ITERS = "MaxIters"
TERM_CONTRACT_VIOLATION = "ContractViolation"

THETA_TILDE_LOW = (2.0 - math.sqrt(3.0)) ** 2  # ~0.0718


@dataclass
class SolverConfig:
    """Driver parameters.

    eps_H defaults to sqrt(L_H * eps_g) when left None (the coupling under
    which the iteration bounds are stated), falling back to sqrt(eps_g)
    for problems that declare L_H = 0.  U_H and L_H default to the problem
    constants at run time.
    """

    eps_g: float = 1e-3
    eps_H: Optional[float] = None
    theta: float = 0.5
    eta: float = 0.1
    zeta: float = 0.5
    delta: float = 0.05
    theta_tilde: float = 0.9
    U_H: Optional[float] = None
    L_H: Optional[float] = None
    max_outer_iters: int = 10_000
    max_ls_trials: int = 60
    skip_small_step_block: bool = False
    seed: int = 0
    # FixedStep overrides replacing the derived formulas (benchmark preset).
    alpha_sol_fixed: Optional[float] = None
    alpha_nc_fixed: Optional[float] = None
    # Optional audit feature: redo an iteration with a better gradient
    # batch when the retrospective accuracy condition failed.
    retry_condition_failure: bool = False
    max_condition_retries: int = 10

    def __post_init__(self):
        check_interval(self.eps_g, "eps_g", 0.0, 1.0)
        if self.eps_H is not None:
            check_interval(self.eps_H, "eps_H", 0.0, 1.0)
        check_interval(self.theta, "theta", 0.0, 1.0)
        check_interval(self.eta, "eta", 0.0, math.inf)
        check_interval(self.delta, "delta", 0.0, 1.0)
        check_interval(self.theta_tilde, "theta_tilde", THETA_TILDE_LOW, 1.0)
        if self.max_outer_iters < 1 or self.max_ls_trials < 1:
            raise ValueError("iteration budgets must be positive")


@dataclass
class IterationRecord:
    """One row of a run trace.

    f_value is the objective at the iterate the iteration started from:
    exact whenever the driver evaluated it exactly, otherwise recomputed
    through the ledger-exempt audit channel so convergence curves stay
    comparable across variants.  step_class follows the K1..K5 taxonomy:
    K1 small gradient, K2/K3 accepted Newton steps split on whether the
    next gradient estimate fell below eps_g, K4 small Newton step, K5
    curvature step.  The K2/K3 split for the final record of a run that
    hit the iteration cap falls back to the exact final gradient norm.
    """

    k: int
    f_value: float
    grad_est_norm: float
    d_type: Optional[str]
    step_class: Optional[str]
    alpha: Optional[float]
    ls_trials: int
    cg_iters: int
    meo_iters: int
    f_calls: int
    grad_calls: int
    hv_calls: int
    props: int
    grad_true_norm: Optional[float] = None
    nc_origin: Optional[str] = None  # "cg" or "meo"
    decrease: Optional[float] = None  # exact f drop, audit runs only


@dataclass
class RunReport:
    records: list
    termination: str
    x_final: np.ndarray
    final_f: float
    final_true_grad_norm: float
    config_resolved: dict
    ledger: dict
    audit_ledger: dict
    audit: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.records)


# -- direction scaling -------------------------------------------------------


def _sgn(value):
    # sgn(0) := +1 keeps d^T g <= 0 after scaling.
    return 1.0 if value >= 0 else -1.0


def scale_nc_direction(d_raw, H, g, curvature=None):
    """Rescale a raw curvature direction so its norm equals
    |d^T H d| / ||d||^2 and it points against the gradient estimate.

    The result satisfies d^T H d / ||d||^2 = -||d|| and d^T g <= 0.
    """
    d_raw = np.asarray(d_raw, dtype=np.float64)
    norm = np.linalg.norm(d_raw)
    if norm == 0.0:
        raise ValueError("cannot scale a zero direction")
    if curvature is None:
        curvature = float(d_raw @ H.apply(d_raw))
    sign = _sgn(float(d_raw @ g))
    return -sign * (abs(curvature) / norm**2) * (d_raw / norm)


def scale_meo_direction(v, H, g, curvature=None):
    """Scale a unit eigenvector estimate to length |v^T H v|, signed against
    the gradient estimate."""
    v = np.asarray(v, dtype=np.float64)
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise ValueError("v must be a unit vector")
    if curvature is None:
        curvature = float(v @ H.apply(v))
    sign = _sgn(float(v @ g))
    return -(sign * abs(curvature)) * v


# -- line searches ------------------------------------------------------------


def line_search_sol(f_eval, x, d, eta, theta, f0=None, max_trials=60):
    """Backtracking over theta^j; returns (alpha, trials).

    trials counts candidate evaluations beyond f(x).  Exceeding max_trials
    means the decrease condition is unreachable, which the theory rules out
    under the accuracy conditions, hence ContractViolation.
    """
    d = np.asarray(d, dtype=np.float64)
    norm_d3 = float(np.linalg.norm(d)) ** 3
    if norm_d3 == 0.0:
        raise ValueError("zero direction")
    if f0 is None:
        f0 = f_eval(x)
    for j in range(max_trials):
        alpha = theta**j
        if f_eval(x + alpha * d) < f0 - (eta / 6.0) * alpha**3 * norm_d3:
            return alpha, j + 1
    raise ContractViolation(
        "line search exhausted %d trials" % max_trials, detail={"kind": "sol"}
    )


def line_search_nc(f_eval, x, d, eta, theta, f0=None, max_trials=60):
    """Bidirectional backtracking over 1, -1, theta, -theta, theta^2, ...

    The decrease condition uses |alpha|; trials counts candidates.
    """
    d = np.asarray(d, dtype=np.float64)
    norm_d3 = float(np.linalg.norm(d)) ** 3
    if norm_d3 == 0.0:
        raise ValueError("zero direction")
    if f0 is None:
        f0 = f_eval(x)
    trials = 0
    j = 0
    while trials < max_trials:
        for alpha in (theta**j, -(theta**j)):
            trials += 1
            if f_eval(x + alpha * d) < f0 - (eta / 6.0) * abs(alpha) ** 3 * norm_d3:
                return alpha, trials
            if trials >= max_trials:
                break
        j += 1
    raise ContractViolation(
        "bidirectional line search exhausted %d trials" % max_trials,
        detail={"kind": "nc"},
    )


# -- fixed step sizes ----------------------------------------------------------


def fixed_step_sol(norm_d, eps_H, zeta, L_H, eta):
    """Predefined step for accepted Newton directions:
    sqrt(3(1-zeta) / (4(L_H+eta))) * sqrt(eps_H / ||d||).  At most 1
    whenever ||d|| >= eps_g/eps_H under the eps_H = sqrt(L_H eps_g)
    coupling."""
    if norm_d <= 0:
        raise ValueError("norm_d must be positive")
    return math.sqrt(3.0 * (1.0 - zeta) / (4.0 * (L_H + eta))) * math.sqrt(
        eps_H / norm_d
    )


def fixed_step_nc(norm_d, delta_H, delta_g, L_H, eta, theta_tilde):
    """Predefined step for curvature directions: theta_tilde times the
    larger root of the quadratic the cubic decrease condition reduces to.

    Satisfies alpha >= (3/4) * theta_tilde / (L_H + eta).  The discriminant
    is positive whenever delta_g respects its accuracy cap; a nonpositive
    one means that condition is broken.
    """
    if norm_d <= 0:
        raise ValueError("norm_d must be positive")
    check_interval(theta_tilde, "theta_tilde", THETA_TILDE_LOW, 1.0)
    z = (norm_d - delta_H) / 2.0
    disc = z * z - 4.0 * (L_H + eta) * delta_g / 6.0
    if disc <= 0.0 or z <= 0.0:
        raise ContractViolation(
            "fixed-step discriminant nonpositive; gradient accuracy "
            "condition is broken",
            detail={"norm_d": norm_d, "delta_H": delta_H, "delta_g": delta_g},
        )
    beta1 = (z + math.sqrt(disc)) / ((L_H + eta) * norm_d / 3.0)
    return theta_tilde * beta1


# -- decrease constants and iteration bounds -----------------------------------


def c_sol_constant(eta, theta, zeta, L_H):
    return (eta / 6.0) * min(
        (1.0 + 2.0 * L_H) ** -1.5,
        (3.0 * theta**2 * (1.0 - zeta) / (4.0 * (L_H + eta))) ** 1.5,
    )


def c_nc_constant(eta, theta, L_H):
    return (eta / 6.0) * min((3.0 * theta / (2.0 * (L_H + eta))) ** 3, 1.0)


def cbar_sol_constant(eta, zeta, L_H):
    return (eta / 6.0) * (3.0 * (1.0 - zeta) / (4.0 * L_H * (L_H + eta))) ** 1.5


def cbar_nc_constant(eta, theta_tilde, L_H):
    return (eta / 6.0) * (3.0 * theta_tilde / (4.0 * (L_H + eta))) ** 3


def j_sol_cap(theta, zeta, eps_H, U_g, L_H, eta):
    """Backtracking depth bound for accepted Newton directions."""
    arg = 3.0 * (1.0 - zeta) * eps_H**2 / (4.4 * U_g * (L_H + eta))
    return math.ceil(0.5 * math.log(arg) / math.log(theta))


def j_nc_cap(theta, L_H, eta):
    """Backtracking depth bound for curvature directions."""
    return math.ceil(math.log(3.0 / (2.0 * (L_H + eta))) / math.log(theta))


def iteration_bound_line_search(f0_minus_flow, L_H, c_sol, c_nc, eps):
    denom = min(
        c_sol / (64.0 * L_H**1.5), 8.0 * L_H**1.5 * c_sol, L_H**1.5 * c_nc / 8.0
    )
    return math.ceil(3.0 * f0_minus_flow / denom * eps**-1.5) + 5


def iteration_bound_fixed(f0_minus_flow, L_H, cbar_sol, cbar_nc, eps):
    denom = min(cbar_sol, cbar_nc / 8.0) * L_H**1.5
    return 2 * math.ceil(f0_minus_flow / denom * eps**-1.5) + 3


def iteration_bound(f0_minus_flow, L_H, constants, eps, variant=LINE_SEARCH):
    """Worst-case outer-iteration count for audit comparison.

    `constants` carries the decrease constants of the chosen variant:
    {"c_sol", "c_nc"} for LineSearch, {"cbar_sol", "cbar_nc"} for
    FixedStep.  Stated under the coupling eps_H = sqrt(L_H * eps).
    """
    if variant == LINE_SEARCH:
        return iteration_bound_line_search(
            f0_minus_flow, L_H, constants["c_sol"], constants["c_nc"], eps
        )
    if variant == FIXED_STEP:
        return iteration_bound_fixed(
            f0_minus_flow, L_H, constants["cbar_sol"], constants["cbar_nc"], eps
        )
    raise ValueError("unknown variant %r" % (variant,))


# -- the driver ----------------------------------------------------------------


def _resolve(config, constants):
    """Fill config holes from problem constants; returns an effective dict."""
    U_H = config.U_H if config.U_H is not None else getattr(constants, "U_H", None)
    if U_H is None or U_H <= 0:
        raise ValueError("a positive Hessian-norm bound U_H is required")
    L_H = config.L_H if config.L_H is not None else getattr(constants, "L_H", None)
    eps_H = config.eps_H
    if eps_H is None:
        if L_H is None:
            raise ValueError("eps_H or L_H must be provided")
        eps_H = math.sqrt(L_H * config.eps_g) if L_H > 0 else math.sqrt(config.eps_g)
    check_interval(eps_H, "eps_H", 0.0, 1.0)
    zeta = check_interval(config.zeta, "zeta", 0.0, min(1.0, U_H))
    return {
        "eps_g": config.eps_g,
        "eps_H": eps_H,
        "theta": config.theta,
        "eta": config.eta,
        "zeta": zeta,
        "delta": config.delta,
        "theta_tilde": config.theta_tilde,
        "U_H": float(U_H),
        "L_H": None if L_H is None else float(L_H),
        "U_g": getattr(constants, "U_g", None),
        "f_low": getattr(constants, "f_low", None),
    }


class _Audit:
    """Collects guarantee checks; raises on failure when enabled."""

    def __init__(self, enabled):
        self.enabled = enabled
        self.n_checks = 0
        self.violations = []
        self.condition_results = []

    def record(self, k, name, ok, lhs=None, rhs=None):
        self.n_checks += 1
        if not ok:
            entry = {"k": k, "check": name, "lhs": lhs, "rhs": rhs}
            self.violations.append(entry)
            message = "iteration %d: %s failed (%r vs %r)" % (k, name, lhs, rhs)
            if self.enabled:
                raise ContractViolation(message, detail=entry)
            logger.warning(message)

    def summary(self):
        return {
            "n_checks": self.n_checks,
            "violations": self.violations,
            "condition_results": self.condition_results,
        }


def run(problem, config, policy=None, variant=LINE_SEARCH, constants=None,
        x0=None, audit=False, trace=None):
    """Minimize `problem`; returns a :class:`RunReport`.

    problem : ObjectiveOracle (carries the call ledger).
    config : SolverConfig.
    policy : SamplingPolicy; defaults to exact evaluation.
    variant : LINE_SEARCH or FIXED_STEP.
    constants : ProblemConstants; defaults to problem.constants() or the
        NLS table formulas.
    x0 : start point, default zeros.
    audit : verify per-step floors and caps against exact ledger-exempt
        recomputation; any failure raises ContractViolation.
    trace : optional callable fed each IterationRecord as produced.
    """
    if variant not in (LINE_SEARCH, FIXED_STEP):
        raise ValueError("unknown variant %r" % (variant,))
    policy = policy if policy is not None else SamplingPolicy(mode=EXACT)
    if constants is None:
        from .problems import NLSProblem, constants_for

        if isinstance(problem, NLSProblem):
            constants = constants_for(problem)
        elif hasattr(problem, "constants"):
            constants = problem.constants()
        else:
            raise ValueError("problem constants are required")
    eff = _resolve(config, constants)
    no_overrides = config.alpha_sol_fixed is None and config.alpha_nc_fixed is None
    if variant == FIXED_STEP and eff["L_H"] is None and no_overrides:
        raise ValueError("FixedStep needs L_H or explicit step-size overrides")

    rng = as_generator(config.seed)
    auditor = _Audit(enabled=audit)
    exact_policy = not (policy.subsamples_gradient() or policy.subsamples_hessian())
    exact_line_f = policy.line_search_eval == "full"

    x = np.zeros(problem.dim) if x0 is None else check_vector(x0, "x0", problem.dim)
    n = problem.n
    full_idx = problem.full_index_set()
    eps_g, eps_H = eff["eps_g"], eff["eps_H"]
    small_step = eps_g / eps_H

    records = []
    termination = TERM_MAX_ITERS
    x_final = x
    prev_g_norm = None
    pending = None  # retrospective context from the previous iteration
    retries_left = config.max_condition_retries
    retry_point = None

    def resolve_pending(g_next_norm, exact_g_next_norm=None):
        """Close out checks of iteration k-1 that need ||g_{k+1}||."""
        nonlocal pending
        if pending is None:
            return
        ctx, pending = pending, None
        rec = ctx["record"]
        if rec.d_type == SOL and rec.step_class is None:
            rec.step_class = "K2" if g_next_norm < eps_g else "K3"
        cctx = ctx.get("condition_ctx")
        if cctx is not None:
            cctx["norm_g_next"] = g_next_norm
            which = COND3 if variant == FIXED_STEP else COND2
            ok = verify_condition(
                cctx["delta_g_used"], cctx["delta_H_used"], cctx, which=which
            )
            auditor.condition_results.append({"k": rec.k, "ok": bool(ok)})
        if ctx.get("sol_floor_const") is not None and exact_g_next_norm is not None:
            floor = ctx["sol_floor_const"] * max(
                0.0,
                min(
                    exact_g_next_norm**3 / (2.5 * eps_H) ** 3,
                    (2.5 * eps_H) ** 3,
                    eps_g**1.5,
                ),
            )
            auditor.record(
                rec.k, "sol_decrease_floor",
                ctx["decrease"] >= floor - 1e-12, ctx["decrease"], floor,
            )

    k = 0
    while k < config.max_outer_iters:
        grad_idx = policy.draw_grad_indices(n, rng)
        g = problem.eval_grad(x, grad_idx)
        g_norm = float(np.linalg.norm(g))

        exact_g_norm = None
        delta_g_used = None
        if audit:
            exact_g = problem.audit_grad(x)
            exact_g_norm = float(np.linalg.norm(exact_g))
            delta_g_used = float(np.linalg.norm(g - exact_g))

        # Retrospective accuracy condition of the previous iteration; the
        # optional audit feature redoes it with a better batch on failure.
        if (
            pending is not None
            and config.retry_condition_failure
            and pending.get("condition_ctx") is not None
            and retries_left > 0
        ):
            cctx = dict(pending["condition_ctx"])
            cctx["norm_g_next"] = g_norm
            which = COND3 if variant == FIXED_STEP else COND2
            if not verify_condition(
                cctx["delta_g_used"], cctx["delta_H_used"], cctx, which=which
            ):
                retries_left -= 1
                policy.targets.delta_g = max(policy.targets.delta_g / 2.0, 1e-300)
                if eff["U_g"] is not None and policy.targets.delta_g > 0:
                    policy.grad_batch = min(
                        n,
                        grad_sample_size(
                            eff["U_g"], policy.targets.delta_g, policy.delta_bar
                        ),
                    )
                else:
                    policy.grad_batch = min(n, max(
                        2 * policy.grad_batch, policy.min_batch))
                x = retry_point
                records.pop()
                pending = None
                continue
        resolve_pending(g_norm, exact_g_norm)
        retries_left = config.max_condition_retries

        hess_idx = policy.draw_hess_indices(n, rng)
        H = HessianOperator.from_oracle(problem, x, hess_idx)

        d = None
        d_type = None
        nc_origin = None
        cg_iters = 0
        meo_iters = 0
        terminate = None

        if g_norm >= eps_g:
            result = capped_cg(
                H, g,
                CappedCGParams(epsilon=eps_H, zeta=eff["zeta"], M_init=eff["U_H"]),
            )
            cg_iters = result.iterations
            if result.d_type == NC:
                d = scale_nc_direction(result.d, H, g)
                d_type, nc_origin = NC, "cg"
            else:
                d = result.d
                d_type = SOL
                if (
                    float(np.linalg.norm(d)) <= small_step
                    and not config.skip_small_step_block
                ):
                    meo = meo_lanczos(H, eff["U_H"], eps_H, eff["delta"], rng)
                    meo_iters = meo.iterations
                    if meo.is_certificate:
                        terminate = TERM_FIRST_ORDER_AND_CERTIFIED
                    else:
                        d = scale_meo_direction(meo.v, H, g, curvature=meo.lam)
                        d_type, nc_origin = NC, "meo"
        else:
            d_type = NC
            meo = meo_lanczos(H, eff["U_H"], eps_H, eff["delta"], rng)
            meo_iters = meo.iterations
            if meo.is_certificate:
                terminate = TERM_CERTIFIED_AT_CURRENT
            else:
                d = scale_meo_direction(meo.v, H, g, curvature=meo.lam)
                nc_origin = "meo"

        # f at x_k: the exact line-search evaluation doubles as the record
        # value; other paths report through the audit channel.
        stepping = terminate is None
        if stepping and variant == LINE_SEARCH and exact_line_f:
            f_here = problem.eval_f(x, full_idx)
            f_search = f_here
        elif stepping and variant == LINE_SEARCH:
            f_search = problem.eval_f(x, grad_idx)
            f_here = problem.audit_f(x)
        else:
            f_search = None
            f_here = problem.audit_f(x)

        alpha = None
        ls_trials = 0
        step_class = None
        x_next = None

        if terminate == TERM_FIRST_ORDER_AND_CERTIFIED:
            x_final = x + d
            alpha = 1.0
            step_class = "K4"
        elif terminate == TERM_CERTIFIED_AT_CURRENT:
            x_final = x
            step_class = "K1"
        else:
            norm_d = float(np.linalg.norm(d))
            if variant == LINE_SEARCH:
                if exact_line_f:
                    f_eval = lambda y: problem.eval_f(y, full_idx)
                else:
                    f_eval = lambda y: problem.eval_f(y, grad_idx)
                search = line_search_sol if d_type == SOL else line_search_nc
                try:
                    alpha, ls_trials = search(
                        f_eval, x, d, eff["eta"], eff["theta"],
                        f0=f_search, max_trials=config.max_ls_trials,
                    )
                except ContractViolation as exc:
                    if audit:
                        raise
                    logger.warning("stopping run: %s", exc)
                    terminate = TERM_CONTRACT_VIOLATION
                    x_final = x
            else:
                try:
                    if d_type == SOL:
                        alpha = (
                            config.alpha_sol_fixed
                            if config.alpha_sol_fixed is not None
                            else fixed_step_sol(
                                norm_d, eps_H, eff["zeta"], eff["L_H"], eff["eta"]
                            )
                        )
                    elif config.alpha_nc_fixed is not None:
                        alpha = config.alpha_nc_fixed
                    else:
                        alpha = fixed_step_nc(
                            norm_d,
                            policy.targets.delta_H,
                            policy.targets.delta_g,
                            eff["L_H"],
                            eff["eta"],
                            eff["theta_tilde"],
                        )
                except ContractViolation as exc:
                    if audit:
                        raise
                    logger.warning("stopping run: %s", exc)
                    terminate = TERM_CONTRACT_VIOLATION
                    x_final = x

            if terminate is None:
                x_next = x + alpha * d
                if g_norm < eps_g:
                    step_class = "K1"
                elif d_type == NC:
                    step_class = "K5"
                elif norm_d <= small_step:
                    step_class = "K4"  # reachable only with the block skipped
                # else SOL with a large step: K2/K3, resolved next iteration.

        snap = problem.ledger.snapshot()
        record = IterationRecord(
            k=k,
            f_value=f_here,
            grad_est_norm=g_norm,
            d_type=d_type,
            step_class=step_class,
            alpha=alpha,
            ls_trials=ls_trials,
            cg_iters=cg_iters,
            meo_iters=meo_iters,
            f_calls=snap["f_calls"],
            grad_calls=snap["grad_calls"],
            hv_calls=snap["hv_calls"],
            props=snap["props"],
            grad_true_norm=exact_g_norm,
            nc_origin=nc_origin,
        )

        if terminate is not None:
            records.append(record)
            if trace is not None:
                trace(record)
            termination = terminate
            break

        decrease = None
        if audit:
            f_next = problem.audit_f(x_next)
            decrease = f_here - f_next
            record.decrease = decrease
            L_H, eta, theta = eff["L_H"], eff["eta"], eff["theta"]
            guaranteed_step = exact_policy and (
                variant == LINE_SEARCH or no_overrides
            )
            if guaranteed_step and (variant == FIXED_STEP or exact_line_f):
                auditor.record(k, "monotone_decrease", decrease > 0.0, f_next, f_here)
            if guaranteed_step and d_type == NC and L_H is not None:
                if variant == LINE_SEARCH:
                    floor = c_nc_constant(eta, theta, L_H) * eps_H**3
                else:
                    floor = cbar_nc_constant(eta, eff["theta_tilde"], L_H) * eps_H**3
                if nc_origin == "meo":
                    floor /= 8.0
                auditor.record(k, "nc_decrease_floor", decrease >= floor - 1e-12,
                               decrease, floor)
            if (
                guaranteed_step
                and d_type == SOL
                and variant == FIXED_STEP
                and L_H is not None
                and float(np.linalg.norm(d)) >= small_step
            ):
                floor = cbar_sol_constant(eta, eff["zeta"], L_H) * eps_H**3
                auditor.record(k, "fixed_sol_decrease_floor",
                               decrease >= floor - 1e-12, decrease, floor)
            if exact_policy and variant == LINE_SEARCH and L_H is not None:
                if d_type == NC:
                    cap = j_nc_cap(theta, L_H, eta) + 1
                    j_used = math.ceil(ls_trials / 2) - 1
                    auditor.record(k, "nc_backtrack_cap", j_used <= cap, j_used, cap)
                elif eff["U_g"] is not None:
                    cap = j_sol_cap(theta, eff["zeta"], eps_H, eff["U_g"], L_H, eta) + 1
                    auditor.record(k, "sol_backtrack_cap", ls_trials - 1 <= cap,
                                   ls_trials - 1, cap)
            if d_type == NC:
                auditor.record(k, "nc_against_gradient", float(d @ g) <= 1e-12,
                               float(d @ g), 0.0)

        # Context for the retrospective pieces handled at k+1.
        condition_ctx = None
        if audit and not exact_policy:
            delta_H_used = 0.0
            if policy.subsamples_hessian() and problem.dim <= 64:
                H_err = problem.dense_hessian(x, hess_idx) - problem.dense_hessian(x)
                delta_H_used = float(np.linalg.norm(H_err, 2))
            condition_ctx = {
                "delta_g_used": delta_g_used,
                "delta_H_used": delta_H_used,
                "eps_g": eps_g,
                "eps_H": eps_H,
                "zeta": eff["zeta"],
                "eta": eff["eta"],
                "L_H": eff["L_H"],
                "norm_d": float(np.linalg.norm(d)),
                "norm_g": g_norm,
            }
        sol_floor_const = None
        if (
            audit
            and exact_policy
            and variant == LINE_SEARCH
            and exact_line_f
            and d_type == SOL
            and float(np.linalg.norm(d)) > small_step
            and eff["L_H"] is not None
        ):
            sol_floor_const = c_sol_constant(
                eff["eta"], eff["theta"], eff["zeta"], eff["L_H"]
            )
        pending = {
            "record": record,
            "condition_ctx": condition_ctx,
            "sol_floor_const": sol_floor_const,
            "decrease": decrease,
        }
        retry_point = x.copy()

        records.append(record)
        if trace is not None:
            trace(record)
        if prev_g_norm is not None and prev_g_norm > 0 and g_norm > 0:
            policy.adapt(g_norm, prev_g_norm, n)
        prev_g_norm = g_norm
        x = x_next
        x_final = x
        k += 1

    final_grad = problem.audit_grad(x_final)
    final_f = problem.audit_f(x_final)
    final_norm = float(np.linalg.norm(final_grad))
    resolve_pending(final_norm, final_norm if audit else None)

    report = RunReport(
        records=records,
        termination=termination,
        x_final=x_final,
        final_f=final_f,
        final_true_grad_norm=final_norm,
        config_resolved=eff,
        ledger=problem.ledger.snapshot(),
        audit_ledger=problem.audit_ledger.snapshot(),
        audit=auditor.summary(),
    )

    if (
        audit
        and exact_policy
        and records
        and eff["L_H"]
        and eff["f_low"] is not None
        and math.isfinite(eff["f_low"])
        and abs(eps_H - math.sqrt(eff["L_H"] * eps_g)) <= 1e-12 * max(1.0, eps_H)
    ):
        if variant == LINE_SEARCH:
            consts = {
                "c_sol": c_sol_constant(eff["eta"], eff["theta"], eff["zeta"], eff["L_H"]),
                "c_nc": c_nc_constant(eff["eta"], eff["theta"], eff["L_H"]),
            }
        else:
            consts = {
                "cbar_sol": cbar_sol_constant(eff["eta"], eff["zeta"], eff["L_H"]),
                "cbar_nc": cbar_nc_constant(eff["eta"], eff["theta_tilde"], eff["L_H"]),
            }
        bound = iteration_bound(
            records[0].f_value - eff["f_low"], eff["L_H"], consts, eps_g, variant
        )
        report.audit["iteration_bound"] = bound
        auditor.record(-1, "iteration_bound", len(records) <= bound,
                       len(records), bound)

    return report
