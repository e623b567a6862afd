"""Finite-sum subsampling: batch estimators, sample-size formulas, accuracy
targets, and the adaptive batch rule used by the benchmark presets.

Sampling is uniform without replacement and resampled fresh every iteration
(per-iteration probability statements need fresh randomness even where a
single size formula covers all iterations).  All logarithms in the size
formulas are natural logs.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_generator

logger = logging.getLogger(__name__)

EXACT = "Exact"
SUB_HESSIAN_ONLY = "SubHessianOnly"
SUB_BOTH = "SubBoth"

COND2 = "Cond2"
COND3 = "Cond3"


@dataclass
class AccuracyTargets:
    """Per-iteration accuracy levels for gradient and Hessian estimates.

    delta_H must satisfy delta_H <= (1-zeta)*eps_H/4 for the drivers'
    guarantees to apply; validated by the solver config, not here.
    """

    delta_g: float
    delta_H: float


def floor_targets(eps, L_H, zeta, eta):
    """Uniform (iteration-independent) accuracy floors for batch sizing.

    delta_g = (1-zeta)/8 * min(3*L_H*eps / (65*(L_H+eta)), eps)
    delta_H = (1-zeta)/4 * sqrt(L_H*eps)

    These are the worst-case levels the adaptive conditions can demand
    under the coupling eps_H = sqrt(L_H*eps); sizing batches for them once
    is sufficient for every iteration.
    """
    if min(eps, L_H, eta) <= 0 or not (0 < zeta < 1):
        raise ValueError("need eps, L_H, eta > 0 and zeta in (0, 1)")
    delta_g = (1.0 - zeta) / 8.0 * min(3.0 * L_H * eps / (65.0 * (L_H + eta)), eps)
    delta_H = (1.0 - zeta) / 4.0 * math.sqrt(L_H * eps)
    return AccuracyTargets(delta_g=delta_g, delta_H=delta_H)


def grad_sample_size(K_g, delta_g, delta_bar):
    """ceil(16 K_g^2 / delta_g^2 * ln(1/delta_bar))."""
    if min(K_g, delta_g) <= 0 or not (0 < delta_bar < 1):
        raise ValueError("need K_g, delta_g > 0 and delta_bar in (0, 1)")
    return math.ceil(16.0 * K_g**2 / delta_g**2 * math.log(1.0 / delta_bar))


def hess_sample_size(K_H, delta_H, dim, delta_bar):
    """ceil(16 K_H^2 / delta_H^2 * ln(2 d / delta_bar))."""
    if min(K_H, delta_H) <= 0 or dim < 1 or not (0 < delta_bar < 1):
        raise ValueError("need K_H, delta_H > 0, dim >= 1, delta_bar in (0, 1)")
    return math.ceil(16.0 * K_H**2 / delta_H**2 * math.log(2.0 * dim / delta_bar))


def sample_indices(n, batch, rng):
    """Uniform sample without replacement of size `batch` from range(n).

    batch > n is clamped to n with a logged note; batch = n returns the
    full index set (in order, so exact evaluation stays canonical).
    """
    if batch < 1:
        raise ValueError("batch must be >= 1")
    if batch > n:
        logger.info("requested batch %d exceeds n=%d; clamped", batch, n)
        batch = n
    if batch == n:
        return np.arange(n, dtype=np.int64)
    rng = as_generator(rng)
    return rng.choice(n, size=batch, replace=False).astype(np.int64)


def adapt_grad_batch(prev_batch, g_norm_now, g_norm_prev, n_total=None, floor=32):
    """Adaptive gradient batch: shrink when the gradient norm grew by the
    factor 1.2, grow when it shrank by the same factor, else keep.

    Ceiling rounding on both moves keeps sizes integral; the result is
    clamped to [min(floor, n_total), n_total].
    """
    if prev_batch < 1:
        raise ValueError("prev_batch must be >= 1")
    if g_norm_now <= 0 or g_norm_prev <= 0:
        raise ValueError("gradient norms must be positive")
    ratio = g_norm_now / g_norm_prev
    if ratio >= 1.2:
        batch = math.ceil(prev_batch / 1.2)
    elif ratio <= 1.0 / 1.2:
        batch = math.ceil(prev_batch * 1.2)
    else:
        batch = prev_batch
    if n_total is not None:
        batch = min(batch, n_total)
        batch = max(batch, min(floor, n_total))
    else:
        batch = max(batch, floor)
    return batch


def verify_condition(delta_g_used, delta_H_used, context, which=COND2):
    """Retrospective check of the gradient/Hessian accuracy conditions.

    delta_g_used / delta_H_used are the measured true errors
    ||g_k - grad f(x_k)|| and ||H_k - hess f(x_k)|| (audit mode computes
    them exactly).  `context` supplies eps_g, eps_H, zeta, eta, L_H,
    norm_d, norm_g, norm_g_next.  norm_g_next is available only after the
    step, which is why this check is retrospective by nature.

    Cond2:  delta_g <= (1-zeta)/8 * max(eps_g, min(eps_H*||d||, ||g_k||,
            ||g_{k+1}||)),  delta_H <= (1-zeta)/4 * eps_H.
    Cond3:  same delta_H; the delta_g bound additionally capped by
            3*eps_H^2 / (65*(L_H+eta)).
    """
    zeta = context["zeta"]
    eps_g = context["eps_g"]
    eps_H = context["eps_H"]
    adaptive = max(
        eps_g,
        min(eps_H * context["norm_d"], context["norm_g"], context["norm_g_next"]),
    )
    if which == COND2:
        g_bound = (1.0 - zeta) / 8.0 * adaptive
    elif which == COND3:
        cap = 3.0 * eps_H**2 / (65.0 * (context["L_H"] + context["eta"]))
        g_bound = (1.0 - zeta) / 8.0 * min(cap, adaptive)
    else:
        raise ValueError("which must be %r or %r" % (COND2, COND3))
    H_bound = (1.0 - zeta) / 4.0 * eps_H
    return delta_g_used <= g_bound and delta_H_used <= H_bound


@dataclass
class SamplingPolicy:
    """How each iteration's gradient/Hessian/function batches are drawn.

    mode : EXACT, SUB_HESSIAN_ONLY, or SUB_BOTH.
    grad_batch / hess_batch : current sizes (ignored where the mode says
        exact).  grad_batch adapts by the 1.2 rule when `adaptive` is set.
    line_search_eval : "full" evaluates the line-search objective exactly;
        "batch" reuses the gradient sample (the heuristic sub-eval mode,
        outside the drivers' guarantees).
    targets : accuracy levels the batch sizes were derived for; the
        fixed-step driver feeds them into its step formulas.  Zero for
        exact modes.
    delta_bar : per-iteration failure probability the concentration
        sizing was computed for; recorded for reporting.
    """

    mode: str = EXACT
    grad_batch: int = 0
    hess_batch: int = 0
    adaptive: bool = False
    growth: float = 1.2
    min_batch: int = 32
    line_search_eval: str = "full"
    targets: AccuracyTargets = field(
        default_factory=lambda: AccuracyTargets(0.0, 0.0)
    )
    delta_bar: float = 0.1

    def __post_init__(self):
        if self.mode not in (EXACT, SUB_HESSIAN_ONLY, SUB_BOTH):
            raise ValueError("unknown sampling mode %r" % (self.mode,))
        if self.line_search_eval not in ("full", "batch"):
            raise ValueError("line_search_eval must be 'full' or 'batch'")
        if self.growth <= 1.0:
            raise ValueError("growth factor must exceed 1")

    def subsamples_gradient(self):
        return self.mode == SUB_BOTH

    def subsamples_hessian(self):
        return self.mode in (SUB_HESSIAN_ONLY, SUB_BOTH)

    def draw_grad_indices(self, n, rng):
        if not self.subsamples_gradient():
            return np.arange(n, dtype=np.int64)
        return sample_indices(n, min(max(self.grad_batch, 1), n), rng)

    def draw_hess_indices(self, n, rng):
        if not self.subsamples_hessian():
            return np.arange(n, dtype=np.int64)
        return sample_indices(n, min(max(self.hess_batch, 1), n), rng)

    def adapt(self, g_norm_now, g_norm_prev, n):
        if not (self.adaptive and self.subsamples_gradient()):
            return self.grad_batch
        self.grad_batch = adapt_grad_batch(
            self.grad_batch, g_norm_now, g_norm_prev, n_total=n, floor=self.min_batch
        )
        return self.grad_batch
