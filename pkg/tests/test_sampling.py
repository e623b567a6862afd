import math

import numpy as np
import pytest
from scipy.stats import chisquare

from ntcg import (
    AccuracyTargets,
    SamplingPolicy,
    adapt_grad_batch,
    floor_targets,
    grad_sample_size,
    hess_sample_size,
    sample_indices,
    synthetic_nls,
    verify_condition,
)
from ntcg.sampling import COND2, COND3, EXACT, SUB_BOTH


class TestSampleSizes:
    def test_grad_size_arithmetic(self):
        assert grad_sample_size(1.0, 0.1, 0.1) == 3685  # ceil(1600 ln 10)

    def test_grad_size_inverse_square_scaling(self):
        big = grad_sample_size(1.0, 0.05, 0.1)
        small = grad_sample_size(1.0, 0.1, 0.1)
        assert abs(big - 4 * small) <= 4  # ceiling slack

    def test_hess_size_arithmetic(self):
        assert hess_sample_size(1.0, 0.1, 10, 0.1) == 8478  # ceil(1600 ln 200)

    def test_hess_size_dimension_term(self):
        a = hess_sample_size(1.0, 0.1, 10, 0.1)
        b = hess_sample_size(1.0, 0.1, 20, 0.1)
        assert abs((b - a) - 1600 * math.log(2.0)) <= 2

    def test_eps_scaling_of_sizes_at_floor_targets(self):
        # Gradient batches scale like eps^-2 and Hessian batches like
        # eps^-1 when sized for the uniform floors.
        zeta, L_H, eta, d, delta_bar = 0.5, 1.0, 1.0, 10, 0.1
        epss = [1e-1, 1e-2, 1e-3]
        gs, hs = [], []
        for eps in epss:
            t = floor_targets(eps, L_H, zeta, eta)
            gs.append(grad_sample_size(1.0, t.delta_g, delta_bar))
            hs.append(hess_sample_size(1.0, t.delta_H, d, delta_bar))
        slope_g = np.polyfit(np.log(epss), np.log(gs), 1)[0]
        slope_h = np.polyfit(np.log(epss), np.log(hs), 1)[0]
        assert abs(slope_g + 2.0) < 0.05
        assert abs(slope_h + 1.0) < 0.05

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            grad_sample_size(1.0, 0.1, 1.0)  # delta_bar = 1 is a boundary
        with pytest.raises(ValueError):
            hess_sample_size(1.0, 0.0, 10, 0.1)


class TestFloorTargets:
    def test_arithmetic_example(self):
        t = floor_targets(1e-2, 1.0, 0.5, 1.0)
        assert abs(t.delta_g - (1.0 / 16.0) * (3.0 / 13000.0)) < 1e-12
        assert abs(t.delta_H - 0.0125) < 1e-15

    def test_delta_h_scales_as_sqrt_eps(self):
        a = floor_targets(1e-2, 2.0, 0.5, 0.1).delta_H
        b = floor_targets(4e-2, 2.0, 0.5, 0.1).delta_H
        assert abs(b - 2.0 * a) < 1e-12

    def test_delta_g_never_exceeds_min_bound(self):
        for eps in (1e-1, 1e-3):
            for zeta in (0.1, 0.9):
                t = floor_targets(eps, 5.0, zeta, 0.1)
                assert t.delta_g <= (1.0 - zeta) * eps / 8.0 + 1e-18


class TestSampleIndices:
    def test_full_batch_is_identity_range(self):
        np.testing.assert_array_equal(sample_indices(7, 7, 0), np.arange(7))

    def test_fixed_seed_reproducible(self):
        a = sample_indices(100, 20, 42)
        b = sample_indices(100, 20, 42)
        np.testing.assert_array_equal(a, b)

    def test_without_replacement(self):
        idx = sample_indices(50, 30, 3)
        assert len(np.unique(idx)) == 30

    def test_oversized_batch_clamped(self):
        idx = sample_indices(10, 25, 0)
        np.testing.assert_array_equal(idx, np.arange(10))

    def test_uniform_inclusion_frequency(self):
        n, batch, draws = 40, 10, 10_000
        rng = np.random.default_rng(5)
        counts = np.zeros(n)
        for _ in range(draws):
            counts[sample_indices(n, batch, rng)] += 1
        expected = draws * batch / n
        _, p = chisquare(counts, expected)
        assert p > 1e-4  # sanity, not a sharp test

    def test_zero_batch_rejected(self):
        with pytest.raises(ValueError):
            sample_indices(10, 0, 0)


class TestAdaptGradBatch:
    def test_shrinks_on_gradient_growth(self):
        assert adapt_grad_batch(1000, 1.3, 1.0) == 834

    def test_grows_on_gradient_decay(self):
        assert adapt_grad_batch(1000, 0.5, 1.0) == 1200

    def test_dead_zone(self):
        assert adapt_grad_batch(1000, 1.0, 1.0) == 1000
        assert adapt_grad_batch(1000, 1.19, 1.0) == 1000

    def test_clamped_to_n_and_floor(self):
        assert adapt_grad_batch(1000, 0.1, 1.0, n_total=1100) == 1100
        assert adapt_grad_batch(33, 5.0, 1.0, n_total=1000, floor=32) == 32
        assert adapt_grad_batch(33, 5.0, 1.0, n_total=10, floor=32) == 10

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            adapt_grad_batch(0, 1.0, 1.0)
        with pytest.raises(ValueError):
            adapt_grad_batch(10, 0.0, 1.0)


class TestVerifyCondition:
    def context(self, **kw):
        ctx = {
            "eps_g": 1e-2,
            "eps_H": 0.1,
            "zeta": 0.5,
            "eta": 0.1,
            "L_H": 1.0,
            "norm_d": 1.0,
            "norm_g": 0.5,
            "norm_g_next": 0.5,
        }
        ctx.update(kw)
        return ctx

    def test_exact_oracles_always_pass(self):
        for which in (COND2, COND3):
            assert verify_condition(0.0, 0.0, self.context(), which=which)

    def test_hessian_boundary_inclusive(self):
        ctx = self.context()
        delta_H = (1.0 - ctx["zeta"]) / 4.0 * ctx["eps_H"]
        assert verify_condition(0.0, delta_H, ctx, which=COND2)
        assert not verify_condition(0.0, delta_H * 1.0001, ctx, which=COND2)

    def test_cond2_adaptive_term(self):
        ctx = self.context(norm_g=5.0, norm_g_next=5.0, norm_d=100.0)
        bound = (1.0 - 0.5) / 8.0 * max(1e-2, min(0.1 * 100.0, 5.0, 5.0))
        assert verify_condition(bound * 0.999, 0.0, ctx, which=COND2)
        assert not verify_condition(bound * 1.001, 0.0, ctx, which=COND2)

    def test_cond3_extra_cap(self):
        ctx = self.context(norm_g=50.0, norm_g_next=50.0, norm_d=1000.0)
        cap = 3.0 * 0.1**2 / (65.0 * 1.1)
        bound = (1.0 - 0.5) / 8.0 * cap  # cap binds for huge norms
        assert verify_condition(bound * 0.999, 0.0, ctx, which=COND3)
        assert not verify_condition(bound * 1.001, 0.0, ctx, which=COND3)

    def test_monte_carlo_pass_rate_at_prescribed_sizes(self):
        # Subsampled gradients at the prescribed size should satisfy their
        # target accuracy in at least 1 - delta_bar of draws (hugely
        # conservative bound; observed rates are ~1).
        problem = synthetic_nls(4000, 8, seed=13, row_norm=1.0)
        rng = np.random.default_rng(14)
        x = rng.standard_normal(8) * 0.5
        exact = problem._grad(x, problem.full_index_set())
        delta_g, delta_bar = 0.05, 0.1
        from ntcg.problems import constants_for

        K_g = constants_for(problem).K_g
        size = min(grad_sample_size(K_g, delta_g, delta_bar), problem.n)
        hits = 0
        trials = 200
        for _ in range(trials):
            idx = sample_indices(problem.n, size, rng)
            est = problem._grad(x, idx)
            hits += float(np.linalg.norm(est - exact) <= delta_g)
        rate = hits / trials
        assert rate >= 1.0 - delta_bar - 2 * math.sqrt(delta_bar * (1 - delta_bar) / trials)

    def test_unbiased_gradient_estimator(self):
        problem = synthetic_nls(500, 6, seed=15)
        rng = np.random.default_rng(16)
        x = rng.standard_normal(6) * 0.3
        exact = problem._grad(x, problem.full_index_set())
        acc = np.zeros(6)
        draws = 10_000
        for _ in range(draws):
            acc += problem._grad(x, sample_indices(problem.n, 25, rng))
        mc_err = np.linalg.norm(acc / draws - exact)
        assert mc_err < 5e-3  # ~4 sigma of the Monte Carlo error


class TestPolicy:
    def test_exact_policy_draws_full_sets(self):
        p = SamplingPolicy(mode=EXACT)
        np.testing.assert_array_equal(p.draw_grad_indices(9, 0), np.arange(9))
        np.testing.assert_array_equal(p.draw_hess_indices(9, 0), np.arange(9))

    def test_subboth_draws_batches(self):
        p = SamplingPolicy(mode=SUB_BOTH, grad_batch=5, hess_batch=3)
        assert len(p.draw_grad_indices(50, 1)) == 5
        assert len(p.draw_hess_indices(50, 1)) == 3

    def test_adapt_respects_floor(self):
        p = SamplingPolicy(mode=SUB_BOTH, grad_batch=40, hess_batch=3,
                           adaptive=True, min_batch=32)
        p.adapt(10.0, 1.0, 1000)
        assert p.grad_batch == 34  # ceil(40 / 1.2)
        for _ in range(10):
            p.adapt(10.0, 1.0, 1000)
        assert p.grad_batch == 32

    def test_invalid_mode_rejected(self):
        with pytest.raises(ValueError):
            SamplingPolicy(mode="Nope")

    def test_targets_default_zero(self):
        assert SamplingPolicy().targets == AccuracyTargets(0.0, 0.0)
