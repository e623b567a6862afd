import numpy as np
import pytest
from helpers import central_diff_grad, central_diff_hvp, rel_err

from ntcg import CallableOracle, HessianOperator, OracleLedger, synthetic_nls


def quadratic_oracle(dim=4, n=1):
    return CallableOracle(
        n, dim,
        value_fn=lambda x, i: 0.5 * float(x @ x),
        grad_fn=lambda x, i: x.copy(),
        hvp_fn=lambda x, v, i: v.copy(),
    )


class TestLedger:
    def test_props_identity_after_interleaving(self):
        ledger = OracleLedger()
        rng = np.random.default_rng(0)
        f = g = h = 0
        for _ in range(300):
            kind = rng.integers(3)
            amount = int(rng.integers(1, 50))
            if kind == 0:
                ledger.f_calls += amount
                f += amount
            elif kind == 1:
                ledger.grad_calls += amount
                g += amount
            else:
                ledger.hv_calls += amount
                h += amount
            assert ledger.props == f + 2 * g + 4 * h

    def test_full_set_eval_counts_n(self):
        problem = synthetic_nls(100, 5, seed=1)
        problem.eval_f(np.zeros(5), problem.full_index_set())
        assert problem.ledger.f_calls == 100

    def test_grad_batch_props(self):
        problem = synthetic_nls(50, 5, seed=1)
        problem.eval_grad(np.zeros(5), np.arange(5))
        assert problem.ledger.props == 10

    def test_three_hvps_on_batch_of_two(self):
        problem = synthetic_nls(50, 5, seed=1)
        v = np.ones(5)
        for _ in range(3):
            problem.eval_hvp(np.zeros(5), v, np.array([3, 7]))
        assert problem.ledger.props == 24

    def test_audit_calls_do_not_pollute(self):
        problem = synthetic_nls(50, 5, seed=1)
        problem.audit_f(np.zeros(5))
        problem.audit_grad(np.zeros(5))
        assert problem.ledger.props == 0
        assert problem.audit_ledger.f_calls == 50
        assert problem.audit_ledger.grad_calls == 50


class TestEvaluation:
    def test_quadratic_zero(self):
        oracle = quadratic_oracle()
        assert oracle.eval_f(np.zeros(4), [0]) == 0.0

    def test_quadratic_grad_identity_hessian(self):
        oracle = quadratic_oracle()
        e1 = np.zeros(4)
        e1[0] = 1.0
        np.testing.assert_allclose(oracle.eval_grad(e1, [0]), e1)

    def test_quadratic_hvp_identity(self):
        oracle = quadratic_oracle()
        v = np.array([1.0, -2.0, 0.5, 3.0])
        np.testing.assert_allclose(oracle.eval_hvp(np.ones(4), v, [0]), v)

    def test_batch_mean_equals_per_component_mean(self):
        problem = synthetic_nls(40, 6, seed=2)
        x = np.random.default_rng(3).standard_normal(6)
        idx = np.array([1, 4, 9, 16, 25])
        batch = problem.eval_f(x, idx)
        singles = [problem.eval_f(x, [i]) for i in idx]
        assert abs(batch - np.mean(singles)) < 1e-12
        bg = problem.eval_grad(x, idx)
        sg = np.mean([problem.eval_grad(x, [i]) for i in idx], axis=0)
        np.testing.assert_allclose(bg, sg, atol=1e-12)

    def test_grad_matches_finite_differences(self):
        problem = synthetic_nls(30, 5, seed=4)
        rng = np.random.default_rng(5)
        x = rng.standard_normal(5)
        idx = problem.full_index_set()
        g = problem.eval_grad(x, idx)
        g_fd = central_diff_grad(lambda y: problem._value(y, idx), x)
        assert rel_err(g, g_fd) < 1e-6

    def test_hvp_matches_finite_differences(self):
        problem = synthetic_nls(30, 5, seed=6)
        rng = np.random.default_rng(7)
        x = rng.standard_normal(5)
        v = rng.standard_normal(5)
        idx = problem.full_index_set()
        hv = problem.eval_hvp(x, v, idx)
        hv_fd = central_diff_hvp(lambda y: problem._grad(y, idx), x, v)
        assert rel_err(hv, hv_fd) < 1e-5

    def test_sum_mode_scales_by_n(self):
        avg = synthetic_nls(20, 4, seed=8, averaged=True)
        total = synthetic_nls(20, 4, seed=8, averaged=False)
        x = np.ones(4)
        idx = avg.full_index_set()
        assert abs(total.eval_f(x, idx) - 20.0 * avg.eval_f(x, idx)) < 1e-10

    def test_empty_index_set_rejected(self):
        oracle = quadratic_oracle()
        with pytest.raises(ValueError):
            oracle.eval_f(np.zeros(4), [])
        with pytest.raises(ValueError):
            oracle.eval_grad(np.zeros(4), np.array([], dtype=int))
        with pytest.raises(ValueError):
            oracle.eval_hvp(np.zeros(4), np.ones(4), [])

    def test_out_of_range_index_rejected(self):
        problem = synthetic_nls(10, 3, seed=9)
        with pytest.raises(IndexError):
            problem.eval_f(np.zeros(3), [10])

    def test_nonfinite_x_rejected(self):
        oracle = quadratic_oracle()
        with pytest.raises(ValueError):
            oracle.eval_f(np.array([np.nan, 0, 0, 0]), [0])


class TestHessianOperator:
    @pytest.mark.parametrize("seed", range(5))
    def test_symmetry_on_problem_hessians(self, seed):
        problem = synthetic_nls(25, 6, seed=seed)
        rng = np.random.default_rng(seed + 100)
        x = rng.standard_normal(6)
        H = HessianOperator.from_oracle(problem, x, problem.full_index_set())
        u = rng.standard_normal(6)
        v = rng.standard_normal(6)
        Hu, Hv = H.apply(u), H.apply(v)
        norm_H = np.linalg.norm(problem.dense_hessian(x), 2)
        lhs = abs(u @ Hv - v @ Hu)
        assert lhs <= 1e-10 * np.linalg.norm(u) * np.linalg.norm(v) * max(norm_H, 1e-30)

    @pytest.mark.parametrize("seed", range(3))
    def test_linearity(self, seed):
        problem = synthetic_nls(25, 6, seed=seed)
        rng = np.random.default_rng(seed + 200)
        x = rng.standard_normal(6)
        H = HessianOperator.from_oracle(problem, x, problem.full_index_set())
        u = rng.standard_normal(6)
        v = rng.standard_normal(6)
        a, b = 2.5, -1.25
        np.testing.assert_allclose(
            H.apply(a * u + b * v), a * H.apply(u) + b * H.apply(v),
            rtol=1e-10, atol=1e-12,
        )

    def test_apply_counts(self):
        H = HessianOperator.from_matrix(np.eye(3))
        H.apply(np.ones(3))
        H.apply(np.ones(3))
        assert H.n_applies == 2

    def test_hv_call_accounting_through_operator(self):
        problem = synthetic_nls(40, 5, seed=11)
        H = HessianOperator.from_oracle(problem, np.zeros(5), np.arange(10))
        H.apply(np.ones(5))
        assert problem.ledger.hv_calls == 10
        assert problem.ledger.props == 40
