"""Potential function, log-step inequality, analytic-center initialization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iptr.barrier import (PotentialContext, analytic_center,
                          barrier_step_bound_check, potential_eval,
                          potential_grad, scaled_potential_grad)
from iptr.finite_diff import fd_gradient
from iptr.problems import builtin_fig2


def zero_oracle():
    from iptr.problems import Oracle
    return Oracle(eval=lambda x: 0.0, grad=lambda x: np.zeros_like(x))


class TestPotential:
    def test_zero_objective_at_ones(self):
        ctx = PotentialContext(0.3, zero_oracle())
        assert potential_eval(ctx, np.ones(5)) == 0.0

    def test_fig2_value_at_center(self):
        inst = builtin_fig2()
        ctx = PotentialContext(0.1, inst.oracle)
        x = np.ones(3) / 3.0
        expected = 40.0 / 36.0 + 0.3 * np.log(3.0)
        assert potential_eval(ctx, x) == pytest.approx(expected, rel=1e-12)

    def test_barrier_part_independent_of_objective(self):
        x = np.array([0.5, 1.5, 2.0])
        eps = 0.07
        c1 = PotentialContext(eps, zero_oracle())
        c2 = PotentialContext(eps, builtin_fig2().oracle)
        barrier1 = potential_eval(c1, x)
        barrier2 = potential_eval(c2, x) - builtin_fig2().oracle.eval(x)
        assert barrier1 == pytest.approx(barrier2, rel=1e-12)

    def test_scaled_grad_zero_objective(self):
        ctx = PotentialContext(0.25, zero_oracle())
        np.testing.assert_allclose(scaled_potential_grad(ctx, np.ones(4)),
                                   -0.25 * np.ones(4))

    def test_grad_matches_finite_differences(self):
        inst = builtin_fig2()
        ctx = PotentialContext(0.05, inst.oracle)
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.uniform(0.1, 1.0, 3)
            g = potential_grad(ctx, x)
            g_fd = fd_gradient(lambda y: potential_eval(ctx, y), x)
            assert np.linalg.norm(g - g_fd) <= 1e-5 * (1 + np.linalg.norm(g))

    def test_nonpositive_rejected(self):
        ctx = PotentialContext(0.1, zero_oracle())
        with pytest.raises(ValueError):
            potential_eval(ctx, np.array([1.0, 0.0]))

    def test_epsilon_range(self):
        with pytest.raises(ValueError):
            PotentialContext(0.0, zero_oracle())
        with pytest.raises(ValueError):
            PotentialContext(1.5, zero_oracle())


class TestStepBound:
    def test_zero_step(self):
        assert barrier_step_bound_check(np.ones(3), np.zeros(3), 0.5)

    def test_scalar_probes_both_signs(self):
        # the inward probe is the tight side of the inequality
        assert barrier_step_bound_check(np.ones(1), np.array([-0.3]), 0.3)
        assert barrier_step_bound_check(np.ones(1), np.array([0.3]), 0.3)

    def test_requires_small_step(self):
        with pytest.raises(ValueError):
            barrier_step_bound_check(np.ones(2), np.array([0.8, 0.8]), 0.9)

    @settings(max_examples=200, deadline=None)
    @given(
        n=st.integers(min_value=1, max_value=8),
        beta=st.floats(min_value=1e-3, max_value=0.97),
        seed=st.integers(min_value=0, max_value=2 ** 31),
    )
    def test_property_holds_for_all_trust_region_steps(self, n, beta, seed):
        rng = np.random.default_rng(seed)
        d = rng.standard_normal(n)
        d *= beta * rng.uniform(0.0, 1.0) / np.linalg.norm(d)
        x = rng.uniform(0.05, 10.0, n)
        assert barrier_step_bound_check(x, d, beta)


class TestAnalyticCenter:
    def test_simplex_center(self):
        for n in (2, 3, 7):
            res = analytic_center(np.ones((1, n)), np.array([1.0]),
                                  np.linspace(0.1, 0.9, n) / np.linspace(
                                      0.1, 0.9, n).sum(), tol=1e-7)
            np.testing.assert_allclose(res.x0, np.full(n, 1.0 / n), atol=1e-6)

    def test_symmetric_system_symmetric_center(self):
        # two disjoint pair-sums: center splits each pair evenly
        A = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]])
        b = np.array([1.0, 2.0])
        res = analytic_center(A, b, np.array([0.3, 0.7, 0.5, 1.5]), tol=1e-7)
        np.testing.assert_allclose(res.x0, [0.5, 0.5, 1.0, 1.0], atol=1e-6)

    def test_decrement_below_tolerance(self):
        rng = np.random.default_rng(3)
        A = rng.uniform(0.1, 1.0, (3, 8))
        x_start = rng.uniform(0.5, 1.5, 8)
        b = A @ x_start
        res = analytic_center(A, b, x_start, tol=1e-6)
        assert res.decrement <= 1e-6
        assert np.all(res.x0 > 0)
        assert np.linalg.norm(A @ res.x0 - b) <= 1e-8 * (1 + np.linalg.norm(b))
        assert res.c0 >= 0.0

    def test_slack_constant_certifies_barrier_gap(self):
        # c0 upper-bounds the barrier suboptimality of the returned point:
        # compare against the exact simplex center
        n = 5
        res = analytic_center(np.ones((1, n)), np.array([1.0]),
                              np.linspace(0.5, 1.5, n)
                              / np.linspace(0.5, 1.5, n).sum(), tol=1e-5)
        gap = -np.log(res.x0).sum() - (-np.log(np.full(n, 1.0 / n)).sum())
        assert -1e-10 <= gap <= res.c0 + 1e-12

    def test_infeasible_start_rejected(self):
        with pytest.raises(ValueError):
            analytic_center(np.ones((1, 3)), np.array([1.0]),
                            np.array([1.0, 1.0, 1.0]))
        with pytest.raises(ValueError):
            analytic_center(np.ones((1, 3)), np.array([1.0]),
                            np.array([0.5, 0.6, -0.1]))
