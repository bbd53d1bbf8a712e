"""KKT certification: multipliers, residuals, projected curvature."""

import numpy as np
import pytest

from iptr.kkt import check_kkt1, check_kkt2
from iptr.linalg import nullspace_basis, symmetric_min_eig
from iptr.problems import (ObjectiveSpec, ProblemInstance,
                           RegularityConstants, builtin_fig2, gen_quartic)

SADDLE = np.array([0.5, 0.25, 0.25])
W = np.sqrt(0.125) / 2.0
MIN1 = np.array([0.5, 0.25 + W, 0.25 - W])


def linear_instance(u=2.0):
    # f(x) = -u * (A' e) . x has gradient exactly in the row space
    A = np.array([[1.0, 1.0]])
    c = -u * A.T @ np.ones(1)
    return ProblemInstance(
        A=A, b=np.array([1.0]),
        objective=ObjectiveSpec(kind="quartic", sigma=0.0,
                                Q=np.zeros((2, 2)), c=c),
        constants=RegularityConstants(l=1.0, rho=1.0, l_phi=5.0),
        x0=np.array([0.5, 0.5]))


class TestKkt1:
    def test_row_space_gradient_absorbed(self):
        inst = linear_instance(u=2.0)
        eps = 0.05
        rep = check_kkt1(inst, inst.x0, eps)
        # v recovers the multiplier up to the barrier offset, leaving only
        # the eps-term in the stationarity residual
        assert rep.stationarity_inf <= eps + 1e-12
        assert rep.kkt1_certified

    def test_fig2_saddle_certifies(self):
        inst = builtin_fig2()
        rep = check_kkt1(inst, SADDLE, 0.05)
        assert rep.kkt1_certified
        assert rep.feasibility_res <= 1e-12

    def test_center_fails_at_tight_eps(self):
        inst = builtin_fig2()
        rep = check_kkt1(inst, np.ones(3) / 3.0, 0.01)
        assert rep.stationarity_inf > 0.02
        assert not rep.kkt1_certified

    def test_multiplier_is_least_squares_optimal(self):
        inst = gen_quartic(16, 6, 1.0, 3)
        x = inst.x0 * 1.1
        eps = 0.05
        rep = check_kkt1(inst, x, eps)
        w = x * inst.oracle.grad(x) - eps
        base = np.linalg.norm(w + x * (inst.A.T @ rep.v))
        rng = np.random.default_rng(0)
        for _ in range(100):
            v2 = rep.v + rng.standard_normal(6) * 10.0 ** rng.uniform(-6, 0)
            assert np.linalg.norm(w + x * (inst.A.T @ v2)) >= base - 1e-12

    def test_non_interior_rejected(self):
        inst = builtin_fig2()
        with pytest.raises(ValueError):
            check_kkt1(inst, np.array([0.5, 0.5, 0.0]), 0.05)


class TestKkt2:
    def test_fig2_minimum_certified(self):
        inst = builtin_fig2()
        rep = check_kkt2(inst, MIN1, 0.04)
        assert rep.kkt1_certified
        assert rep.projected_min_eig > 0.0
        assert rep.kkt2_certified

    def test_fig2_saddle_passes_kkt1_fails_kkt2(self):
        inst = builtin_fig2()
        rep = check_kkt2(inst, SADDLE, 0.04)
        assert rep.kkt1_certified
        assert rep.projected_min_eig < -np.sqrt(0.04)
        assert not rep.kkt2_certified

    def test_convex_quadratic_nonnegative_curvature(self):
        rng = np.random.default_rng(1)
        n, m = 10, 3
        G = rng.standard_normal((n, n))
        Q = G.T @ G / n
        A = np.vstack([np.ones(n) / np.sqrt(n), rng.uniform(0, 1, (m - 1, n))])
        x0 = rng.uniform(0.5, 1.5, n)
        inst = ProblemInstance(
            A=A, b=A @ x0,
            objective=ObjectiveSpec(kind="quartic", sigma=0.0, Q=Q,
                                    c=-(Q @ x0)),
            constants=RegularityConstants(l=5.0, rho=1.0, l_phi=20.0),
            x0=x0)
        rep = check_kkt2(inst, x0, 0.04)
        assert rep.projected_min_eig >= -1e-8

    def test_fd_curvature_matches_analytic(self):
        inst = builtin_fig2()
        for x in (SADDLE, MIN1, np.ones(3) / 3.0):
            rep = check_kkt2(inst, x, 0.04)
            Z = nullspace_basis(inst.A, x)
            H = inst.oracle.hess(x)
            lam, _ = symmetric_min_eig((Z.T * x) @ H @ (x[:, None] * Z))
            assert rep.projected_min_eig == pytest.approx(lam, abs=1e-4)
            assert not rep.hessian_unreliable

    def test_cheap_skips_curvature(self):
        inst = builtin_fig2()
        rep = check_kkt2(inst, SADDLE, 0.04, cheap=True)
        assert rep.projected_min_eig is None
        assert not rep.kkt2_certified

    def test_infeasible_point_flagged(self):
        inst = builtin_fig2()
        rep = check_kkt2(inst, np.array([0.5, 0.5, 0.5]), 0.04)
        assert rep.feasibility_res > 1e-3
        assert not rep.kkt1_certified

    def test_report_serialization(self, tmp_path):
        import json
        inst = builtin_fig2()
        rep = check_kkt2(inst, SADDLE, 0.04)
        path = tmp_path / "report.json"
        rep.to_json(path)
        doc = json.loads(path.read_text())
        assert doc["kkt1_certified"] is True
        assert doc["kkt2_certified"] is False
        assert doc["projected_min_eig"] == pytest.approx(-1.25, abs=1e-3)


def test_fd_hessian_symmetry_on_analytic_instances():
    from iptr.finite_diff import fd_hessian_from_grad
    for inst in (builtin_fig2(), gen_quartic(12, 4, 1.0, 0)):
        rng = np.random.default_rng(2)
        for _ in range(5):
            x = inst.x0 * (1.0 + rng.uniform(-0.2, 0.2, inst.n))
            H = fd_hessian_from_grad(inst.oracle.grad, x)
            asym = np.linalg.norm(H - H.T) / np.linalg.norm(H)
            assert asym <= 1e-6
