"""Certification of approximate first- and second-order KKT points.

Measurements and certification are kept separate: a :class:`KktReport`
stores raw residuals (stationarity, dual slack, feasibility, projected
minimum curvature) and derives its pass/fail flags from them on demand, so
a report can never carry inconsistent conclusions.

The multiplier is the weighted least-squares one the solvers themselves
construct, which keeps solver-emitted certificates and checker verdicts in
agreement.  The second-order condition diagonalizes the scaled Hessian on
``ker(A X)`` with the Hessian obtained from central finite differences of
the gradient oracle — the oracle contract stays first-order only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .finite_diff import fd_hessian_from_grad
from .linalg import multiplier_leastsquares, nullspace_basis, symmetric_min_eig
from .problems import ProblemInstance

__all__ = ["KktReport", "check_kkt1", "check_kkt2"]

FEAS_RTOL = 1e-8
MINEIG_SLACK = 1e-3
ASYM_TOL = 1e-4


@dataclass
class KktReport:
    """Raw residual measurements at a candidate point.

    ``thresholds`` is ``(eps1, eps2)``: the first-order conditions certify
    at ``eps1 = 2 eps`` and the curvature condition at ``-eps2 = -sqrt(eps)``.
    ``projected_min_eig`` is ``None`` when the curvature check was skipped.
    """

    v: np.ndarray
    stationarity_inf: float
    dual_min: float
    feasibility_res: float
    min_coord: float
    thresholds: tuple[float, Optional[float]]
    b_norm: float
    projected_min_eig: Optional[float] = None
    hessian_unreliable: bool = False

    @property
    def kkt1_certified(self) -> bool:
        eps1 = self.thresholds[0]
        return (self.feasibility_res <= FEAS_RTOL * (1.0 + self.b_norm)
                and self.min_coord > 0.0
                and self.stationarity_inf <= eps1
                and self.dual_min >= -eps1)

    @property
    def kkt2_certified(self) -> bool:
        eps2 = self.thresholds[1]
        if eps2 is None or self.projected_min_eig is None:
            return False
        return (self.kkt1_certified
                and not self.hessian_unreliable
                and self.projected_min_eig >= -eps2 - MINEIG_SLACK)

    def to_dict(self) -> dict:
        return {
            "v": self.v.tolist(),
            "stationarity_inf": self.stationarity_inf,
            "dual_min": self.dual_min,
            "feasibility_res": self.feasibility_res,
            "min_coord": self.min_coord,
            "projected_min_eig": self.projected_min_eig,
            "thresholds": list(self.thresholds),
            "hessian_unreliable": self.hessian_unreliable,
            "kkt1_certified": self.kkt1_certified,
            "kkt2_certified": self.kkt2_certified,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def _first_order_report(instance: ProblemInstance, x: np.ndarray,
                        epsilon: float,
                        eps2: Optional[float]) -> KktReport:
    grad = instance.oracle.grad(x)
    w = x * grad - epsilon
    v = multiplier_leastsquares(instance.A, x, w)
    resid = grad + instance.A.T @ v
    return KktReport(
        v=v,
        stationarity_inf=float(np.max(np.abs(x * resid))),
        dual_min=float(np.min(resid)),
        feasibility_res=float(np.linalg.norm(instance.A @ x - instance.b)),
        min_coord=float(np.min(x)),
        thresholds=(2.0 * epsilon, eps2),
        b_norm=float(np.linalg.norm(instance.b)),
    )


def check_kkt1(instance: ProblemInstance, x, epsilon: float) -> KktReport:
    """First-order report at tolerance ``2 eps``.

    The multiplier minimizes ``||X grad f - eps e + X A' v||_2``; the spread
    of the resulting residual around the barrier offset is exactly what the
    solvers' stopping rule controls.
    """
    x = np.asarray(x, dtype=float).ravel()
    if np.any(x <= 0.0):
        raise ValueError("candidate point must be strictly positive")
    return _first_order_report(instance, x, epsilon, None)


def check_kkt2(instance: ProblemInstance, x, epsilon: float,
               cheap: bool = False) -> KktReport:
    """First- plus second-order report at tolerances ``(2 eps, sqrt(eps))``.

    The projected curvature is the minimum eigenvalue of ``Z' X H X Z``
    with ``Z`` an orthonormal basis of ``ker(A X)`` and ``H`` the
    finite-difference Hessian (central differences of the gradient, step
    proportional to the coordinate magnitude).  An asymmetry of the raw
    finite-difference Hessian beyond ``1e-4`` relative marks the report
    unreliable.  ``cheap=True`` skips the curvature computation.
    """
    x = np.asarray(x, dtype=float).ravel()
    if np.any(x <= 0.0):
        raise ValueError("candidate point must be strictly positive")
    report = _first_order_report(instance, x, epsilon, math.sqrt(epsilon))
    if cheap:
        return report
    H = fd_hessian_from_grad(instance.oracle.grad, x)
    scale = np.linalg.norm(H, ord="fro")
    if scale > 0 and np.linalg.norm(H - H.T, ord="fro") > ASYM_TOL * scale:
        report.hessian_unreliable = True
    Hs = 0.5 * (H + H.T)
    Z = nullspace_basis(instance.A, x)
    M = (Z.T * x) @ Hs @ (x[:, None] * Z)
    lam, _ = symmetric_min_eig(M)
    report.projected_min_eig = lam
    return report
