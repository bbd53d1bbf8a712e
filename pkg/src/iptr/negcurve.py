"""Gradient-only negative-curvature detection and the descent step it feeds.

Given a strictly feasible ``x``, a projected power iteration amplifies the
most-negative-curvature component of the scaled Hessian on ``ker(A X)``
using only gradient differences: one probe gradient per iteration yields
both the power update and a finite-difference Rayleigh quotient for the
current direction.  The best (most negative) quotient seen is tracked, so
the existence guarantee of the underlying analysis becomes a constructive
return value; the loop exits early as soon as the tracked quotient clears
the acceptance threshold ``-sqrt(eps)/4``.

A found direction feeds :func:`curvature_descent_step`, which moves along
``+-X e_hat`` against the gradient sign and is guaranteed a fixed objective
decrease whenever the curvature along ``e_hat`` is at most ``-sqrt(eps)/4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import nullspace_basis
from .problems import ProblemInstance

__all__ = [
    "NcfParams",
    "CurvatureResult",
    "ProbeOutsideOrthantError",
    "default_ncf_params",
    "find_negative_curvature",
    "curvature_descent_step",
]

R_FLOOR = 1e-8
R_CAP = 0.25


class ProbeOutsideOrthantError(RuntimeError):
    """A probe point left the positive orthant; halve ``r`` and retry."""


@dataclass
class NcfParams:
    """Power-iteration schedule: failure probability ``delta0``, iteration
    count ``calT``, probe radius ``r`` and subspace dimension ``k``."""

    delta0: float
    calT: int
    r: float
    k: int

    def __post_init__(self):
        if not (0.0 < self.delta0 < 1.0):
            raise ValueError("delta0 must lie in (0, 1)")
        if self.calT < 1 or self.k < 1:
            raise ValueError("calT and k must be positive")
        if not (0.0 < self.r < 1.0):
            raise ValueError("r must lie in (0, 1) to keep probes interior")


@dataclass
class CurvatureResult:
    """Outcome of one detection run.

    ``rayleigh`` is the most negative finite-difference quotient observed;
    ``found`` reports whether it cleared ``-sqrt(eps)/4``, in which case
    ``e_hat`` is the corresponding unit direction in ``ker(A X)``.
    """

    found: bool
    e_hat: Optional[np.ndarray]
    rayleigh: float
    iterations: int = 0
    max_growth: float = 0.0


def default_ncf_params(l: float, rho: float, epsilon: float, n: int, k: int,
                       delta0: float = 0.05) -> NcfParams:
    """Schedule from the high-probability detection analysis.

    ``calT = ceil((8 l / sqrt(eps)) log((8 l / delta0) sqrt(n / (pi eps))))``
    and ``r = ((1 + 7 sqrt(eps)/(8l)) / 2)^calT / (8 rho) * sqrt(pi eps / k)
    * delta0``.  The geometric factor in ``r`` underflows for large
    ``calT``; only smallness of ``r`` matters for correctness (the probe
    must stay interior and within the Hessian-Lipschitz neighbourhood), so
    ``r`` is clamped to ``[1e-8, 0.25]``.
    """
    sq = math.sqrt(epsilon)
    log_arg = (8.0 * l / delta0) * math.sqrt(n / (math.pi * epsilon))
    calT = max(1, math.ceil((8.0 * l / sq) * math.log(max(log_arg, math.e))))
    base = (1.0 + 7.0 * sq / (8.0 * l)) / 2.0
    # log-domain to survive base**calT underflow
    log_r = (calT * math.log(base) - math.log(8.0 * rho)
             + 0.5 * math.log(math.pi * epsilon / k) + math.log(delta0))
    r = math.exp(log_r) if log_r > math.log(R_FLOOR) else R_FLOOR
    r = min(max(r, R_FLOOR), R_CAP)
    return NcfParams(delta0=delta0, calT=calT, r=r, k=k)


def find_negative_curvature(instance: ProblemInstance, x, epsilon: float,
                            params: Optional[NcfParams] = None,
                            seed: int = 0) -> CurvatureResult:
    """Projected power iteration for a feasible negative-curvature direction.

    Starts from a uniformly random unit vector of ``ker(A X)`` (seeded
    Gaussian through an orthonormal basis) and iterates

        ``y <- y - (||y|| / (l r)) P X (grad f(X(e + r y/||y||)) - grad f(x))``

    tracking the direction with the most negative finite-difference
    Rayleigh quotient.  Returns ``found=True`` as soon as (and only if)
    that quotient is at most ``-sqrt(eps)/4``.

    Raises
    ------
    ProbeOutsideOrthantError
        If a probe point leaves the positive orthant (``r`` too large for
        this ``x``); callers halve ``r`` and retry.
    """
    x = np.asarray(x, dtype=float).ravel()
    if np.any(x <= 0.0):
        raise ValueError("x must be strictly positive")
    l = instance.constants.l
    k = instance.n - instance.m
    if k < 1:
        return CurvatureResult(found=False, e_hat=None, rayleigh=np.inf)
    if params is None:
        params = default_ncf_params(l, instance.constants.rho, epsilon,
                                    instance.n, k)
    if params.k != k:
        raise ValueError(f"params.k={params.k} but ker(A X) has dimension {k}")
    r = params.r
    tau = min(r, 1e-4)
    accept = -math.sqrt(epsilon) / 4.0

    Z = nullspace_basis(instance.A, x)
    grad = instance.oracle.grad
    g0 = grad(x)
    rng = np.random.default_rng((seed, 0x9C4))
    # iterate in basis coordinates: y = Z w stays in ker(A X) by construction
    w = rng.standard_normal(k)
    w /= np.linalg.norm(w)

    best_q, best_w = np.inf, None
    max_growth = 0.0
    iterations = 0
    inv_lr = 1.0 / (l * r)
    # Miss runs may stop once further improvement is impossible: gradient
    # rounding noise re-seeds every subspace direction at relative level
    # ~eps_mach/(l r) each step, and any curvature strong enough to accept
    # re-amplifies from that floor within (4 l / sqrt(eps)) log(1/floor)
    # iterations; a quotient that has not improved over such a window is
    # final.
    noise_floor = max(np.finfo(float).eps * (1.0 + float(np.max(np.abs(g0))))
                      * inv_lr, 1e-15)
    window = math.ceil((4.0 * l / math.sqrt(epsilon))
                       * math.log(1.0 / min(noise_floor, 0.1)))
    last_improve = 0
    for t in range(params.calT):
        iterations = t + 1
        v = Z @ w                   # unit direction in ker(A X)
        probe = x * (1.0 + r * v)
        if np.any(probe <= 0.0):
            raise ProbeOutsideOrthantError(
                f"probe radius {r} escapes the orthant at this x")
        dg = grad(probe) - g0
        s = Z.T @ (x * dg)          # P X (grad difference), in coordinates
        if tau == r:
            q = float(w @ s) / r
        else:
            probe_t = x * (1.0 + tau * v)
            if np.any(probe_t <= 0.0):
                raise ProbeOutsideOrthantError(
                    f"quotient probe radius {tau} escapes the orthant")
            dq = grad(probe_t) - g0
            q = float(w @ (Z.T @ (x * dq))) / tau
        if q < best_q - 1e-6 * (1.0 + abs(q)):
            last_improve = t
        if q < best_q:
            best_q, best_w = q, w.copy()
            if best_q <= accept:
                break
        if t - last_improve > window and best_q > accept + 1e-3:
            break
        w = w - inv_lr * s
        growth = float(np.linalg.norm(w))
        max_growth = max(max_growth, growth)
        if growth == 0.0 or not np.isfinite(growth):
            break
        w = w / growth

    found = best_q <= accept
    e_hat = None
    if found:
        e_hat = Z @ best_w
        e_hat /= np.linalg.norm(e_hat)
    return CurvatureResult(found=found, e_hat=e_hat, rayleigh=best_q,
                           iterations=iterations, max_growth=max_growth)


def curvature_descent_step(instance: ProblemInstance, x, e_hat,
                           epsilon: float, rho: float) -> np.ndarray:
    """Move ``x -> x - sign(<grad f, X e_hat>) * (3 sqrt(eps) / (8 rho)) X e_hat``.

    ``e_hat`` must be a unit vector of ``ker(A X)`` and the step length
    ``3 sqrt(eps) / (8 rho)`` must be below 1 so the orthant is preserved;
    ties in the gradient alignment break toward ``+1`` (both signs yield
    the same quadratic decrease).
    """
    x = np.asarray(x, dtype=float).ravel()
    e_hat = np.asarray(e_hat, dtype=float).ravel()
    if abs(np.linalg.norm(e_hat) - 1.0) > 1e-8:
        raise ValueError("e_hat must be a unit vector")
    feas = np.linalg.norm(instance.A @ (x * e_hat))
    if feas > 1e-8 * (1.0 + np.linalg.norm(instance.A)):
        raise ValueError("e_hat does not lie in ker(A X)")
    eta = 3.0 * math.sqrt(epsilon) / (8.0 * rho)
    if eta >= 1.0:
        raise ValueError(
            f"curvature step length {eta:.3g} >= 1; rho is too small "
            f"relative to epsilon, revise the instance constants")
    align = float(instance.oracle.grad(x) @ (x * e_hat))
    sign = 1.0 if align == 0.0 else math.copysign(1.0, align)
    x_next = x * (1.0 - sign * eta * e_hat)
    if np.any(x_next <= 0.0):
        raise ValueError(
            "curvature step left the positive orthant; rho is too small "
            "for this iterate, revise the instance constants")
    return x_next
