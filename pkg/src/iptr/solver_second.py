"""First-order solvers with negative-curvature escapes (second-order KKT).

The first-order trust-region loop runs as in :mod:`iptr.solver_first`; when
a step's potential decrease misses the threshold — the event that would
certify an approximate first-order KKT point — the negative-curvature
finder probes the scaled Hessian on ``ker(A X)``.  A found direction
triggers a curvature descent step (which must cut the objective by the
guaranteed amount, else the point is returned); a miss returns the point
as a second-order candidate.  Returned candidates are re-checked with the
KKT module and downgraded to ``ncf-failed`` if they miss the thresholds,
since detection is probabilistic.

In approximate mode the lazy tracker and inverse cache are restarted from
scratch after every accepted curvature step.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .barrier import CenterResult, PotentialContext, analytic_center, potential_eval
from .kkt import KktReport, check_kkt2
from .lazyupdate import tracker_init
from .linalg import build_inverse_cache
from .negcurve import (CurvatureResult, NcfParams, ProbeOutsideOrthantError,
                       curvature_descent_step, default_ncf_params,
                       find_negative_curvature)
from .problems import ProblemInstance
from .solver_first import (IterTrace, SolverConfig, advance_lazy_state,
                           resolve_params, step_approx_first, step_exact_first)

__all__ = [
    "SecondOrderConfig",
    "SecondOrderOutcome",
    "ncf_trigger_policy",
    "solve_second_order",
]

NCF_RETRIES = 5


@dataclass
class SecondOrderConfig:
    """Second-order solve configuration.

    ``base`` selects mode/shape/epsilon as for the first-order solver
    (``objective_shape`` must be ``general``).  ``delta_total`` is the
    overall failure-probability budget; the per-invocation probability is
    derived from it and the curvature-step descent quantum.  ``ncf``
    overrides the detection schedule entirely when given.
    """

    base: SolverConfig
    ncf: Optional[NcfParams] = None
    delta_total: float = 0.1

    def __post_init__(self):
        if self.base.objective_shape != "general":
            raise ValueError("second-order solves support the general shape only")
        if not (0.0 < self.delta_total <= 1.0):
            raise ValueError("delta_total must lie in (0, 1]")


@dataclass
class SecondOrderOutcome:
    status: Literal["kkt2-certified", "budget-exhausted", "ncf-failed"]
    x_final: np.ndarray
    iters: int
    trace: list[IterTrace] = field(repr=False)
    ncf_invocations: int = 0
    ncf_successes: int = 0
    kkt_report: Optional[KktReport] = None
    center: Optional[CenterResult] = None
    budget: int = 0
    kkt1_candidates: list[tuple[int, np.ndarray]] = field(default_factory=list,
                                                          repr=False)


def ncf_trigger_policy(trace: Sequence[IterTrace], threshold: float) -> bool:
    """True exactly when the last recorded potential decrease missed the
    descent threshold (the curvature finder should fire)."""
    if not trace:
        raise ValueError("need at least one completed iteration")
    return trace[-1].potential_delta > -threshold


def _second_order_budget(config: SecondOrderConfig, instance: ProblemInstance,
                         f_start: float, c0: float,
                         first_order_budget: int) -> tuple[int, float]:
    """Iteration cap and per-invocation failure probability.

    The cap is ``max(2 T2, 4 T1)`` where ``T1`` is the first-order descent
    budget and ``T2`` the curvature-step budget
    ``1024 (f0 - f_lb) rho^2 / (9 eps^1.5)``; the failure budget splits as
    ``delta0 = delta_total * 9 eps^1.5 / (1024 (f0 - f_lb) rho^2)``.
    """
    eps = config.base.epsilon
    rho = instance.constants.rho
    f_lb = (config.base.f_lower_bound
            if config.base.f_lower_bound is not None
            else instance.f_lower_bound)
    gap = max(f_start - f_lb, eps)
    t2 = 1024.0 * gap * rho * rho / (9.0 * eps ** 1.5)
    budget = max(1, int(np.ceil(max(2.0 * t2, 4.0 * first_order_budget))))
    if config.base.max_iters is not None:
        budget = min(budget, config.base.max_iters)
    delta0 = config.delta_total * 9.0 * eps ** 1.5 / (1024.0 * gap * rho * rho)
    delta0 = min(max(delta0, 1e-12), 0.5)
    return budget, delta0


def _run_ncf(instance, x, eps, params, seed) -> CurvatureResult:
    """Invoke the finder, halving the probe radius on orthant escapes."""
    r = params.r
    for _ in range(NCF_RETRIES + 1):
        try:
            return find_negative_curvature(
                instance, x, eps,
                params=NcfParams(delta0=params.delta0, calT=params.calT,
                                 r=r, k=params.k),
                seed=seed)
        except ProbeOutsideOrthantError:
            r *= 0.5
    raise ProbeOutsideOrthantError(
        f"probe radius still escapes the orthant after {NCF_RETRIES} halvings")


def solve_second_order(instance: ProblemInstance,
                       config: SecondOrderConfig) -> SecondOrderOutcome:
    """Run the configured trust-region method with curvature escapes.

    Deterministic given ``(instance, config)``: the finder's seeds derive
    from ``config.base.seed`` and the invocation counter.
    """
    base = config.base
    ctx = PotentialContext(base.epsilon, instance.oracle)
    if base.skip_centering:
        center = CenterResult(x0=instance.x0.copy(), c0=0.0, decrement=np.nan,
                              iterations=0)
    else:
        center = analytic_center(instance.A, instance.b, instance.x0,
                                 tol=base.center_tol)
    x = center.x0.copy()
    f_start = instance.oracle.eval(x)
    params = resolve_params(base, instance, f_start, center.c0)
    budget, delta0 = _second_order_budget(config, instance, f_start,
                                          center.c0, params.budget)
    eps = base.epsilon
    rho = instance.constants.rho
    descent_quantum = 9.0 * eps ** 1.5 / (1024.0 * rho * rho)
    k = instance.n - instance.m
    ncf_params = config.ncf if config.ncf is not None else default_ncf_params(
        instance.constants.l, rho, eps, instance.n, k, delta0)

    approx = base.mode == "approximate"
    tracker = tracker_init(x, params.delta) if approx else None
    cache = build_inverse_cache(instance.A, x) if approx else None

    phi = potential_eval(ctx, x)
    trace: list[IterTrace] = []
    candidates: list[tuple[int, np.ndarray]] = []
    invocations = successes = 0
    status = "budget-exhausted"
    t = 0

    for t in range(budget):
        t0 = time.perf_counter_ns()
        if approx:
            try:
                d, diag = step_approx_first(instance, ctx, x, tracker, cache,
                                            params.beta)
            except FloatingPointError:
                cache = build_inverse_cache(instance.A, tracker.xbar)
                d, diag = step_approx_first(instance, ctx, x, tracker, cache,
                                            params.beta)
        else:
            d, diag = step_exact_first(instance, ctx, x, params.beta)

        if diag["zero_direction"]:
            x_next, phi_next, dphi = x, phi, 0.0
        else:
            x_next = x * (1.0 + d)
            phi_next = potential_eval(ctx, x_next)
            dphi = phi_next - phi
        step_norm = float(np.linalg.norm(d))

        if dphi > -params.descent_threshold:
            # first-order progress stalled: this iterate is a cheap
            # first-order candidate; probe its curvature
            candidates.append((t, x.copy()))
            invocations += 1
            result = _run_ncf(instance, x, eps, ncf_params,
                              seed=(base.seed, invocations))
            wall = time.perf_counter_ns() - t0
            if not result.found:
                trace.append(IterTrace(t=t, phi=phi, f=instance.oracle.eval(x),
                                       step_norm=0.0, potential_delta=dphi,
                                       refreshed=0, rebuilt=False, wall_ns=wall,
                                       event=f"ncf-miss:{result.rayleigh:.6g}"))
                status = "kkt2-certified"
                break
            successes += 1
            x_trial = curvature_descent_step(instance, x, result.e_hat, eps, rho)
            f_drop = instance.oracle.eval(x_trial) - instance.oracle.eval(x)
            if f_drop > -descent_quantum:
                trace.append(IterTrace(t=t, phi=phi, f=instance.oracle.eval(x),
                                       step_norm=0.0, potential_delta=dphi,
                                       refreshed=0, rebuilt=False, wall_ns=wall,
                                       event=f"ncf-step-failed:{result.rayleigh:.6g}"))
                status = "kkt2-certified"
                break
            x = x_trial
            phi = potential_eval(ctx, x)
            if approx:
                # the lazy state refers to the pre-escape trajectory;
                # restart it at the new point
                tracker = tracker_init(x, params.delta)
                cache = build_inverse_cache(instance.A, x)
            trace.append(IterTrace(t=t, phi=phi, f=instance.oracle.eval(x),
                                   step_norm=float(3.0 * math.sqrt(eps) / (8.0 * rho)),
                                   potential_delta=dphi, refreshed=0,
                                   rebuilt=approx,
                                   wall_ns=time.perf_counter_ns() - t0,
                                   event=f"ncf-step:{result.rayleigh:.6g}"))
            continue

        refreshed, rebuilt = 0, False
        if approx:
            refreshed, rebuilt, cache = advance_lazy_state(instance, tracker,
                                                           cache, x_next)
        x, phi = x_next, phi_next
        wall = time.perf_counter_ns() - t0
        event = "rebuild" if rebuilt else ""
        if event or t % base.trace_every == 0:
            trace.append(IterTrace(t=t, phi=phi, f=instance.oracle.eval(x),
                                   step_norm=step_norm, potential_delta=dphi,
                                   refreshed=refreshed, rebuilt=rebuilt,
                                   wall_ns=wall, event=event))

    report = None
    if status == "kkt2-certified":
        report = check_kkt2(instance, x, eps)
        if not report.kkt2_certified:
            # detection is probabilistic: an escape may have been missed
            status = "ncf-failed"
    return SecondOrderOutcome(status=status, x_final=x, iters=t,
                              trace=trace, ncf_invocations=invocations,
                              ncf_successes=successes, kkt_report=report,
                              center=center, budget=budget,
                              kkt1_candidates=candidates)
