"""First-order interior trust-region solvers.

Each iteration moves ``x -> X (e + d)`` where ``d`` solves (or approximates)
the trust-region linearization of the barrier potential over
``{A X d = 0, ||d|| <= beta}``:

* **exact mode** rebuilds the scaled normal-matrix inverse from the current
  iterate every step and takes ``d = -beta * p / ||p||`` with
  ``p = P X grad(phi)``;
* **approximate mode** reuses a lazily-maintained inverse built from the
  tracked diagonal ``xbar`` and takes the analogous step through the
  feasibility-exact oblique projector ``R``, refreshing ``xbar`` and the
  inverse sparsely after every accepted step.

Termination: a step whose potential decrease misses the mode's threshold
certifies the current iterate as an approximate first-order KKT point (the
least-squares multiplier is returned with it); otherwise the loop runs to
the iteration budget implied by the potential's total descent capacity.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .barrier import (CenterResult, PotentialContext, analytic_center,
                      scaled_potential_grad)
from .lazyupdate import LazyTracker, tracker_advance, tracker_init
from .linalg import (InverseCache, apply_approx_projector, build_inverse_cache,
                     multiplier_leastsquares, woodbury_update)
from .problems import ProblemInstance

__all__ = [
    "SolverConfig",
    "SolveOutcome",
    "IterTrace",
    "ResolvedParams",
    "resolve_params",
    "step_exact_first",
    "step_approx_first",
    "solve_first_order",
]

ZERO_DIR_RTOL = 1e-12


class NumericalBreakdownError(RuntimeError):
    """An iterate or cache became unusable even after a rebuild retry."""


@dataclass
class SolverConfig:
    """User-facing solver knobs; ``None`` fields fall back to the mode's
    formula defaults derived from the instance constants.

    ``f_lower_bound`` replaces the unknowable optimal value in the
    iteration-budget formula (defaults to the instance's stored bound).
    ``max_iters=None`` means the formula budget.  ``adaptive_beta`` enables
    the opt-in proportional trust radius ``beta_t ~ ||R X grad phi|| / l``.
    """

    epsilon: float
    beta: Optional[float] = None
    delta: Optional[float] = None
    mode: Literal["exact", "approximate"] = "exact"
    objective_shape: Literal["general", "concave"] = "general"
    max_iters: Optional[int] = None
    seed: int = 0
    trace_every: int = 1
    f_lower_bound: Optional[float] = None
    adaptive_beta: bool = False
    center_tol: float = 1e-4
    # benchmarking hooks: start at the declared interior point and/or keep
    # stepping past the certification test while recording when it fires
    skip_centering: bool = False
    ignore_stopping: bool = False
    # keep every iterate in the outcome (trajectory comparisons in tests)
    record_iterates: bool = False


@dataclass
class IterTrace:
    """One per-iteration record."""

    t: int
    phi: float
    f: float
    step_norm: float
    potential_delta: float
    refreshed: int
    rebuilt: bool
    wall_ns: int
    event: str = ""


@dataclass
class SolveOutcome:
    status: Literal["kkt1-certified", "budget-exhausted-near-optimal", "max-iters"]
    x_final: np.ndarray
    v_final: Optional[np.ndarray]
    iters: int
    trace: list[IterTrace] = field(repr=False)
    center: Optional[CenterResult] = None
    budget: int = 0
    first_cert_iter: Optional[int] = None
    iterates: Optional[list[np.ndarray]] = field(default=None, repr=False)


@dataclass
class ResolvedParams:
    epsilon: float
    beta: float
    delta: float
    descent_threshold: float
    budget: int


def resolve_params(config: SolverConfig, instance: ProblemInstance,
                   f_start: float, c0: float) -> ResolvedParams:
    """Fill in the mode's formula defaults and the iteration budget."""
    eps = config.epsilon
    cs = instance.constants
    l, l_phi, gamma = cs.l, cs.l_phi, cs.gamma
    approx = config.mode == "approximate"
    concave = config.objective_shape == "concave"

    if concave:
        if not (0.0 < eps <= 1.0):
            raise ValueError(f"concave modes need epsilon in (0, 1], got {eps}")
    else:
        cap = min(gamma, 1.0) if not approx else min(gamma, 0.5)
        if not (0.0 < eps <= cap):
            raise ValueError(
                f"mode {config.mode}/{config.objective_shape} needs epsilon "
                f"in (0, {cap}], got {eps}")
    if approx and not (0.0 < eps <= min(gamma, 0.5)):
        raise ValueError(
            f"approximate mode needs epsilon in (0, {min(gamma, 0.5)}], got {eps}")

    if concave:
        beta = 0.5 if config.beta is None else config.beta
        if not (0.0 < beta < 1.0):
            raise ValueError("concave modes need beta in (0, 1)")
        if approx:
            delta = ((1.0 - beta) * eps / (184.0 * l_phi)
                     if config.delta is None else config.delta)
            threshold = 0.5 * eps * beta * (1.0 - beta)
            per_step = threshold
        else:
            delta = 0.0 if config.delta is None else config.delta
            threshold = eps * beta * (1.0 - beta)
            per_step = threshold
    else:
        if approx:
            beta = eps / (l + 2.0 * eps + 2.0) if config.beta is None else config.beta
            delta = (min(eps / (15.0 * l_phi), beta / (92.0 * l_phi))
                     if config.delta is None else config.delta)
            threshold = eps * eps / (2.0 * l + 4.0 * eps + 4.0)
            per_step = threshold
        else:
            beta = eps / (l + 2.0 * eps) if config.beta is None else config.beta
            delta = 0.0 if config.delta is None else config.delta
            threshold = eps * eps / (4.0 * l + 4.0 * eps)
            per_step = threshold
    if not (0.0 < beta < 0.5):
        # steps of relative size >= 1/2 would void the log-change bound
        if not (concave and beta < 1.0):
            raise ValueError(f"resolved beta {beta} outside (0, 1/2)")
    if not (0.0 <= delta < 0.5):
        raise ValueError(f"resolved delta {delta} outside [0, 1/2)")

    f_lb = (config.f_lower_bound if config.f_lower_bound is not None
            else instance.f_lower_bound)
    descent_capacity = (f_start - f_lb) + (c0 - 1.0) * eps
    budget = max(1, int(np.ceil(max(descent_capacity, 0.0) / per_step)))
    return ResolvedParams(epsilon=eps, beta=beta, delta=delta,
                          descent_threshold=threshold, budget=budget)


def step_exact_first(instance: ProblemInstance, ctx: PotentialContext, x,
                     beta: float) -> tuple[np.ndarray, dict]:
    """Exact trust-region direction ``d = -beta p / ||p||``, ``p = P X grad(phi)``.

    Returns ``d = 0`` when the projected gradient vanishes (relative
    threshold ``1e-12``); the diagnostics carry the projected-gradient norm
    and the zero-direction flag.
    """
    x = np.asarray(x, dtype=float)
    cache = build_inverse_cache(instance.A, x)
    return _direction_from_cache(instance, ctx, x, cache, beta)


def step_approx_first(instance: ProblemInstance, ctx: PotentialContext, x,
                      tracker: LazyTracker, cache: InverseCache,
                      beta: float) -> tuple[np.ndarray, dict]:
    """Approximate direction through the cached oblique projector.

    Requires the tracker window ``e^-delta x <= xbar <= e^delta x``; the
    lazy maintenance (tracker advance plus Woodbury fold-in) happens after
    the iterate update, via :func:`advance_lazy_state`.
    """
    x = np.asarray(x, dtype=float)
    slack = 1.0 + 1e-9
    lo, hi = np.exp(-tracker.delta) / slack, np.exp(tracker.delta) * slack
    if np.any(tracker.xbar < lo * x) or np.any(tracker.xbar > hi * x):
        raise ValueError("tracker window violated: xbar is not within "
                         "e^{+-delta} of x")
    return _direction_from_cache(instance, ctx, x, cache, beta)


def _direction_from_cache(instance, ctx, x, cache, beta):
    g_phi = ctx.oracle.grad(x) - ctx.epsilon / x
    r = apply_approx_projector(instance.A, x, cache, g_phi)
    rnorm = float(np.linalg.norm(r))
    xg_norm = float(np.linalg.norm(x * g_phi))
    if rnorm <= ZERO_DIR_RTOL * (1.0 + xg_norm):
        return np.zeros_like(x), {"projected_grad_norm": rnorm,
                                  "zero_direction": True}
    return -(beta / rnorm) * r, {"projected_grad_norm": rnorm,
                                 "zero_direction": False}


def advance_lazy_state(instance: ProblemInstance, tracker: LazyTracker,
                       cache: InverseCache, x_new) -> tuple[int, bool, InverseCache]:
    """Advance the tracker to ``x_new`` and fold the refresh into the cache.

    Returns ``(refresh count, rebuilt flag, cache)``.
    """
    rs = tracker_advance(tracker, x_new)
    cache = woodbury_update(cache, instance.A, rs.indices,
                            tracker.xbar[rs.indices])
    return len(rs), cache.rebuilt_last_update, cache


def _certificate(instance, ctx, x):
    w = scaled_potential_grad(ctx, x)
    return multiplier_leastsquares(instance.A, x, w)


def solve_first_order(instance: ProblemInstance,
                      config: SolverConfig) -> SolveOutcome:
    """Run the configured first-order method from the analytic center.

    Returns ``kkt1-certified`` with the terminal iterate and least-squares
    multiplier when a step fails the potential-descent test (or the
    projected gradient vanishes); exhausting the descent-capacity budget
    yields ``budget-exhausted-near-optimal``, and a user iteration cap
    yields ``max-iters``.
    """
    ctx = PotentialContext(config.epsilon, instance.oracle)
    if config.skip_centering:
        center = CenterResult(x0=instance.x0.copy(), c0=0.0, decrement=np.nan,
                              iterations=0)
    else:
        center = analytic_center(instance.A, instance.b, instance.x0,
                                 tol=config.center_tol)
    x = center.x0.copy()
    params = resolve_params(config, instance, instance.oracle.eval(x), center.c0)
    formula_budget = params.budget
    capped = config.max_iters is not None and config.max_iters < formula_budget
    effective_budget = min(formula_budget, config.max_iters) \
        if config.max_iters is not None else formula_budget

    approx = config.mode == "approximate"
    tracker = tracker_init(x, params.delta) if approx else None
    cache = build_inverse_cache(instance.A, x) if approx else None

    f_x = instance.oracle.eval(x)
    ln_x = np.log(x)
    phi = f_x - config.epsilon * ln_x.sum()
    trace: list[IterTrace] = []
    iterates: Optional[list[np.ndarray]] = [] if config.record_iterates else None
    first_cert: Optional[int] = None
    status = "max-iters" if capped else "budget-exhausted-near-optimal"
    v_final = None
    t = 0

    for t in range(effective_budget):
        t0 = time.perf_counter_ns()
        if approx:
            try:
                d, diag = step_approx_first(instance, ctx, x, tracker, cache,
                                            params.beta)
            except FloatingPointError:
                cache = build_inverse_cache(instance.A, tracker.xbar)
                try:
                    d, diag = step_approx_first(instance, ctx, x, tracker,
                                                cache, params.beta)
                except FloatingPointError as exc:
                    raise NumericalBreakdownError(
                        "approximate projector unusable after rebuild") from exc
        else:
            d, diag = step_exact_first(instance, ctx, x, params.beta)
        if config.adaptive_beta and not diag["zero_direction"]:
            scale = min(diag["projected_grad_norm"] / instance.constants.l, 0.45)
            if scale > 0:
                d *= scale / params.beta

        if diag["zero_direction"]:
            x_next, f_next, ln_next, phi_next, dphi = x, f_x, ln_x, phi, 0.0
        else:
            x_next = x * (1.0 + d)
            f_next = instance.oracle.eval(x_next)
            ln_next = np.log(x_next)
            phi_next = f_next - config.epsilon * ln_next.sum()
            dphi = phi_next - phi
        step_norm = float(np.linalg.norm(d))

        if dphi > -params.descent_threshold:
            if first_cert is None:
                first_cert = t
            if not config.ignore_stopping:
                wall = time.perf_counter_ns() - t0
                v_final = _certificate(instance, ctx, x)
                status = "kkt1-certified"
                trace.append(IterTrace(t=t, phi=phi, f=f_x,
                                       step_norm=step_norm,
                                       potential_delta=dphi, refreshed=0,
                                       rebuilt=False, wall_ns=wall,
                                       event="certified"))
                break
            if diag["zero_direction"]:
                # nothing to accept and stopping is disabled; record and move on
                trace.append(IterTrace(t=t, phi=phi, f=f_x,
                                       step_norm=0.0, potential_delta=0.0,
                                       refreshed=0, rebuilt=False,
                                       wall_ns=time.perf_counter_ns() - t0,
                                       event="zero-direction"))
                continue

        step_beta = max(params.beta, step_norm)
        if np.linalg.norm(ln_next - ln_x) > 2.0 * step_beta * (1.0 + 1e-8) + 1e-12:
            raise NumericalBreakdownError(
                "successive log-iterate change exceeded its bound; "
                "iterates are corrupted")
        refreshed, rebuilt = 0, False
        if approx:
            refreshed, rebuilt, cache = advance_lazy_state(instance, tracker,
                                                           cache, x_next)
        x, f_x, phi, ln_x = x_next, f_next, phi_next, ln_next
        if iterates is not None:
            iterates.append(x.copy())
        wall = time.perf_counter_ns() - t0

        event = ""
        if rebuilt:
            event = "rebuild"
        if first_cert == t and config.ignore_stopping:
            event = (event + "+" if event else "") + "would-certify"
        if event or t % config.trace_every == 0:
            trace.append(IterTrace(t=t, phi=phi, f=f_x,
                                   step_norm=step_norm, potential_delta=dphi,
                                   refreshed=refreshed, rebuilt=rebuilt,
                                   wall_ns=wall, event=event))
    else:
        t = effective_budget
        v_final = _certificate(instance, ctx, x)

    if status == "kkt1-certified":
        iters = t
    else:
        iters = effective_budget
    return SolveOutcome(status=status, x_final=x, v_final=v_final, iters=iters,
                        trace=trace, center=center, budget=formula_budget,
                        first_cert_iter=first_cert, iterates=iterates)
