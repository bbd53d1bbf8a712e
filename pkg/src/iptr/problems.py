"""Problem instances: built-ins, random generators, constants, file I/O.

An instance bundles the linear constraints ``A x = b, x >= 0``, a first-order
objective oracle, a strictly feasible interior point, and the regularity
constants the solvers' step-size formulas consume.  All randomness flows
through seeded generators so instances are bit-reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .finite_diff import fd_hessian_from_grad, fd_hvp_from_grad
from .linalg import RankDeficiencyError, nullspace_basis, symmetric_min_eig

__all__ = [
    "RegularityConstants",
    "Oracle",
    "ObjectiveSpec",
    "ProblemInstance",
    "builtin_fig1",
    "builtin_fig2",
    "gen_quartic",
    "gen_concave",
    "estimate_constants",
    "save_instance",
    "load_instance",
]


@dataclass
class RegularityConstants:
    """Scaled-smoothness constants used by the step-size formulas.

    ``l`` bounds the scaled gradient Lipschitz modulus, ``rho`` the scaled
    Hessian Lipschitz modulus, ``l_phi`` the scaled potential-gradient norm,
    and ``gamma`` in (0, 1] is the radius of the displacement neighbourhood
    on which the bounds are declared valid.
    """

    l: float
    rho: float
    l_phi: float
    gamma: float = 1.0

    def __post_init__(self):
        if self.l <= 0 or self.rho <= 0 or self.l_phi <= 0:
            raise ValueError("constants l, rho, l_phi must be positive")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")


@dataclass
class Oracle:
    """First-order objective oracle; ``hess`` is optional and used only by
    verification code, never by the solvers."""

    eval: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass
class ObjectiveSpec:
    """Declarative description of the objective, serializable to disk.

    ``kind`` is one of ``builtin-fig1``, ``builtin-fig2``, ``quartic``,
    ``concave-quadratic``.  Quartic/concave kinds carry ``sigma``, a
    symmetric ``Q`` and a linear term ``c``.
    """

    kind: str
    sigma: float = 0.0
    Q: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None


@dataclass
class ProblemInstance:
    A: np.ndarray
    b: np.ndarray
    objective: ObjectiveSpec
    constants: RegularityConstants
    x0: np.ndarray
    f_lower_bound: float = 0.0
    recipe: Optional[dict] = None
    oracle: Oracle = field(init=False, repr=False)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.x0 = np.asarray(self.x0, dtype=float).ravel()
        m, n = self.A.shape
        if m > n:
            raise ValueError("need m <= n")
        if self.b.size != m or self.x0.size != n:
            raise ValueError("b or x0 has the wrong length")
        if np.any(self.x0 <= 0):
            raise ValueError("declared interior point must be positive")
        res = np.linalg.norm(self.A @ self.x0 - self.b)
        if res > 1e-9 * (1.0 + np.linalg.norm(self.b)):
            raise ValueError(f"declared interior point infeasible (||Ax-b||={res:.3e})")
        # full row rank check; raises RankDeficiencyError otherwise
        nullspace_basis(self.A, self.x0)
        self.oracle = _make_oracle(self.objective)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]


def _quartic_oracle(sigma: float, Q: np.ndarray, c: np.ndarray) -> Oracle:
    def feval(x):
        return float(0.25 * sigma * np.sum(x ** 4) + 0.5 * (x @ (Q @ x)) + c @ x)

    def fgrad(x):
        return sigma * x ** 3 + Q @ x + c

    def fhess(x):
        H = Q.copy()
        H[np.diag_indices_from(H)] += 3.0 * sigma * x ** 2
        return H

    return Oracle(eval=feval, grad=fgrad, hess=fhess)


def _fig_oracle(quartic_coeff: float) -> Oracle:
    """3-variable demonstration objective on the unit simplex.

    ``f(x) = 40 (x0 - 1/2)^2 - 5 u^2 + quartic_coeff * u^4`` with
    ``u = x1 - x2``: a bowl in ``x0`` crossed with a double well in ``u``
    whose ridge at ``u = 0`` is a saddle of the constrained problem.
    """

    def feval(x):
        u = x[1] - x[2]
        return float(40.0 * (x[0] - 0.5) ** 2 - 5.0 * u * u + quartic_coeff * u ** 4)

    def fgrad(x):
        u = x[1] - x[2]
        gu = -10.0 * u + 4.0 * quartic_coeff * u ** 3
        return np.array([80.0 * (x[0] - 0.5), gu, -gu])

    def fhess(x):
        u = x[1] - x[2]
        guu = -10.0 + 12.0 * quartic_coeff * u * u
        return np.array([[80.0, 0.0, 0.0], [0.0, guu, -guu], [0.0, -guu, guu]])

    return Oracle(eval=feval, grad=fgrad, hess=fhess)


def _make_oracle(spec: ObjectiveSpec) -> Oracle:
    if spec.kind == "builtin-fig1":
        return _fig_oracle(4.0)
    if spec.kind == "builtin-fig2":
        return _fig_oracle(20.0)
    if spec.kind in ("quartic", "concave-quadratic"):
        if spec.Q is None or spec.c is None:
            raise ValueError(f"objective kind {spec.kind!r} needs Q and c")
        Q = np.asarray(spec.Q, dtype=float)
        if not np.allclose(Q, Q.T, atol=1e-10 * (1 + np.abs(Q).max())):
            raise ValueError("Q must be symmetric")
        return _quartic_oracle(spec.sigma, Q, np.asarray(spec.c, dtype=float))
    raise ValueError(f"unknown objective kind {spec.kind!r}")


# Built-in constants were measured on the sublevel region {f <= 1.6} that
# solves from the canonical start actually visit (dense grid plus random
# scaled probes), with a 1.3x margin.  The lower bounds are the exact
# minima of the separable u-polynomials, which bound f on the whole
# simplex.

def builtin_fig1() -> ProblemInstance:
    """3-variable double-well instance whose wells sit outside the simplex.

    Constrained minima therefore lie on the boundary; the interior saddle
    is at ``(1/2, 1/4, 1/4)``.
    """
    return ProblemInstance(
        A=np.ones((1, 3)),
        b=np.array([1.0]),
        objective=ObjectiveSpec(kind="builtin-fig1"),
        constants=RegularityConstants(l=54.0, rho=14.0, l_phi=17.0, gamma=1.0),
        x0=np.array([1.0, 1.0, 1.0]) / 3.0,
        f_lower_bound=-1.5625,
    )


def builtin_fig2() -> ProblemInstance:
    """3-variable double-well instance with interior minima.

    The constrained minima are ``(1/2, 1/4 + w, 1/4 - w)`` and its swap
    with ``w = sqrt(1/8)/2``; the interior saddle is ``(1/2, 1/4, 1/4)``.
    """
    return ProblemInstance(
        A=np.ones((1, 3)),
        b=np.array([1.0]),
        objective=ObjectiveSpec(kind="builtin-fig2"),
        constants=RegularityConstants(l=54.0, rho=54.0, l_phi=16.5, gamma=1.0),
        x0=np.array([1.0, 1.0, 1.0]) / 3.0,
        f_lower_bound=-0.3125,
    )


def _draw_constraints(n: int, m: int, rng: np.random.Generator,
                      max_retries: int = 50) -> np.ndarray:
    """First row is the normalized all-ones vector (bounds the feasible set);
    the rest are uniform(0,1) rows, redrawn until full row rank."""
    row0 = np.ones(n) / math.sqrt(n)
    for _ in range(max_retries):
        A = np.vstack([row0, rng.uniform(0.0, 1.0, size=(m - 1, n))]) \
            if m > 1 else row0.reshape(1, n)
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] > 1e-10 * s[0]:
            return A
    raise RankDeficiencyError(f"could not draw a full-row-rank {m}x{n} matrix")


def _plant_negative_curvature(Q: np.ndarray, A: np.ndarray, x0: np.ndarray,
                              sigma: float) -> np.ndarray:
    """Shift ``Q`` by a rank-one term so the scaled projected Hessian at
    ``x0`` has minimum eigenvalue at most -1.

    The shift direction is a unit vector in ``ker(A)``, so feasible
    curvature is affected and the constraint geometry is not.
    """
    Z = nullspace_basis(A, x0)
    H0 = Q.copy()
    H0[np.diag_indices_from(H0)] += 3.0 * sigma * x0 ** 2
    S = (Z.T * x0) @ H0 @ (x0[:, None] * Z)
    lam, u = symmetric_min_eig(S)
    w_scaled = Z @ u                      # unit vector in ker(A X0)
    v = x0 * w_scaled                     # direction in ker(A)
    vnorm = np.linalg.norm(v)
    v /= vnorm
    s = (lam + 1.0) / (vnorm * vnorm)
    return Q - s * np.outer(v, v)


def _crude_lower_bound(spec: ObjectiveSpec, A: np.ndarray, b: np.ndarray) -> float:
    """Rigorous (loose) lower bound of f over the feasible set.

    Row 0 of ``A`` is ones/sqrt(n), so the feasible set satisfies
    ``sum(x) = sqrt(n) b_0`` and hence ``||x||_2 <= sqrt(n) b_0``.
    """
    n = A.shape[1]
    span = math.sqrt(n) * b[0]
    qnorm = np.linalg.norm(spec.Q, ord="fro")
    cnorm = np.linalg.norm(spec.c)
    return float(-(0.5 * qnorm * span * span + cnorm * span))


def gen_quartic(n: int, m: int, sigma: float, seed: int,
                constant_samples: int = 24) -> ProblemInstance:
    """Random quartic instance with a planted interior saddle.

    The objective is ``sum_i sigma/4 x_i^4 + x'Qx/2 + c'x``.  ``Q`` starts
    as a normalized symmetric Gaussian matrix and receives a rank-one shift
    that forces curvature at most -1 on the feasible subspace at the drawn
    interior point ``x0``; ``c`` then cancels the gradient at ``x0``, so
    ``x0`` is a stationary point that is not second-order optimal.
    """
    if not (1 <= m <= n):
        raise ValueError("need 1 <= m <= n")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    A = _draw_constraints(n, m, rng)
    x0 = rng.uniform(0.5, 1.5, size=n)
    b = A @ x0
    G = rng.standard_normal((n, n))
    Q = (G + G.T) / (2.0 * math.sqrt(n))
    Q = _plant_negative_curvature(Q, A, x0, sigma)
    c = -(Q @ x0 + sigma * x0 ** 3)
    spec = ObjectiveSpec(kind="quartic", sigma=float(sigma), Q=Q, c=c)
    inst = ProblemInstance(
        A=A, b=b, objective=spec,
        constants=RegularityConstants(l=1.0, rho=1.0, l_phi=1.0),
        x0=x0,
        f_lower_bound=_crude_lower_bound(spec, A, b),
        recipe={"kind": "quartic", "seed": int(seed), "sigma": float(sigma)},
    )
    inst.constants = estimate_constants(inst, samples=constant_samples, seed=seed)
    return inst


def gen_concave(n: int, m: int, seed: int,
                constant_samples: int = 24) -> ProblemInstance:
    """Random concave quadratic instance: ``Q = -G'G/n`` (negative
    semidefinite) and a random unit linear term."""
    if not (1 <= m <= n):
        raise ValueError("need 1 <= m <= n")
    rng = np.random.default_rng(seed)
    A = _draw_constraints(n, m, rng)
    x0 = rng.uniform(0.5, 1.5, size=n)
    b = A @ x0
    G = rng.standard_normal((n, n))
    Q = -(G.T @ G) / n
    Q = 0.5 * (Q + Q.T)
    c = rng.standard_normal(n)
    c /= np.linalg.norm(c)
    spec = ObjectiveSpec(kind="concave-quadratic", sigma=0.0, Q=Q, c=c)
    inst = ProblemInstance(
        A=A, b=b, objective=spec,
        constants=RegularityConstants(l=1.0, rho=1.0, l_phi=1.0),
        x0=x0,
        f_lower_bound=_crude_lower_bound(spec, A, b),
        recipe={"kind": "concave", "seed": int(seed), "sigma": 0.0},
    )
    inst.constants = estimate_constants(inst, samples=constant_samples, seed=seed)
    return inst


def _feasible_walk(inst: ProblemInstance, samples: int,
                   rng: np.random.Generator) -> tuple[list, list]:
    """Hit-and-run walk over the strict interior of ``{Ax=b, x>0}``.

    Each step draws a random direction of ``ker(A)`` and jumps to a uniform
    point of the open feasible chord through the current point, so the
    sample cloud spreads over the whole polytope rather than a local
    neighbourhood.  Returns the points and, for each, the scaled
    displacement ``d = x_new / x_old - 1`` from its predecessor.
    """
    N = nullspace_basis(inst.A, np.ones(inst.n))
    x = inst.x0.copy()
    pts, steps = [x], [None]
    for _ in range(samples - 1):
        p = N @ rng.standard_normal(N.shape[1])
        p /= np.linalg.norm(p)
        with np.errstate(divide="ignore"):
            ratios = -x / p
        t_hi = np.min(ratios[p < 0.0]) if np.any(p < 0.0) else 1.0
        t_lo = np.max(ratios[p > 0.0]) if np.any(p > 0.0) else -1.0
        t = 0.98 * rng.uniform(t_lo, t_hi)
        x_new = x + t * p
        pts.append(x_new)
        steps.append(x_new / x - 1.0)
        x = x_new
    return pts, steps


def _scaled_hessian_norm_fd(inst: ProblemInstance, x: np.ndarray) -> float:
    H = fd_hessian_from_grad(inst.oracle.grad, x)
    H = 0.5 * (H + H.T)
    return float(np.linalg.norm((H * x) * x[:, None], ord=2))


def _scaled_hessian_norm_power(inst: ProblemInstance, x: np.ndarray,
                               rng: np.random.Generator,
                               iters: int = 30) -> float:
    grad = inst.oracle.grad
    v = rng.standard_normal(x.size)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = x * fd_hvp_from_grad(grad, x, x * v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam = abs(v @ w)
        v = w / nw
    return float(lam)


def estimate_constants(instance: ProblemInstance, samples: int = 24,
                       seed: int = 0) -> RegularityConstants:
    """Sample-based bootstrap of the regularity constants.

    Walks the strict interior along feasible scaled displacements, takes
    running maxima of the scaled Hessian norm (finite differences of the
    gradient; a matrix-free power estimate above n = 256), of divided
    Hessian differences along the walk steps, and of the scaled potential
    gradient over the barrier weights in (0, 1]; each maximum gets a 1.5x
    margin.  Estimates are monotone in ``samples`` for a fixed seed.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng((seed, 0xC0575A))
    grad = instance.oracle.grad
    pts, steps = _feasible_walk(instance, samples, rng)

    dense = instance.n <= 256
    l_max, lphi_max, rho_max = 0.0, 0.0, 1e-6
    prev_H = None
    for k, x in enumerate(pts):
        # pairs whose scaled displacement leaves the unit neighbourhood say
        # nothing about the declared Lipschitz modulus; skip them for rho
        d = steps[k]
        pair_ok = d is not None and np.linalg.norm(d) <= 1.0
        if dense:
            H = fd_hessian_from_grad(grad, x)
            H = 0.5 * (H + H.T)
            scaled = (H * x) * x[:, None]
            l_max = max(l_max, float(np.linalg.norm(scaled, ord=2)))
            if prev_H is not None and pair_ok:
                xprev = pts[k - 1]
                diff = ((H - prev_H) * xprev) * xprev[:, None]
                rho_max = max(rho_max, float(np.linalg.norm(diff, ord=2))
                              / np.linalg.norm(d))
            prev_H = H
        else:
            l_max = max(l_max, _scaled_hessian_norm_power(instance, x, rng))
            if k > 0 and pair_ok:
                xprev = pts[k - 1]
                for _ in range(3):
                    v = rng.standard_normal(x.size)
                    v /= np.linalg.norm(v)
                    hv_new = fd_hvp_from_grad(grad, x, xprev * v)
                    hv_old = fd_hvp_from_grad(grad, xprev, xprev * v)
                    rho_max = max(rho_max,
                                  float(np.linalg.norm(xprev * (hv_new - hv_old)))
                                  / np.linalg.norm(d))
        xg = x * grad(x)
        lphi_max = max(lphi_max,
                       float(np.linalg.norm(xg)),
                       float(np.linalg.norm(xg - 1.0)))

    return RegularityConstants(
        l=max(1.5 * l_max, 1e-6),
        rho=max(1.5 * rho_max, 1e-6),
        l_phi=max(1.5 * lphi_max, 1e-6),
        gamma=1.0,
    )


# ---------------------------------------------------------------------------
# instance files (JSON; float round-trips are exact via shortest repr)

def save_instance(instance: ProblemInstance, path, dense: bool = False) -> None:
    """Write an instance file.

    Generated instances carry their ``(kind, seed, sigma)`` recipe and are
    re-materialized on load (bit-identical by seeding); ``dense=True``
    forces explicit arrays instead.
    """
    doc: dict = {"n": instance.n, "m": instance.m}
    if instance.recipe is not None and not dense:
        doc["generator"] = dict(instance.recipe)
    else:
        doc["A"] = instance.A.tolist()
        doc["b"] = instance.b.tolist()
        obj: dict = {"kind": instance.objective.kind}
        if instance.objective.kind in ("quartic", "concave-quadratic"):
            obj["sigma"] = instance.objective.sigma
            obj["Q"] = instance.objective.Q.tolist()
            obj["c"] = instance.objective.c.tolist()
        doc["objective"] = obj
        c = instance.constants
        doc["constants"] = {"l": c.l, "rho": c.rho, "l_phi": c.l_phi,
                            "gamma": c.gamma}
        doc["x0"] = instance.x0.tolist()
        doc["f_lower_bound"] = instance.f_lower_bound
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_instance(path) -> ProblemInstance:
    with open(path) as fh:
        doc = json.load(fh)
    if "generator" in doc:
        g = doc["generator"]
        if g["kind"] == "quartic":
            return gen_quartic(doc["n"], doc["m"], g.get("sigma", 0.0), g["seed"])
        if g["kind"] == "concave":
            return gen_concave(doc["n"], doc["m"], g["seed"])
        raise ValueError(f"unknown generator kind {g['kind']!r}")
    obj = doc["objective"]
    spec = ObjectiveSpec(
        kind=obj["kind"],
        sigma=obj.get("sigma", 0.0),
        Q=np.array(obj["Q"]) if "Q" in obj else None,
        c=np.array(obj["c"]) if "c" in obj else None,
    )
    cs = doc["constants"]
    return ProblemInstance(
        A=np.array(doc["A"]),
        b=np.array(doc["b"]),
        objective=spec,
        constants=RegularityConstants(l=cs["l"], rho=cs["rho"],
                                      l_phi=cs["l_phi"], gamma=cs["gamma"]),
        x0=np.array(doc["x0"]),
        f_lower_bound=doc.get("f_lower_bound", 0.0),
    )
