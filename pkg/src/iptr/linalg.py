"""Dense linear-algebra kernels shared by the interior-point solvers.

Matrices are plain 2-D float64 ``numpy`` arrays in row-major order; vectors
are 1-D arrays.  Throughout, ``A`` is an ``m x n`` constraint matrix with
full row rank (``m <= n``), ``x`` is a strictly positive iterate, and ``X``
denotes ``diag(x)``.  The central objects are

* the orthogonal projector ``P = I - X A^T (A X^2 A^T)^-1 A X`` onto the
  null space of ``A X``, and
* its cached, lazily-maintained counterpart
  ``R = I - X^-1 Xbar^2 A^T (A Xbar^2 A^T)^-1 A X`` built from a diagonal
  approximation ``Xbar`` of ``X``.

``R`` maps into ``ker(A X)`` for any ``Xbar > 0``; only its distance to
``P`` degrades as ``Xbar`` drifts from ``X``.  The inverse of
``A Xbar^2 A^T`` is held explicitly as a dense ``m x m`` array so that
rank-q updates can be applied in place via the Woodbury identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, lu_factor, lu_solve, null_space
from scipy.linalg.lapack import dpotrf, dpotri

__all__ = [
    "SingularSystemError",
    "RankDeficiencyError",
    "DegenerateUpdateError",
    "InverseCache",
    "build_inverse_cache",
    "project_exact",
    "apply_approx_projector",
    "woodbury_update",
    "multiplier_leastsquares",
    "nullspace_basis",
    "symmetric_min_eig",
]

# Full rebuild cadence for a maintained inverse: whichever comes first of a
# fixed update count or a consistency-probe residual breach.
REBUILD_EVERY = 4096
CONSISTENCY_TOL = 1e-6


class SingularSystemError(np.linalg.LinAlgError):
    """A scaled normal matrix ``A D A^T`` was numerically singular."""


class RankDeficiencyError(np.linalg.LinAlgError):
    """A constraint matrix fell short of full row rank."""


class DegenerateUpdateError(np.linalg.LinAlgError):
    """A Woodbury capacitance system was too ill-conditioned to use."""


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D constraint matrix, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ValueError("constraint matrix has non-finite entries")
    return A


def _require_positive(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0 or np.any(x <= 0.0) or not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be strictly positive and finite")
    return x


def _spd_inverse(K: np.ndarray) -> np.ndarray:
    """Explicit inverse of a symmetric positive definite matrix.

    Uses a Cholesky factorization so failures name the offending pivot.
    """
    cf, info = dpotrf(K, lower=1, overwrite_a=0)
    if info > 0:
        raise SingularSystemError(
            f"scaled normal matrix is not positive definite "
            f"(Cholesky pivot {info} of {K.shape[0]})"
        )
    if info < 0:
        raise ValueError(f"illegal value in argument {-info} of dpotrf")
    inv, info = dpotri(cf, lower=1)
    if info != 0:
        raise SingularSystemError(f"inversion failed on pivot {info}")
    # dpotri fills one triangle only
    inv = np.tril(inv) + np.tril(inv, -1).T
    return inv


@dataclass
class InverseCache:
    """Explicit inverse of ``A Xbar^2 A^T`` plus the diagonal it was built from.

    Attributes
    ----------
    kinv : ndarray, shape (m, m)
        Current value of ``(A Xbar^2 A^T)^-1``, kept symmetric.
    xbar_sq_diag : ndarray, shape (n,)
        Diagonal of ``Xbar^2`` (strictly positive).
    tol : float
        Consistency tolerance declared at construction; a cheap matvec
        probe of ``||K kinv y - y|| / ||y||`` above this forces a rebuild.
    updates_since_rebuild : int
    """

    kinv: np.ndarray
    xbar_sq_diag: np.ndarray
    tol: float = CONSISTENCY_TOL
    updates_since_rebuild: int = 0
    rebuilt_last_update: bool = field(default=False, repr=False)

    @property
    def m(self) -> int:
        return self.kinv.shape[0]

    @property
    def n(self) -> int:
        return self.xbar_sq_diag.shape[0]


def build_inverse_cache(A, xbar, tol: float = CONSISTENCY_TOL) -> InverseCache:
    """Form ``(A Xbar^2 A^T)^-1`` directly and wrap it in a cache."""
    A = _as_matrix(A)
    xbar = _require_positive(xbar, "xbar")
    xbar_sq = xbar * xbar
    K = (A * xbar_sq) @ A.T
    kinv = _spd_inverse(K)
    return InverseCache(kinv=kinv, xbar_sq_diag=xbar_sq, tol=tol,
                        rebuilt_last_update=True)


def project_exact(A, x, g) -> np.ndarray:
    """Apply the orthogonal projector onto ``ker(A X)`` to ``X g``.

    Returns ``p = P X g`` with ``A X p = 0``; ``p`` is the orthogonal
    projection of ``X g`` onto the null space of ``A X``.

    Raises
    ------
    SingularSystemError
        If ``A X^2 A^T`` is numerically singular (rank-deficient ``A``).
    """
    A = _as_matrix(A)
    x = _require_positive(x)
    g = np.asarray(g, dtype=float).ravel()
    if A.shape[1] != x.size or g.size != x.size:
        raise ValueError("dimension mismatch between A, x and g")
    z = x * g
    B = A * x
    K = B @ B.T
    cf, info = dpotrf(K, lower=1)
    if info > 0:
        raise SingularSystemError(
            f"A X^2 A^T singular at Cholesky pivot {info} of {K.shape[0]}"
        )
    y = _cho_solve_lower(cf, A @ (x * z))
    return z - x * (A.T @ y)


def _cho_solve_lower(cf: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    from scipy.linalg.lapack import dpotrs

    sol, info = dpotrs(cf, rhs.reshape(cf.shape[0], -1), lower=1)
    if info != 0:
        raise SingularSystemError(f"triangular solve failed (info={info})")
    return sol.ravel() if rhs.ndim == 1 else sol


def apply_approx_projector(A, x, cache: InverseCache, g) -> np.ndarray:
    """Apply the cached projector ``R`` to ``X g``.

    Computes ``r = R X g`` where
    ``R = I - X^-1 Xbar^2 A^T (A Xbar^2 A^T)^-1 A X``.  The result lies in
    ``ker(A X)`` for any positive ``Xbar``; one refinement pass squares the
    kernel residual contributed by drift in the maintained inverse, so
    feasibility holds to machine precision rather than cache precision.
    """
    A = _as_matrix(A)
    x = _require_positive(x)
    g = np.asarray(g, dtype=float).ravel()
    if cache.n != x.size or g.size != x.size or cache.m != A.shape[0]:
        raise ValueError("dimension mismatch between A, x, g and cache")
    scale = cache.xbar_sq_diag / x
    z = x * g
    r = z - scale * (A.T @ (cache.kinv @ (A @ (x * z))))
    r -= scale * (A.T @ (cache.kinv @ (A @ (x * r))))
    if not np.all(np.isfinite(r)):
        raise FloatingPointError(
            "approximate projector produced non-finite values; "
            "the inverse cache is corrupted and must be rebuilt"
        )
    return r


def woodbury_update(cache: InverseCache, A, changed_indices,
                    new_xbar_values) -> InverseCache:
    """Fold a sparse diagonal change of ``Xbar`` into the cached inverse.

    ``changed_indices`` lists the ``q`` coordinates of ``xbar`` that take
    the strictly positive values ``new_xbar_values``.  For ``q <= m`` the
    inverse is corrected in place through the Woodbury identity with
    identity-column factors; for ``q > m`` re-forming ``A Xbar^2 A^T`` and
    inverting it directly is cheaper, so that path is taken.  The cache is
    consumed and returned.

    Raises
    ------
    DegenerateUpdateError
        When the capacitance matrix is numerically singular; the caller
        should rebuild the cache directly.
    """
    A = _as_matrix(A)
    idx = np.asarray(changed_indices, dtype=np.intp).ravel()
    cache.rebuilt_last_update = False
    if idx.size == 0:
        return cache
    vals = _require_positive(new_xbar_values, "new_xbar_values")
    if vals.size != idx.size:
        raise ValueError("changed_indices and new_xbar_values disagree")
    new_sq = vals * vals
    diff = new_sq - cache.xbar_sq_diag[idx]
    live = diff != 0.0
    idx, diff, new_sq = idx[live], diff[live], new_sq[live]
    q, m = idx.size, cache.m
    if q == 0:
        return cache

    if q > m:
        cache.xbar_sq_diag[idx] = new_sq
        return _rebuild(cache, A)

    U = A[:, idx]                      # m x q
    T1 = cache.kinv @ U                # m x q
    S = U.T @ T1
    S[np.diag_indices(q)] += 1.0 / diff
    try:
        lu = lu_factor(S)
    except np.linalg.LinAlgError as exc:
        raise DegenerateUpdateError(
            "capacitance matrix singular; rebuild the cache directly"
        ) from exc
    if not np.all(np.isfinite(lu[0])):
        raise DegenerateUpdateError(
            "capacitance matrix produced non-finite factors"
        )
    cache.kinv -= T1 @ lu_solve(lu, T1.T)
    # symmetry drift accumulates over thousands of updates; pin it down
    cache.kinv += cache.kinv.T
    cache.kinv *= 0.5
    cache.xbar_sq_diag[idx] = new_sq
    cache.updates_since_rebuild += 1

    if cache.updates_since_rebuild >= REBUILD_EVERY or \
            _consistency_residual(cache, A) > cache.tol:
        return _rebuild(cache, A)
    return cache


def _rebuild(cache: InverseCache, A: np.ndarray) -> InverseCache:
    K = (A * cache.xbar_sq_diag) @ A.T
    cache.kinv = _spd_inverse(K)
    cache.updates_since_rebuild = 0
    cache.rebuilt_last_update = True
    return cache


def _consistency_residual(cache: InverseCache, A: np.ndarray) -> float:
    """Matvec probe of ``||K kinv y - y|| / ||y||`` with a fixed unit y."""
    m = cache.m
    y = np.full(m, 1.0 / np.sqrt(m))
    ky = A @ (cache.xbar_sq_diag * (A.T @ (cache.kinv @ y)))
    return float(np.linalg.norm(ky - y))


def multiplier_leastsquares(A, x, w, cache: InverseCache | None = None) -> np.ndarray:
    """Least-squares multiplier: minimize ``||w + X A^T v||_2`` over ``v``.

    With ``cache=None`` the normal equations use a fresh ``(A X^2 A^T)^-1``;
    otherwise the cached ``(A Xbar^2 A^T)^-1`` stands in for it.
    """
    A = _as_matrix(A)
    x = _require_positive(x)
    w = np.asarray(w, dtype=float).ravel()
    if A.shape[1] != x.size or w.size != x.size:
        raise ValueError("dimension mismatch between A, x and w")
    rhs = A @ (x * w)
    if cache is None:
        B = A * x
        K = B @ B.T
        cf, info = dpotrf(K, lower=1)
        if info > 0:
            raise SingularSystemError(
                f"A X^2 A^T singular at Cholesky pivot {info} of {K.shape[0]}"
            )
        return -_cho_solve_lower(cf, rhs)
    return -(cache.kinv @ rhs)


def nullspace_basis(A, x) -> np.ndarray:
    """Orthonormal basis ``Z`` of ``ker(A X)`` with ``n - m`` columns.

    Raises
    ------
    RankDeficiencyError
        If ``A X`` (equivalently ``A``) is not of full row rank; the error
        names the estimated rank.
    """
    A = _as_matrix(A)
    x = _require_positive(x)
    m, n = A.shape
    Z = null_space(A * x)
    if Z.shape[1] != n - m:
        raise RankDeficiencyError(
            f"constraint matrix has estimated rank {n - Z.shape[1]} < {m}"
        )
    return Z


def symmetric_min_eig(H) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector of a symmetric matrix.

    ``H`` must be symmetric to within ``1e-8`` relative; it is symmetrized
    before the dense eigensolve so the residual ``||H v - lam v||`` stays
    below ``1e-7 ||H||``.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H must be square")
    scale = np.linalg.norm(H, ord="fro")
    if scale > 0 and np.linalg.norm(H - H.T, ord="fro") > 1e-8 * scale:
        raise ValueError("H is not symmetric within tolerance")
    Hs = 0.5 * (H + H.T)
    vals, vecs = eigh(Hs, subset_by_index=[0, 0])
    v = vecs[:, 0]
    return float(vals[0]), v / np.linalg.norm(v)
