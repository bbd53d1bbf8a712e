"""Central finite-difference helpers built on value/gradient oracles."""

from __future__ import annotations

import numpy as np

__all__ = ["fd_gradient", "fd_hessian_from_grad", "fd_hvp_from_grad"]

# cube root of double-precision machine epsilon: the usual central-difference
# step scale for first derivatives of noisy-to-second-order quantities
_H_SCALE = float(np.finfo(float).eps ** (1.0 / 3.0))


def fd_gradient(func, x, rel_step: float = _H_SCALE) -> np.ndarray:
    """Central-difference gradient of a scalar function.

    Steps are scaled per coordinate by ``rel_step * max(|x_i|, 1e-8)``.
    """
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1e-8)
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        g[i] = (func(xp) - func(xm)) / (2.0 * h)
    return g


def fd_hessian_from_grad(grad, x, rel_step: float = _H_SCALE) -> np.ndarray:
    """Hessian via central differences of a gradient oracle.

    Column ``j`` is ``(grad(x + h_j e_j) - grad(x - h_j e_j)) / (2 h_j)``
    with ``h_j = rel_step * max(|x_j|, 1e-8)``.  The raw (possibly slightly
    asymmetric) matrix is returned; symmetrize at the call site if needed.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.empty((n, n))
    for j in range(n):
        h = rel_step * max(abs(x[j]), 1e-8)
        xp = x.copy(); xp[j] += h
        xm = x.copy(); xm[j] -= h
        H[:, j] = (grad(xp) - grad(xm)) / (2.0 * h)
    return H


def fd_hvp_from_grad(grad, x, p, rel_step: float = 1e-6) -> np.ndarray:
    """Hessian-vector product ``H(x) p`` via central gradient differences."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    pn = np.linalg.norm(p)
    if pn == 0.0:
        return np.zeros_like(x)
    h = rel_step * max(1.0, np.max(np.abs(x))) / pn
    return (grad(x + h * p) - grad(x - h * p)) / (2.0 * h)
