"""How the lazily-maintained projector tracks the exact one.

The solvers need the orthogonal projector onto ker(A X) at every iterate x.
Rebuilding it is the per-iteration bottleneck, so instead we keep a diagonal
approximation xbar of x, refresh only coordinates whose logs drifted, and
fold each sparse refresh into the cached inverse of A Xbar^2 A' with a
rank-q correction.  Three facts make this safe, and this script shows each:

1. the cached projector maps into ker(A X) *exactly*, however stale xbar is;
2. its operator distance to the exact projector is bounded by 46 delta when
   xbar is within e^{+-delta} of x;
3. the tracker keeps max_i |ln xbar_i - ln x_i| <= delta while refreshing
   only a handful of coordinates per step.
"""

import numpy as np

from iptr import (apply_approx_projector, build_inverse_cache, project_exact,
                  tracker_advance, tracker_init, woodbury_update)

rng = np.random.default_rng(0)
n, m = 40, 15
A = rng.standard_normal((m, n))
x = rng.uniform(0.5, 1.5, n)

# --- 1. feasibility is exact for any positive xbar ------------------------
xbar = x * np.exp(rng.uniform(-0.3, 0.3, n))   # a badly stale approximation
cache = build_inverse_cache(A, xbar)
g = rng.standard_normal(n)
r = apply_approx_projector(A, x, cache, g)
print("kernel residual with a stale cache:",
      np.linalg.norm(A @ (x * r)) / (np.linalg.norm(A) * np.linalg.norm(x * g)))

# --- 2. operator distance scales with the tracking tolerance --------------
for delta in (0.05, 0.01, 0.001):
    xbar = x * np.exp(rng.uniform(-delta, delta, n))
    B = A * x
    P = np.eye(n) - (x[:, None] * A.T) @ np.linalg.solve(B @ B.T, B)
    xbsq = xbar ** 2
    R = np.eye(n) - ((xbsq / x)[:, None] * A.T) @ np.linalg.solve(
        (A * xbsq) @ A.T, A * x)
    print(f"delta={delta:<6} ||R-P|| = {np.linalg.norm(R - P, 2):.5f}"
          f"   (bound 46*delta = {46 * delta:.3f})")

# --- 3. the tracker refreshes sparsely while honoring the contract --------
delta = 0.01
tracker = tracker_init(x, delta)
cache = build_inverse_cache(A, x)
ln_x = np.log(x)
refresh_counts = []
for t in range(256):
    step = rng.standard_normal(n)
    step *= 0.002 / np.linalg.norm(step)
    ln_x = ln_x + step
    x = np.exp(ln_x)
    rs = tracker_advance(tracker, x)
    cache = woodbury_update(cache, A, rs.indices, tracker.xbar[rs.indices])
    refresh_counts.append(len(rs))
    assert np.max(np.abs(tracker.ln_xbar - ln_x)) <= delta

direct = np.linalg.inv((A * tracker.xbar ** 2) @ A.T)
print(f"\nafter 256 tracked steps: mean refreshes/step = "
      f"{np.mean(refresh_counts):.2f} of n = {n}")
print("maintained inverse vs direct inversion:",
      np.linalg.norm(cache.kinv - direct) / np.linalg.norm(direct))
print("projector through the maintained cache still matches the exact one:",
      np.linalg.norm(apply_approx_projector(A, x, cache, g)
                     - project_exact(A, x, g)))
