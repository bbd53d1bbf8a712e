"""Certifying candidate points: first- and second-order KKT reports.

A report measures four things at a candidate x > 0 with Ax = b:
stationarity ||X(grad f + A'v)||_inf with the least-squares multiplier v,
the dual slack min_i (grad f + A'v)_i, the feasibility residual, and the
minimum eigenvalue of the scaled Hessian restricted to ker(A X), obtained
from finite differences of the gradient alone.  Certification flags are
derived from the stored residuals, never stored separately.
"""

import numpy as np

from iptr import builtin_fig2, check_kkt1, check_kkt2, gen_quartic

inst = builtin_fig2()
eps = 0.04
w = np.sqrt(0.125) / 2.0
points = {
    "analytic center": np.ones(3) / 3.0,
    "saddle": np.array([0.5, 0.25, 0.25]),
    "minimum": np.array([0.5, 0.25 + w, 0.25 - w]),
}

print(f"{'point':>16} | {'stat_inf':>9} {'dual_min':>9} "
      f"{'min_eig':>8} | kkt1  kkt2")
for name, x in points.items():
    rep = check_kkt2(inst, x, eps)
    print(f"{name:>16} | {rep.stationarity_inf:9.4f} {rep.dual_min:9.4f} "
          f"{rep.projected_min_eig:8.3f} | {str(rep.kkt1_certified):>5} "
          f"{str(rep.kkt2_certified):>5}")

print("\nthresholds: stationarity <= 2 eps =", 2 * eps,
      ", curvature >= -sqrt(eps) =", round(-np.sqrt(eps), 3))

# a generated instance plants a first-order point with negative curvature:
# a saddle by construction, which the cheap check cannot distinguish
qinst = gen_quartic(24, 8, 1.0, 5)
cheap = check_kkt2(qinst, qinst.x0, 0.25, cheap=True)
full = check_kkt2(qinst, qinst.x0, 0.25)
print(f"\nplanted point of a random quartic instance (eps = 0.25):")
print(f"  cheap check: stationarity {cheap.stationarity_inf:.2e}, "
      f"curvature skipped -> kkt2 {cheap.kkt2_certified}")
print(f"  full check:  projected min-eig {full.projected_min_eig:.3f} "
      f"-> kkt1 {full.kkt1_certified}, kkt2 {full.kkt2_certified}")
