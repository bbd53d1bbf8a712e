"""First-order methods stall at a saddle; curvature escapes reach a minimum.

The 3-variable built-in lives on the unit simplex and has a saddle at
(1/2, 1/4, 1/4) flanked by two interior minima at (1/2, 1/4 +- w, 1/4 -+ w),
w = sqrt(1/8)/2.  Started from the analytic center (1/3, 1/3, 1/3):

* the plain first-order trust-region method rides the symmetric manifold
  straight into the saddle and certifies it as a first-order KKT point —
  its scaled projected Hessian still has a -1.25 eigenvalue;
* the same method with the gradient-only negative-curvature finder detects
  that eigenvalue from finite differences alone, steps across, and lands at
  a genuine second-order KKT point next to a minimum.
"""

import numpy as np

from iptr import (SecondOrderConfig, SolverConfig, builtin_fig2, check_kkt2,
                  solve_first_order, solve_second_order)

inst = builtin_fig2()
eps = 0.04
w = np.sqrt(0.125) / 2.0
minima = np.array([[0.5, 0.25 + w, 0.25 - w], [0.5, 0.25 - w, 0.25 + w]])

print("== plain first-order method ==")
out = solve_first_order(inst, SolverConfig(epsilon=eps, mode="exact"))
report = check_kkt2(inst, out.x_final, eps)
print(f"status: {out.status} after {out.iters} iterations")
print(f"terminal point: {np.round(out.x_final, 4)}")
print(f"first-order residual {report.stationarity_inf:.4f} <= {2*eps}"
      f"  -> kkt1 {report.kkt1_certified}")
print(f"projected curvature {report.projected_min_eig:.3f} < -sqrt(eps) ="
      f" {-np.sqrt(eps):.2f}  -> kkt2 {report.kkt2_certified} (saddle!)")

print("\n== with negative-curvature escapes ==")
for mode in ("exact", "approximate"):
    cfg = SecondOrderConfig(base=SolverConfig(epsilon=eps, mode=mode, seed=0))
    out2 = solve_second_order(inst, cfg)
    dist = min(np.max(np.abs(out2.x_final - m)) for m in minima)
    print(f"{mode:>12}: {out2.status} after {out2.iters} iterations, "
          f"{out2.ncf_invocations} curvature probes "
          f"({out2.ncf_successes} escapes), "
          f"distance to a minimum {dist:.4f}, "
          f"projected curvature {out2.kkt_report.projected_min_eig:+.3f}")

print("\nEvent log of the exact run (curvature events only):")
cfg = SecondOrderConfig(base=SolverConfig(epsilon=eps, mode="exact", seed=0))
out2 = solve_second_order(inst, cfg)
shown = 0
for rec in out2.trace:
    if rec.event.startswith("ncf"):
        print(f"  t={rec.t:5d}  {rec.event:28s} f={rec.f:+.6f}")
        shown += 1
        if shown >= 8:
            print("  ...")
            break
