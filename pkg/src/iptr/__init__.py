"""Interior-point trust-region solvers for nonconvex minimization over
``{A x = b, x >= 0}``.

Exact and lazily-maintained approximate first-order methods, a
gradient-only negative-curvature escape routine producing approximate
second-order KKT points, and certification of both KKT levels.
"""

from .barrier import (CenterResult, PotentialContext, analytic_center,
                      barrier_step_bound_check, potential_eval, potential_grad,
                      scaled_potential_grad)
from .kkt import KktReport, check_kkt1, check_kkt2
from .lazyupdate import LazyTracker, RefreshSet, tracker_advance, tracker_init
from .linalg import (DegenerateUpdateError, InverseCache, RankDeficiencyError,
                     SingularSystemError, apply_approx_projector,
                     build_inverse_cache, multiplier_leastsquares,
                     nullspace_basis, project_exact, symmetric_min_eig,
                     woodbury_update)
from .negcurve import (CurvatureResult, NcfParams, ProbeOutsideOrthantError,
                       curvature_descent_step, default_ncf_params,
                       find_negative_curvature)
from .problems import (ObjectiveSpec, Oracle, ProblemInstance,
                       RegularityConstants, builtin_fig1, builtin_fig2,
                       estimate_constants, gen_concave, gen_quartic,
                       load_instance, save_instance)
from .solver_first import (IterTrace, SolveOutcome, SolverConfig,
                           solve_first_order, step_approx_first,
                           step_exact_first)
from .solver_second import (SecondOrderConfig, SecondOrderOutcome,
                            ncf_trigger_policy, solve_second_order)

__version__ = "0.1.0"
