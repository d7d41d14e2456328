"""Matrix-free exponential integrator toolkit.

Leja interpolation and incomplete-orthogonalization Krylov engines for
phi-function actions, embedded exponential integrators built on them, and
an adaptive time stepper with a cost-based step controller.
"""

from .errors import NonConvergence, StepFailure
from .integrators import (EMBEDDED_ORDER, INTEGRATOR_ORDER, INTEGRATORS,
                          LEKRY_INTEGRATORS, SCHEMES, EngineContext,
                          StepResult, StepStats, make_linearized, remainder,
                          take_step)
from .kiops import kiops, kiops_eval
from .leja import (divided_differences, generate_leja_points, get_leja_points,
                   leja_interpolate, leja_interpolate_vertical)
from .linalg import (CountingRhs, EvalCounter, MatrixFreeOperator,
                     dense_expm, dense_phi, dense_phi_action,
                     fd_jacobian_apply, norm_l2)
from .problems import PROBLEMS, make_problem
from .spectrum import (RefreshPolicy, SpectrumEstimate, make_estimate,
                       maybe_refresh, power_iterate)
from .timestep import adaptive_loop, cost_dt, fixed_step_loop, traditional_dt

__version__ = "0.1.0"

__all__ = [
    "NonConvergence", "StepFailure",
    "EvalCounter", "CountingRhs", "MatrixFreeOperator", "norm_l2",
    "fd_jacobian_apply", "dense_expm", "dense_phi", "dense_phi_action",
    "SpectrumEstimate", "RefreshPolicy", "power_iterate", "make_estimate",
    "maybe_refresh",
    "generate_leja_points", "get_leja_points", "divided_differences",
    "leja_interpolate", "leja_interpolate_vertical",
    "kiops", "kiops_eval",
    "INTEGRATORS", "SCHEMES", "LEKRY_INTEGRATORS", "INTEGRATOR_ORDER",
    "EMBEDDED_ORDER", "EngineContext", "StepStats", "StepResult",
    "make_linearized", "remainder", "take_step",
    "traditional_dt", "cost_dt", "adaptive_loop", "fixed_step_loop",
    "PROBLEMS", "make_problem",
    "__version__",
]
