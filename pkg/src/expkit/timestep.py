"""Adaptive time stepping with an error controller and a cost controller.

The classical error controller picks the next step from the embedded error
estimate; on top of it, a cost-based controller watches how the per-step
iteration cost reacts to step-size changes and nudges dt towards the
cheaper regime. The applied step is the smaller of the two suggestions
once enough history exists.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StepFailure
from .integrators import INTEGRATOR_ORDER, EngineContext, make_linearized, take_step
from .linalg import CountingRhs, norm_l2
from .spectrum import RefreshPolicy, maybe_refresh

SAFETY = 0.9
GROWTH_CAP = 5.0
SHRINK_CAP = 0.2
ERR_FLOOR_FRAC = 1e-16

# cost controller constants
COST_ALPHA = 0.65241444
COST_BETA = 0.26862269
COST_LAMBDA = 1.37412002
COST_DELTA = 0.64446017

DT_INIT_FRAC = 1e-5
DT_MIN_FRAC = 1e-12


def traditional_dt(dt, err, tol, order):
    """Classical controller: dt * 0.9 * (tol/err)^(1/(order+1)), growth and
    shrink limited to a factor of 5."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    err = max(err, ERR_FLOOR_FRAC * tol)
    new = dt * SAFETY * (tol / err) ** (1.0 / (order + 1))
    return min(max(new, SHRINK_CAP * dt), GROWTH_CAP * dt)


def cost_dt(dt, dt_prev, cost, cost_prev):
    """Cost controller: scale dt by s = exp(-alpha*tanh(beta*Delta)) where
    Delta is the log-log slope of cost against step size; small moves are
    pushed out of the dead zone [delta, lambda)."""
    if dt <= 0 or dt_prev <= 0:
        raise ValueError("step sizes must be positive")
    if cost <= 0 or cost_prev <= 0:
        raise ValueError("costs must be positive")
    if dt == dt_prev:
        return COST_LAMBDA * dt
    delta = (math.log(cost) - math.log(cost_prev)) / (math.log(dt) - math.log(dt_prev))
    s = math.exp(-COST_ALPHA * math.tanh(COST_BETA * delta))
    if 1.0 <= s < COST_LAMBDA:
        s = COST_LAMBDA
    elif COST_DELTA <= s < 1.0:
        s = COST_DELTA
    return s * dt


@dataclass
class Trajectory:
    """Outcome of one adaptive integration."""

    u: np.ndarray
    t: float
    steps_accepted: int = 0
    steps_rejected: int = 0
    rhs_evals: int = 0
    leja_iters: int = 0
    krylov_matvecs: int = 0
    substeps: int = 0
    times: list = field(default_factory=list)
    dts: list = field(default_factory=list)


def _step_cost(rhs_before, rhs_after):
    return max(rhs_after - rhs_before, 1)


def adaptive_loop(rhs_fn, u0, t_final, integrator, scheme, tol, *,
                  jac_factory=None, ctx=None, refresh=None, dt_init=None,
                  max_steps=1_000_000, observer=None):
    """Integrate du/dt = f(u) from 0 to t_final with embedded error control.

    `observer(t, dt, sys, result)` is called after each accepted step and
    may be used for diagnostics. Raises StepFailure if dt underflows.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    rhs = rhs_fn if isinstance(rhs_fn, CountingRhs) else CountingRhs(rhs_fn)
    ctx = ctx if ctx is not None else EngineContext()
    refresh = refresh if refresh is not None else RefreshPolicy()
    order = INTEGRATOR_ORDER[integrator]

    u = np.array(u0, dtype=float, copy=True)
    t = 0.0
    dt = dt_init if dt_init is not None else DT_INIT_FRAC * t_final
    dt_min = DT_MIN_FRAC * t_final

    traj = Trajectory(u=u, t=t)
    need_spectrum = scheme in ("leja", "lekry")
    hist = []  # (dt, cost) for the last two accepted steps

    for _ in range(max_steps):
        if t >= t_final * (1.0 - 1e-14):
            break
        dt = min(dt, t_final - t)
        if dt < dt_min:
            raise StepFailure(
                f"step size underflow at t={t:.6g} (dt={dt:.3g})")

        rhs_before = rhs.counter.count
        sys = make_linearized(rhs, u, jac_factory=jac_factory)
        if need_spectrum:
            ctx.est = maybe_refresh(ctx.est, sys.J, refresh)

        try:
            result = take_step(integrator, sys, dt, scheme, tol, ctx)
        except StepFailure:
            traj.steps_rejected += 1
            if need_spectrum:
                ctx.est = maybe_refresh(ctx.est, sys.J, refresh, force=True)
            dt = 0.5 * dt
            continue

        st = result.stats
        traj.leja_iters += st.leja_iters
        traj.krylov_matvecs += st.krylov_matvecs
        traj.substeps += st.substeps

        if result.err_est <= tol:
            u = result.u_high
            t = t + dt
            traj.steps_accepted += 1
            traj.times.append(t)
            traj.dts.append(dt)
            # measure the step cost before the observer runs so observer
            # diagnostics cannot perturb the cost controller
            hist.append((dt, _step_cost(rhs_before, rhs.counter.count)))
            if observer is not None:
                observer(t, dt, sys, result)
            if len(hist) > 2:
                hist.pop(0)
            dt_err = traditional_dt(dt, result.err_est, tol, order)
            if len(hist) == 2:
                dt_cost = cost_dt(hist[1][0], hist[0][0],
                                  hist[1][1], hist[0][1])
                dt = min(dt_err, dt_cost)
            else:
                dt = dt_err
        else:
            traj.steps_rejected += 1
            if need_spectrum:
                ctx.est = maybe_refresh(ctx.est, sys.J, refresh, force=True)
            dt = traditional_dt(dt, result.err_est, tol, order)

    traj.u = u
    traj.t = t
    traj.rhs_evals = rhs.counter.count
    return traj


def fixed_step_loop(rhs_fn, u0, t_final, n_steps, integrator, scheme, tol, *,
                    jac_factory=None, ctx=None, refresh=None):
    """Integrate with n_steps equal steps and no error control; used for
    convergence measurements."""
    rhs = rhs_fn if isinstance(rhs_fn, CountingRhs) else CountingRhs(rhs_fn)
    ctx = ctx if ctx is not None else EngineContext()
    refresh = refresh if refresh is not None else RefreshPolicy()
    dt = t_final / n_steps
    need_spectrum = scheme in ("leja", "lekry")
    u = np.array(u0, dtype=float, copy=True)
    for _ in range(n_steps):
        sys = make_linearized(rhs, u, jac_factory=jac_factory)
        if need_spectrum:
            ctx.est = maybe_refresh(ctx.est, sys.J, refresh)
        result = take_step(integrator, sys, dt, scheme, tol, ctx)
        u = result.u_high
    return u
