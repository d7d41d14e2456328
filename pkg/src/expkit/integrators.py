"""Embedded exponential integrators with Leja / Krylov / hybrid stage groupings.

Each step linearizes du/dt = f(u) at u^n, treats the Jacobian part with
phi-function actions, and handles the nonlinearity through the remainder

    R(k) = f(k) - f(u^n) - J(u^n) (k - u^n),

which vanishes identically at k = u^n and for linear f. Five embedded
pairs are provided (EPIRK4s3, EPIRK4s3A, EPIRK5P1, EXPRB43, EXPRB53s3),
each with the stage grouping appropriate to the chosen engine:

* ``leja``  - phi-actions sharing an input vector are interpolated in one
  shared ("vertical") iteration; linear combinations are evaluated term by
  term.
* ``kiops`` - phi-actions sharing an input vector come from one Krylov
  solve with multiple output times; full linear combinations of
  phi-functions at a stage come from one augmented ("horizontal") solve.
* ``lekry`` - internal stages vertically via Leja, linear-combination
  stages horizontally via KIOPS. Only defined for EPIRK4s3, EPIRK4s3A and
  EXPRB53s3; the other two schemes have no linear-combination stage.

All dt powers from the tableaux are folded into the vectors handed to the
engines, so every engine call evaluates plain phi_l actions or their sums.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergence, StepFailure
from .kiops import kiops, kiops_eval
from .leja import get_leja_points, leja_interpolate_vertical
from .linalg import CountingRhs, MatrixFreeOperator, fd_jacobian_apply, norm_l2

INTEGRATORS = ("epirk4s3", "epirk4s3a", "epirk5p1", "exprb43", "exprb53s3")
SCHEMES = ("leja", "kiops", "lekry")
LEKRY_INTEGRATORS = frozenset({"epirk4s3", "epirk4s3a", "exprb53s3"})
INTEGRATOR_ORDER = {
    "epirk4s3": 4,
    "epirk4s3a": 4,
    "epirk5p1": 5,
    "exprb43": 4,
    "exprb53s3": 5,
}
EMBEDDED_ORDER = {
    "epirk4s3": 3,
    "epirk4s3a": 3,
    "epirk5p1": 4,
    "exprb43": 3,
    "exprb53s3": 3,
}

# EPIRK5P1 tableau (20-digit coefficients).
A11 = 0.35129592695058193092
A21 = 0.84405472011657126298
A22 = 1.6905891609568963624
B1 = 1.0
B2 = 1.2727127317356892397
B3 = 2.2714599265422622275
G11 = 0.35129592695058193092
G21 = 0.84405472011657126298
G22 = 0.5
G31 = 1.0
G32 = 0.71111095364366870359
G32_HAT = 0.5
G33 = 0.62378111953371494809
G33_HAT = 1.0


@dataclass
class LinearizedSystem:
    """Frozen linearization at u^n: cached f(u^n) and matrix-free Jacobian."""

    u_n: np.ndarray
    f_n: np.ndarray
    J: MatrixFreeOperator
    rhs: CountingRhs


def make_linearized(rhs: CountingRhs, u, jac_factory=None):
    """Linearize at u.

    `jac_factory(u)` may supply an exact Jacobian action; the default is a
    forward-difference approximation around the cached f(u).
    """
    f_n = rhs(u)
    if jac_factory is None:
        def apply_fn(v):
            if not np.any(v):
                return np.zeros_like(v)
            return fd_jacobian_apply(rhs, u, v, fu=f_n)
    else:
        apply_fn = jac_factory(u)
    J = MatrixFreeOperator(apply_fn, len(u), counter=rhs.counter,
                           charge_per_apply=0)
    return LinearizedSystem(u_n=u, f_n=f_n, J=J, rhs=rhs)


def remainder(sys: LinearizedSystem, k):
    """R(k) = f(k) - f(u^n) - J(u^n)(k - u^n); identically 0 at k = u^n."""
    if k.shape != sys.u_n.shape:
        raise ValueError("stage vector length mismatch")
    dk = k - sys.u_n
    if not np.any(dk):
        return np.zeros_like(k)
    out = sys.rhs(k) - sys.f_n - sys.J.apply(dk)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite nonlinear remainder")
    return out


@dataclass
class EngineContext:
    """Shared engine configuration and spectrum state for one step."""

    est: object = None          # SpectrumEstimate; required for leja/lekry
    xi: np.ndarray = None       # Leja sequence
    engine_tol_factor: float = 0.1
    leja_max_points: int = 400
    kiops_m_init: int = 10
    kiops_m_min: int = 10
    kiops_m_max: int = 128
    kiops_iop_len: int = 2

    def leja_points(self):
        if self.xi is None:
            self.xi = get_leja_points(self.leja_max_points)
        return self.xi


@dataclass
class StepStats:
    """Work accounting for one step attempt."""

    leja_iters: int = 0
    krylov_matvecs: int = 0
    substeps: int = 0
    internal_stage_iters: int = 0
    group_rhs_evals: dict = field(default_factory=dict)


@dataclass
class StepResult:
    u_high: np.ndarray
    err_est: float
    stats: StepStats


class _Engines:
    """Tracked engine calls; groups are labelled for per-stage accounting."""

    def __init__(self, sys, ctx, tol, stats):
        self.sys = sys
        self.ctx = ctx
        self.tol = tol * ctx.engine_tol_factor
        self.stats = stats

    def _charge(self, group, before):
        delta = self.sys.rhs.counter.count - before
        self.stats.group_rhs_evals[group] = (
            self.stats.group_rhs_evals.get(group, 0) + delta)

    def track_remainder(self, k):
        before = self.sys.rhs.counter.count
        r = remainder(self.sys, k)
        self._charge("remainder", before)
        return r

    def leja_vertical(self, group, b, l, coeffs, dt, internal=False):
        """{c_i -> phi_l(c_i*J*dt) b} via one shared Leja iteration."""
        ctx = self.ctx
        if ctx.est is None:
            raise StepFailure("Leja engine requires a spectrum estimate")
        uniq = sorted(set(coeffs))
        before = self.sys.rhs.counter.count
        try:
            res = leja_interpolate_vertical(
                self.sys.J, b, l, uniq, dt, ctx.est, self.tol,
                xi=ctx.leja_points(), max_points=ctx.leja_max_points)
        except NonConvergence as exc:
            self._charge(group, before)
            raise StepFailure(f"Leja non-convergence in group '{group}'",
                              cause=exc) from exc
        self._charge(group, before)
        self.stats.leja_iters += res.iters
        if internal:
            # only the genuinely internal coefficients count; 1.0 is the
            # full-step output that may share the group
            fi = [it for c, it in zip(uniq, res.freeze_iters) if c != 1.0]
            if fi:
                self.stats.internal_stage_iters = max(
                    self.stats.internal_stage_iters, max(fi))
        return dict(zip(uniq, res.vectors))

    def leja_single(self, group, b, l, dt):
        return self.leja_vertical(group, b, l, [1.0], dt)[1.0]

    def kiops_vertical(self, group, b, l, coeffs, dt, internal=False):
        """{c_i -> phi_l(c_i*J*dt) b} from one Krylov solve with several
        output times; the tau^l output scaling is divided back out."""
        uniq = sorted(set(coeffs))
        vectors = [np.zeros_like(b)] * l + [b]
        before = self.sys.rhs.counter.count
        try:
            ws, st = kiops(self.sys.J.scaled(dt), vectors, tau_out=uniq,
                           tol=self.tol, m_init=self.ctx.kiops_m_init,
                           m_min=self.ctx.kiops_m_min,
                           m_max=self.ctx.kiops_m_max,
                           iop_len=self.ctx.kiops_iop_len)
        except NonConvergence as exc:
            self._charge(group, before)
            raise StepFailure(f"KIOPS non-convergence in group '{group}'",
                              cause=exc) from exc
        self._charge(group, before)
        self.stats.krylov_matvecs += st.matvecs
        self.stats.substeps += st.substeps
        if internal:
            self.stats.internal_stage_iters = max(
                self.stats.internal_stage_iters, st.matvecs)
        return {c: w / c ** l for c, w in zip(uniq, ws)}

    def kiops_combo(self, group, vectors, dt):
        """sum_j phi_j(J*dt) v_j via one horizontal augmented solve."""
        before = self.sys.rhs.counter.count
        try:
            w, st = kiops_eval(self.sys.J, vectors, dt, self.tol,
                               m_init=self.ctx.kiops_m_init,
                               m_min=self.ctx.kiops_m_min,
                               m_max=self.ctx.kiops_m_max,
                               iop_len=self.ctx.kiops_iop_len)
        except NonConvergence as exc:
            self._charge(group, before)
            raise StepFailure(f"KIOPS non-convergence in group '{group}'",
                              cause=exc) from exc
        self._charge(group, before)
        self.stats.krylov_matvecs += st.matvecs
        self.stats.substeps += st.substeps
        return w

    def phi_vertical(self, scheme_vertical_is_leja, group, b, l, coeffs, dt,
                     internal=False):
        if scheme_vertical_is_leja:
            return self.leja_vertical(group, b, l, coeffs, dt, internal=internal)
        return self.kiops_vertical(group, b, l, coeffs, dt, internal=internal)


def _check_scheme(name, scheme):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme '{scheme}'")
    if scheme == "lekry" and name not in LEKRY_INTEGRATORS:
        raise ValueError(f"integrator '{name}' has no lekry scheme")


def _zeros_like(b):
    return np.zeros_like(b)


def _step_epirk4_family(sys, dt, scheme, tol, ctx, c1, c2, w3a, w3b, w4a, w4b):
    """Shared driver for EPIRK4s3 (c1=1/8, c2=1/9) and EPIRK4s3A (1/2, 2/3).

    u3 = u + phi_1(J dt) f dt + phi_3(J dt) r3 dt
    u4 = u3 + phi_4(J dt) r4 dt          (err_est = ||phi_4 term||)
    with r3 = w3a R(a) + w3b R(b) and r4 = w4a R(a) + w4b R(b).
    """
    stats = StepStats()
    eng = _Engines(sys, ctx, tol, stats)
    u, fdt = sys.u_n, sys.f_n * dt

    if scheme == "leja":
        phi1 = eng.leja_vertical("internal", fdt, 1, [c1, c2, 1.0], dt,
                                 internal=True)
    else:
        vert = eng.phi_vertical(scheme == "lekry", "internal", fdt, 1,
                                [c1, c2], dt, internal=True)
        phi1 = vert

    a = u + c1 * phi1[c1]
    b = u + c2 * phi1[c2]
    Ra = eng.track_remainder(a)
    Rb = eng.track_remainder(b)
    r3 = (w3a * Ra + w3b * Rb) * dt
    r4 = (w4a * Ra + w4b * Rb) * dt

    if scheme == "leja":
        t3 = eng.leja_single("stage3", r3, 3, dt)
        u3 = u + phi1[1.0] + t3
        t4 = eng.leja_single("err", r4, 4, dt)
    elif scheme == "kiops":
        z = _zeros_like(u)
        u3 = u + eng.kiops_combo("stage3", [z, fdt, z, r3], dt)
        t4 = eng.kiops_combo("err", [z, z, z, z, r4], dt)
    else:  # lekry: horizontal stage via KIOPS, error estimate via Leja
        z = _zeros_like(u)
        u3 = u + eng.kiops_combo("stage3", [z, fdt, z, r3], dt)
        t4 = eng.leja_single("err", r4, 4, dt)

    u4 = u3 + t4
    return StepResult(u_high=u4, err_est=norm_l2(t4), stats=stats)


def step_epirk4s3(sys, dt, scheme, tol, ctx):
    _check_scheme("epirk4s3", scheme)
    # r3 = 1892 R(a) + 1458 (R(b) - 2 R(a)); r4 = -42336 R(a) - 34992 (R(b) - 2 R(a))
    return _step_epirk4_family(sys, dt, scheme, tol, ctx,
                               c1=1.0 / 8.0, c2=1.0 / 9.0,
                               w3a=1892.0 - 2.0 * 1458.0, w3b=1458.0,
                               w4a=-42336.0 + 2.0 * 34992.0, w4b=-34992.0)


def step_epirk4s3a(sys, dt, scheme, tol, ctx):
    _check_scheme("epirk4s3a", scheme)
    return _step_epirk4_family(sys, dt, scheme, tol, ctx,
                               c1=0.5, c2=2.0 / 3.0,
                               w3a=32.0, w3b=-13.5,
                               w4a=-144.0, w4b=81.0)


def step_epirk5p1(sys, dt, scheme, tol, ctx):
    """Fifth-order EPIRK pair; every phi-action is part of a vertical group,
    so the scheme is either pure Leja or pure KIOPS."""
    _check_scheme("epirk5p1", scheme)
    stats = StepStats()
    eng = _Engines(sys, ctx, tol, stats)
    u, fdt = sys.u_n, sys.f_n * dt
    use_leja = scheme == "leja"

    g1 = eng.phi_vertical(use_leja, "internal", fdt, 1, [G11, G21, G31], dt,
                          internal=True)
    a = u + A11 * g1[G11]
    Ra = eng.track_remainder(a)
    v2 = Ra * dt
    g2 = eng.phi_vertical(use_leja, "stage2", v2, 1, [G22, G32_HAT, G32], dt)
    b = u + A21 * g1[G21] + A22 * g2[G22]
    Rb = eng.track_remainder(b)
    v3 = (-2.0 * Ra + Rb) * dt
    g3 = eng.phi_vertical(use_leja, "stage3", v3, 3, [G33, G33_HAT], dt)

    common = u + B1 * g1[G31]
    u4 = common + B2 * g2[G32_HAT] + B3 * g3[G33_HAT]
    u5 = common + B2 * g2[G32] + B3 * g3[G33]
    return StepResult(u_high=u5, err_est=norm_l2(u5 - u4), stats=stats)


def step_exprb43(sys, dt, scheme, tol, ctx):
    """Fourth-order exponential Rosenbrock pair with third-order estimate."""
    _check_scheme("exprb43", scheme)
    stats = StepStats()
    eng = _Engines(sys, ctx, tol, stats)
    u, fdt = sys.u_n, sys.f_n * dt
    z = _zeros_like(u)

    if scheme == "leja":
        phi1 = eng.leja_vertical("internal", fdt, 1, [0.5, 1.0], dt,
                                 internal=True)
        a = u + 0.5 * phi1[0.5]
        Ra = eng.track_remainder(a)
        tb = eng.leja_single("stage_b", Ra * dt, 1, dt)
        b = u + phi1[1.0] + tb
        Rb = eng.track_remainder(b)
        t3 = eng.leja_single("stage3", (16.0 * Ra - 2.0 * Rb) * dt, 3, dt)
        u3 = u + phi1[1.0] + t3
        t4 = eng.leja_single("err", (-48.0 * Ra + 12.0 * Rb) * dt, 4, dt)
    else:
        vert = eng.kiops_vertical("internal", fdt, 1, [0.5], dt, internal=True)
        a = u + 0.5 * vert[0.5]
        Ra = eng.track_remainder(a)
        b = u + eng.kiops_combo("stage_b", [z, fdt + Ra * dt], dt)
        Rb = eng.track_remainder(b)
        u3 = u + eng.kiops_combo("stage3",
                                 [z, fdt, z, (16.0 * Ra - 2.0 * Rb) * dt], dt)
        t4 = eng.kiops_combo("err",
                             [z, z, z, z, (-48.0 * Ra + 12.0 * Rb) * dt], dt)
    u4 = u3 + t4
    return StepResult(u_high=u4, err_est=norm_l2(t4), stats=stats)


def step_exprb53s3(sys, dt, scheme, tol, ctx):
    """Fifth-order exponential Rosenbrock pair with third-order estimate.

    err_est = ||u5 - u3|| where u3 is the embedded third-order solution.
    """
    _check_scheme("exprb53s3", scheme)
    stats = StepStats()
    eng = _Engines(sys, ctx, tol, stats)
    u, fdt = sys.u_n, sys.f_n * dt
    z = _zeros_like(u)
    vertical_leja = scheme in ("leja", "lekry")

    if scheme == "leja":
        phi1 = eng.leja_vertical("internal", fdt, 1, [0.5, 0.9, 1.0], dt,
                                 internal=True)
    else:
        phi1 = eng.phi_vertical(vertical_leja, "internal", fdt, 1, [0.5, 0.9],
                                dt, internal=True)
    a = u + 0.5 * phi1[0.5]
    Ra = eng.track_remainder(a)
    psi3 = eng.phi_vertical(vertical_leja, "internal_phi3", Ra * dt, 3,
                            [0.5, 0.9], dt, internal=True)
    b = (u + 0.9 * phi1[0.9]
         + (27.0 / 25.0) * psi3[0.5] + (729.0 / 125.0) * psi3[0.9])
    Rb = eng.track_remainder(b)

    v3 = (2.0 * Ra + (150.0 / 81.0) * Rb) * dt
    v5 = (18.0 * Ra - (250.0 / 81.0) * Rb) * dt
    v4 = (-60.0 * Ra + (500.0 / 27.0) * Rb) * dt

    if scheme == "leja":
        t3 = eng.leja_single("stage3", v3, 3, dt)
        u3 = u + phi1[1.0] + t3
        t5 = eng.leja_single("stage5_phi3", v5, 3, dt)
        t6 = eng.leja_single("stage5_phi4", v4, 4, dt)
        u5 = u + phi1[1.0] + t5 + t6
    else:
        u3 = u + eng.kiops_combo("stage3", [z, fdt, z, v3], dt)
        u5 = u + eng.kiops_combo("stage5", [z, fdt, z, v5, v4], dt)
    return StepResult(u_high=u5, err_est=norm_l2(u5 - u3), stats=stats)


STEP_FUNCTIONS = {
    "epirk4s3": step_epirk4s3,
    "epirk4s3a": step_epirk4s3a,
    "epirk5p1": step_epirk5p1,
    "exprb43": step_exprb43,
    "exprb53s3": step_exprb53s3,
}


def take_step(name, sys, dt, scheme, tol, ctx):
    if name not in STEP_FUNCTIONS:
        raise ValueError(f"unknown integrator '{name}'")
    if dt <= 0:
        raise ValueError("dt must be positive")
    return STEP_FUNCTIONS[name](sys, dt, scheme, tol, ctx)
