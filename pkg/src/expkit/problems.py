"""Benchmark PDE problems, discretized with second-order centered differences.

All problems expose a right-hand-side callable on a flat state vector plus
an initial condition; two-component systems store the fields back to back
(component-major). Boundary handling:

* homogeneous Neumann - node-centered grid with h = L/(n-1); the ghost
  node mirrors the first interior node, which keeps the stencil symmetric
  and the discrete flux through the boundary zero.
* periodic            - h = L/n, nodes at i*h, wrap-around stencil.
* homogeneous Dirichlet - interior nodes only, h = L/(n+1), zero padding.

The nonautonomous semilinear problem carries time as an extra state
component with d/dt = 1, so every problem is autonomous from the
integrator's point of view.
"""

import numpy as np

PROBLEMS = ("adr", "allen_cahn", "brusselator", "gray_scott", "semilinear")

GS_A = 0.04
GS_B = 0.06


def _lap_neumann(f, h):
    p = np.pad(f, 1, mode="reflect")
    return (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
            - 4.0 * f) / h**2


def _grad_neumann(f, h):
    """Centered (d/dx + d/dy) with mirrored ghost nodes."""
    p = np.pad(f, 1, mode="reflect")
    gx = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2.0 * h)
    gy = (p[1:-1, 2:] - p[1:-1, :-2]) / (2.0 * h)
    return gx + gy


def _lap_periodic(f, h):
    p = np.pad(f, 1, mode="wrap")
    return (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
            - 4.0 * f) / h**2


class Problem:
    """A discretized initial-value problem du/dt = rhs(u)."""

    def __init__(self, name, rhs, u0, t_final, *, n, n_components=1,
                 extract=None, exact=None, params=None, jac_factory=None):
        self.name = name
        self.rhs = rhs
        self.u0 = u0
        self.t_final = t_final
        self.n = n
        self.n_components = n_components
        self.extract = extract if extract is not None else (lambda u: u)
        self.exact = exact
        self.params = dict(params or {})
        self.jac_factory = jac_factory


def _grid_neumann(n, lo, hi):
    h = (hi - lo) / (n - 1)
    x = lo + h * np.arange(n)
    return x, h


def adr_problem(alpha, n, beta=-10.0, gamma=100.0):
    """u_t = alpha*Lap(u) + beta*(u_x + u_y) + gamma*u*(1-u)*(u-1/2) on
    [0,1]^2 with homogeneous Neumann boundaries."""
    x, h = _grid_neumann(n, 0.0, 1.0)
    X, Y = np.meshgrid(x, x, indexing="ij")
    u0 = (256.0 * (X * Y * (1.0 - X) * (1.0 - Y))**2 + 0.3).ravel()

    def rhs(u):
        f = u.reshape(n, n)
        out = (alpha * _lap_neumann(f, h) + beta * _grad_neumann(f, h)
               + gamma * f * (1.0 - f) * (f - 0.5))
        return out.ravel()

    return Problem("adr", rhs, u0, 0.01, n=n,
                   params={"alpha": alpha, "beta": beta, "gamma": gamma})


def allen_cahn_problem(alpha, n):
    """u_t = alpha*Lap(u) + u - u^3 on [-1,1]^2, homogeneous Neumann."""
    x, h = _grid_neumann(n, -1.0, 1.0)
    X, Y = np.meshgrid(x, x, indexing="ij")
    u0 = (0.1 + 0.1 * np.cos(2.0 * np.pi * X) * np.cos(2.0 * np.pi * Y)).ravel()

    def rhs(u):
        f = u.reshape(n, n)
        out = alpha * _lap_neumann(f, h) + f - f**3
        return out.ravel()

    return Problem("allen_cahn", rhs, u0, 1.0, n=n, params={"alpha": alpha})


def brusselator_problem(alpha, n, form="printed"):
    """Two-species Brusselator on [0,1]^2 with homogeneous Neumann
    boundaries.

    form="printed":  u_t = alpha*Lap(u) + u v^2 - 4u + 1
                     v_t = alpha*Lap(v) - u^2 v + 3u
    form="standard": u_t = alpha*Lap(u) + u^2 v - 4u + 1
                     v_t = alpha*Lap(v) - u^2 v + 3u
    """
    if form not in ("printed", "standard"):
        raise ValueError(f"unknown brusselator form '{form}'")
    x, h = _grid_neumann(n, 0.0, 1.0)
    X, Y = np.meshgrid(x, x, indexing="ij")
    u0 = np.concatenate([(2.0 + 0.25 * Y).ravel(), (1.0 + 0.8 * X).ravel()])

    def rhs(w):
        u = w[:n * n].reshape(n, n)
        v = w[n * n:].reshape(n, n)
        react = u * v**2 if form == "printed" else u**2 * v
        du = alpha * _lap_neumann(u, h) + react - 4.0 * u + 1.0
        dv = alpha * _lap_neumann(v, h) - u**2 * v + 3.0 * u
        return np.concatenate([du.ravel(), dv.ravel()])

    return Problem("brusselator", rhs, u0, 1.0, n=n, n_components=2,
                   params={"alpha": alpha, "form": form})


def gray_scott_problem(alpha, n, a=GS_A, b=GS_B):
    """Gray--Scott on the periodic unit square, equal diffusivities."""
    h = 1.0 / n
    x = h * np.arange(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    u0u = 1.0 - np.exp(-150.0 * ((X - 0.5)**2 + (Y - 0.5)**2))
    u0v = np.exp(-150.0 * ((X - 0.5)**2 + 2.0 * (Y - 0.5)**2))
    u0 = np.concatenate([u0u.ravel(), u0v.ravel()])

    def rhs(w):
        u = w[:n * n].reshape(n, n)
        v = w[n * n:].reshape(n, n)
        uvv = u * v**2
        du = alpha * _lap_periodic(u, h) - uvv + a * (1.0 - u)
        dv = alpha * _lap_periodic(v, h) + uvv - (a + b) * v
        return np.concatenate([du.ravel(), dv.ravel()])

    return Problem("gray_scott", rhs, u0, 0.1, n=n, n_components=2,
                   params={"alpha": alpha, "a": a, "b": b})


def semilinear_forcing(x, t):
    """Forcing that makes u(x,t) = x(1-x)e^t the exact solution of
    u_t = u_xx + int_0^1 u dx + Phi."""
    return np.exp(t) * (x * (1.0 - x) + 2.0 - 1.0 / 6.0)


def semilinear_problem(n):
    """1D semilinear parabolic problem with a nonlocal integral term and
    homogeneous Dirichlet boundaries; time rides along as the last state
    component so the system is autonomous."""
    h = 1.0 / (n + 1)
    x = h * np.arange(1, n + 1)
    u0 = np.concatenate([x * (1.0 - x), [0.0]])

    def quad(u):
        # trapezoid (boundary values are zero) with the Euler-Maclaurin h^2
        # end correction built from one-sided derivatives; exact for
        # quadratics, so the manufactured solution solves the semidiscrete
        # system exactly
        corr = h / 24.0 * (4.0 * u[0] - u[1] + 4.0 * u[-1] - u[-2])
        return h * np.sum(u) + corr

    def rhs(w):
        u, t = w[:-1], w[-1]
        p = np.pad(u, 1)
        lap = (p[:-2] - 2.0 * u + p[2:]) / h**2
        du = lap + quad(u) + semilinear_forcing(x, t)
        return np.concatenate([du, [1.0]])

    def jac_factory(w_n):
        """Exact Jacobian action at the linearization point; the only
        state dependence is the forcing's time derivative column."""
        t_n = w_n[-1]
        phi_t = semilinear_forcing(x, t_n)

        def apply_fn(v):
            vu, vt = v[:-1], v[-1]
            p = np.pad(vu, 1)
            lap = (p[:-2] - 2.0 * vu + p[2:]) / h**2
            du = lap + quad(vu) + phi_t * vt
            return np.concatenate([du, [0.0]])
        return apply_fn

    def exact(t):
        return x * (1.0 - x) * np.exp(t)

    return Problem("semilinear", rhs, u0, 1.0, n=n,
                   extract=lambda w: w[:-1], exact=exact, params={},
                   jac_factory=jac_factory)


def make_problem(name, *, alpha=None, n=64, **kwargs):
    if name == "adr":
        return adr_problem(0.1 if alpha is None else alpha, n, **kwargs)
    if name == "allen_cahn":
        return allen_cahn_problem(1e-2 if alpha is None else alpha, n, **kwargs)
    if name == "brusselator":
        return brusselator_problem(1e-3 if alpha is None else alpha, n, **kwargs)
    if name == "gray_scott":
        return gray_scott_problem(1e-3 if alpha is None else alpha, n, **kwargs)
    if name == "semilinear":
        return semilinear_problem(n, **kwargs)
    raise ValueError(f"unknown problem '{name}'")
