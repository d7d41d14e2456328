"""Leja-point interpolation of phi-function actions.

The engine interpolates z -> phi_l(h*(c + gamma*z)) at precomputed Leja
points on [-2, 2], where (c, gamma) shift and scale the Jacobian spectrum
onto the interpolation interval. The Newton-form polynomial is evaluated
iteratively; each term costs one operator application, and the iteration
stops once |d_m| * ||y_m|| drops below the requested tolerance.

Divided differences are read off the first column of phi_l of a bidiagonal
matrix of the interpolation nodes (the Opitz form). The naive recursive
table loses all significant digits long before convergence, so this is the
only numerically viable route in double precision.
"""

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NonConvergence
from .linalg import MatrixFreeOperator, dense_phi_action
from .spectrum import SpectrumEstimate

DEFAULT_NUM_POINTS = 400
DEFAULT_CANDIDATES = 100_000
_CHUNK = 32

_cached_points = None


def generate_leja_points(m=DEFAULT_NUM_POINTS, n_candidates=DEFAULT_CANDIDATES):
    """Greedy Leja sequence on [-2, 2] starting at xi_0 = 2.

    Each new point maximizes the product of distances to the points chosen
    so far over a uniform candidate grid; ties break toward the smaller
    candidate. The product is accumulated in log space to avoid underflow.
    """
    if m < 1:
        raise ValueError("need at least one point")
    grid = np.linspace(-2.0, 2.0, n_candidates)
    pts = np.empty(m)
    pts[0] = 2.0
    with np.errstate(divide="ignore"):
        logprod = np.log(np.abs(grid - pts[0]))
        for k in range(1, m):
            i = int(np.argmax(logprod))
            pts[k] = grid[i]
            logprod += np.log(np.abs(grid - pts[k]))
    return pts


def _default_cache_path():
    base = os.environ.get("XDG_CACHE_HOME") or str(Path.home() / ".cache")
    return Path(base) / "expkit" / "leja_points.txt"


def get_leja_points(m=DEFAULT_NUM_POINTS, cache_path=None):
    """Load the Leja sequence from the text cache, generating it on first use."""
    global _cached_points
    if _cached_points is not None and len(_cached_points) >= m:
        return _cached_points[:m]
    path = Path(cache_path) if cache_path is not None else _default_cache_path()
    if path.exists():
        pts = np.loadtxt(path, ndmin=1)
        if len(pts) >= m:
            _cached_points = pts
            return pts[:m]
    pts = generate_leja_points(max(m, DEFAULT_NUM_POINTS))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, pts, fmt="%.17g")
    except OSError:
        pass  # cache is an optimization only
    _cached_points = pts
    return pts[:m]


@dataclass(frozen=True)
class DividedDifferences:
    d: np.ndarray
    l: int
    h: float
    c: float
    gamma: float


def divided_differences(l, h, est: SpectrumEstimate, xi, m_max):
    """Newton divided differences of z -> phi_l(h*(c + gamma*z)) at xi[:m_max].

    Formed as the first column of phi_l of the bidiagonal matrix with the
    scaled nodes on its diagonal and h*gamma on the subdiagonal. Because
    that matrix is lower triangular, the coefficients for any leading
    subset of points are a prefix of those for the full set.
    """
    if not 0 <= l <= 4:
        raise ValueError("phi order must be in 0..4")
    if h < 0:
        raise ValueError("scale h must be >= 0")
    m_max = min(m_max, len(xi))
    nodes = h * (est.c + est.gamma * xi[:m_max])
    L = np.diag(nodes)
    sub = h * est.gamma
    for j in range(m_max - 1):
        L[j + 1, j] = sub
    e1 = np.zeros(m_max)
    e1[0] = 1.0
    d = dense_phi_action(l, L, e1)
    if not np.all(np.isfinite(d)):
        raise NonConvergence("non-finite divided differences; spectral estimate invalid")
    return DividedDifferences(d=d, l=l, h=h, c=est.c, gamma=est.gamma)


@dataclass
class LejaResult:
    vectors: list
    iters: int
    freeze_iters: list


def leja_interpolate(J: MatrixFreeOperator, b, l, h, est, tol,
                     xi=None, max_points=DEFAULT_NUM_POINTS):
    """Interpolate p ~ phi_l(h*J) b. Returns (p, iters).

    Raises NonConvergence when the polynomial has not converged after
    ``max_points`` terms; the caller is expected to shrink the step.
    """
    res = leja_interpolate_vertical(J, b, l, [1.0], h, est, tol,
                                    xi=xi, max_points=max_points)
    return res.vectors[0], res.iters


def leja_interpolate_vertical(J: MatrixFreeOperator, b, l, coeffs, h, est, tol,
                              xi=None, max_points=DEFAULT_NUM_POINTS):
    """Interpolate phi_l(c_i*h*J) b for several scale factors c_i at once.

    All interpolations share one Newton basis recurrence (one operator
    application per term); each scale factor only contributes its own set
    of divided differences and polynomial accumulator. An accumulator
    freezes once its own term magnitude |d_m| * ||y_m|| falls below tol;
    iteration continues until every accumulator is frozen, so the total
    cost is set by the slowest (largest) coefficient.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if len(coeffs) < 1:
        raise ValueError("need at least one coefficient")
    for ci in coeffs:
        if not 0.0 < ci <= 1.0:
            raise ValueError("coefficients must lie in (0, 1]")
    if xi is None:
        xi = get_leja_points(max_points)
    k = len(coeffs)
    c, gamma = est.c, est.gamma

    m_avail = min(_CHUNK, max_points)
    dds = [divided_differences(l, ci * h, est, xi, m_avail).d for ci in coeffs]

    y = b.astype(float, copy=True)
    ny = float(np.linalg.norm(y))
    ps = [dds[i][0] * y for i in range(k)]
    frozen = [abs(dds[i][0]) * ny < tol for i in range(k)]
    freeze_iters = [0] * k
    if all(frozen):
        return LejaResult(vectors=ps, iters=0, freeze_iters=freeze_iters)

    for m in range(1, max_points):
        if m >= m_avail:
            m_avail = min(m_avail + _CHUNK, max_points)
            dds = [divided_differences(l, ci * h, est, xi, m_avail).d
                   for ci in coeffs]
        y = J.apply(y) / gamma - (c / gamma + xi[m - 1]) * y
        ny = float(np.linalg.norm(y))
        if not np.isfinite(ny):
            raise NonConvergence("polynomial iteration diverged", iters=m)
        for i in range(k):
            if frozen[i]:
                continue
            ps[i] = ps[i] + dds[i][m] * y
            if abs(dds[i][m]) * ny < tol:
                frozen[i] = True
                freeze_iters[i] = m
        if all(frozen):
            return LejaResult(vectors=ps, iters=m, freeze_iters=freeze_iters)

    stalled = [coeffs[i] for i in range(k) if not frozen[i]]
    raise NonConvergence(
        f"no convergence in {max_points} Leja points",
        iters=max_points, detail={"stalled_coefficients": stalled})
