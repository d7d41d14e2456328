"""Real-spectrum estimation for the Jacobian and Leja scaling parameters.

The Leja interpolation engine needs an interval [alpha, beta] bracketing
the (real, non-positive) spectrum of the Jacobian. The dominant eigenvalue
magnitude is obtained by power iteration, inflated by a safety factor, and
the interval is refreshed only every few time steps since the spectrum of
a dissipative problem drifts slowly.
"""

from dataclasses import dataclass, replace

import numpy as np

from .linalg import MatrixFreeOperator

GAMMA_MIN = 1e-13


@dataclass(frozen=True)
class SpectrumEstimate:
    """Interval [alpha, beta] with midpoint c and quarter-width scale gamma."""

    alpha: float
    beta: float
    c: float
    gamma: float
    safety: float
    age_steps: int = 0

    def aged(self):
        return replace(self, age_steps=self.age_steps + 1)


@dataclass(frozen=True)
class RefreshPolicy:
    n_recompute: int = 50
    safety: float = 1.1
    tol_pi: float = 1e-2
    max_it: int = 1000
    seed: int = 0


def power_iterate(J: MatrixFreeOperator, tol_pi=1e-2, max_it=1000, seed=0):
    """Estimate the dominant eigenvalue magnitude of J by power iteration.

    Returns (estimate, converged). The start vector is drawn from a seeded
    generator so repeated runs are reproducible. A zero operator yields 0.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(J.dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_it):
        w = J.apply(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, True
        lam_new = nw
        v = w / nw
        if abs(lam_new - lam) <= tol_pi * lam_new:
            return float(lam_new), True
        lam = lam_new
    return float(lam), False


def make_estimate(lam, safety=1.1):
    """Build a SpectrumEstimate from a dominant-magnitude eigenvalue.

    beta is pinned at 0 (dissipative operators only); alpha = -safety*|lam|.
    """
    if not np.isfinite(lam):
        raise ValueError("non-finite eigenvalue estimate")
    alpha = -safety * abs(lam)
    beta = 0.0
    c = (alpha + beta) / 2.0
    gamma = max(abs(beta - alpha) / 4.0, GAMMA_MIN)
    return SpectrumEstimate(alpha=alpha, beta=beta, c=c, gamma=gamma,
                            safety=safety, age_steps=0)


def maybe_refresh(est: SpectrumEstimate, J: MatrixFreeOperator,
                  policy: RefreshPolicy, force=False):
    """Re-run the power iteration when the estimate is stale.

    A refresh happens when the estimate has aged past the policy's
    recompute interval or when the caller forces one (e.g. after repeated
    step rejections, which signal a changed spectrum). Otherwise the
    estimate is returned with its age incremented.
    """
    if force or est is None or est.age_steps >= policy.n_recompute:
        lam, converged = power_iterate(J, tol_pi=policy.tol_pi,
                                       max_it=policy.max_it, seed=policy.seed)
        base = est.safety if est is not None else policy.safety
        safety = base if converged else base * 1.5
        return make_estimate(lam, safety=safety)
    return est.aged()
