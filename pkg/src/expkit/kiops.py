"""Krylov evaluation of linear combinations of phi-function actions.

Implements the augmented-matrix approach of Niesen & Wright / Gaudreault,
Rainwater & Tokman (KIOPS): the combination

    w(tau) = sum_j tau^j phi_j(tau A) v_j

is the leading block of exp(tau A~) applied to an extended vector, where
A~ embeds the vectors v_j and an upshift block. The exponential is
approximated on a Krylov subspace built with incomplete orthogonalization
(inner products against only the last few basis vectors), and the step is
split into adaptively chosen substeps so the basis stays small.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NonConvergence
from .linalg import MatrixFreeOperator


@dataclass
class AugmentedSystem:
    """Augmented operator [[A, B], [0, K]] with B = [b_p, ..., b_1]."""

    A: MatrixFreeOperator
    cols: list  # [v_1, ..., v_p]; column b_j of B multiplies phi_j

    def __post_init__(self):
        self.n = self.A.dim
        self.p = len(self.cols)
        if self.p < 1:
            raise ValueError("need at least one augmenting vector")
        # B in the order [b_p, ..., b_1]
        self.B = np.column_stack(list(reversed(self.cols)))


def augmented_apply(sys: AugmentedSystem, w):
    """Apply the augmented matrix to an extended vector of length n + p."""
    n, p = sys.n, sys.p
    if w.shape != (n + p,):
        raise ValueError("extended vector has wrong length")
    top = sys.A.apply(w[:n]) + sys.B @ w[n:]
    bottom = np.zeros(p)
    bottom[:-1] = w[n + 1:]
    return np.concatenate([top, bottom])


@dataclass
class KrylovState:
    """IOP-Arnoldi basis and Hessenberg data for an extended operator."""

    V: np.ndarray  # (m_cap+1, dim) rows are basis vectors
    H: np.ndarray  # (m_cap+1, m_cap)
    m: int
    iop_len: int
    happy: bool = False


def arnoldi_iop(apply_fn, start, m, iop_len=2, breakdown_rtol=1e-14):
    """Arnoldi with incomplete orthogonalization against the last iop_len vectors.

    Happy breakdown (subdiagonal below breakdown_rtol * ||H||) truncates the
    basis and flags the projection as exact.
    """
    beta = np.linalg.norm(start)
    if beta == 0.0:
        raise ValueError("zero start vector")
    dim = len(start)
    V = np.zeros((m + 1, dim))
    H = np.zeros((m + 1, m))
    V[0] = start / beta
    j = 0
    happy = False
    while j < m:
        w = apply_fn(V[j])
        ilow = max(0, j + 1 - iop_len)
        for i in range(ilow, j + 1):
            H[i, j] = np.dot(V[i], w)
            w = w - H[i, j] * V[i]
        nrm = np.linalg.norm(w)
        hscale = max(np.max(np.abs(H)), 1.0)
        if nrm < breakdown_rtol * hscale:
            happy = True
            j += 1
            break
        H[j + 1, j] = nrm
        V[j + 1] = w / nrm
        j += 1
    return KrylovState(V=V, H=H, m=j, iop_len=iop_len, happy=happy)


@dataclass
class KiopsStats:
    substeps: int = 0
    rejections: int = 0
    matvecs: int = 0
    expms: int = 0
    m_last: int = 0
    err_sum: float = 0.0


def kiops(op: MatrixFreeOperator, vectors, tau_out=(1.0,), tol=1e-7,
          m_init=10, m_min=10, m_max=128, iop_len=2, tau_min_frac=1e-8):
    """Evaluate w(tau) = sum_j tau^j phi_j(tau*op) v_j at each tau in tau_out.

    ``vectors`` is the list [v_0, ..., v_p]. tau_out must be positive and
    ascending; the typical call uses tau_out = (1.0,) with all scaling
    absorbed into op and the vectors.

    Substep lengths and the Krylov dimension are adapted from the
    a-posteriori error estimate of each substep, following the KIOPS
    scheme of Gaudreault, Rainwater & Tokman (2018).
    """
    u = np.array([np.asarray(v, dtype=float) for v in vectors])
    ppo, n = u.shape
    p = ppo - 1
    if p == 0:
        p = 1
        u = np.vstack([u, np.zeros((1, n))])

    tau_out = np.asarray(tau_out, dtype=float)
    if np.any(tau_out <= 0) or np.any(np.diff(tau_out) < 0):
        raise ValueError("tau_out must be positive and ascending")
    n_out = len(tau_out)

    m = max(m_min, min(m_init, m_max))

    V = np.zeros((m_max + 1, n + p))
    H = np.zeros((m_max + 1, m_max + 1))

    stats = KiopsStats()
    tau_now = 0.0
    tau_end = float(tau_out[-1])
    happy = False
    j = 0

    w = np.zeros((n_out, n))
    w[0] = u[0]
    l = 0  # next output index to fill

    # Scale the augmenting block to unit magnitude for conditioning.
    norm_u = np.max(np.sum(np.abs(u[1:]), axis=1)) if ppo > 1 else 0.0
    if norm_u > 0:
        ex = math.ceil(math.log2(norm_u))
        nu, mu = 2.0 ** (-ex), 2.0 ** ex
    else:
        nu, mu = 1.0, 1.0
    u_flip = nu * np.flipud(u[1:])

    tau = tau_end
    if tau_end > 1:
        gamma, gamma_mmax = 0.2, 0.1
    else:
        gamma, gamma_mmax = 0.9, 0.6
    delta = 1.4

    oldm, oldtau, omega = -1, math.nan, math.nan
    orderold, kestold = True, True
    order, kest = 1.0, 2.0
    beta = 0.0
    ireject = 0  # consecutive rejections of the current substep

    while tau_now < tau_end * (1.0 - 1e-12):
        if j == 0:
            H[:, :] = 0.0
            V[0, :n] = w[l]
            # Tail components encode the monomials tau_now^i / i!.
            for k in range(p - 1):
                i = p - 1 - k
                V[0, n + k] = (tau_now ** i) / math.factorial(i) * mu
            V[0, n + p - 1] = mu
            beta = float(np.linalg.norm(V[0]))
            V[0] /= beta

        # Incomplete orthogonalization (window iop_len).
        while j < m:
            j += 1
            V[j, :n] = op.apply(V[j - 1, :n]) + V[j - 1, n:] @ u_flip
            V[j, n:n + p - 1] = V[j - 1, n + 1:n + p]
            V[j, -1] = 0.0
            stats.matvecs += 1
            ilow = max(0, j - iop_len)
            H[ilow:j, j - 1] = V[ilow:j] @ V[j]
            V[j] -= V[ilow:j].T @ H[ilow:j, j - 1]
            nrm = float(np.linalg.norm(V[j]))
            if nrm < tol:
                happy = True
                break
            H[j, j - 1] = nrm
            V[j] /= nrm

        # Extra column turns exp(H) into the phi_1 form needed for the
        # error estimate.
        H[0, j] = 1.0
        nrm = H[j, j - 1]
        H[j, j - 1] = 0.0
        F = scipy.linalg.expm(tau * H[:j + 1, :j + 1])
        stats.expms += 1
        H[j, j - 1] = nrm

        if happy:
            omega = 0.0
            err = 0.0
            tau_new = min(tau_end - (tau_now + tau), tau)
            m_new = m
            happy = False
        else:
            err = abs(beta * nrm * F[j - 1, j])
            oldomega = omega
            omega = tau_end * err / (tau * tol)

            if m == oldm and tau != oldtau and ireject >= 1:
                order = max(1.0, math.log(omega / oldomega) / math.log(tau / oldtau))
                orderold = False
            elif orderold or ireject == 0:
                orderold = True
                order = j / 4.0
            else:
                orderold = True

            if m != oldm and tau == oldtau and ireject >= 1:
                kest = max(1.1, (omega / oldomega) ** (1.0 / (oldm - m)))
                kestold = False
            elif kestold or ireject == 0:
                kestold = True
                kest = 2.0
            else:
                kestold = True

            remaining = tau_end - tau_now if omega > delta else tau_end - (tau_now + tau)

            same_tau = min(remaining, tau)
            tau_opt = tau * (gamma / omega) ** (1.0 / order)
            tau_opt = min(remaining, max(tau / 5.0, min(5.0 * tau, tau_opt)))
            m_opt = math.ceil(j + math.log(omega / gamma) / math.log(kest))
            m_opt = max(m_min, min(m_max,
                                   max(math.floor(3 * m / 4), min(m_opt, math.ceil(4 * m / 3)))))
            if j == m_max:
                if omega > delta:
                    m_new = j
                    tau_new = tau * (gamma_mmax / omega) ** (1.0 / order)
                    tau_new = min(tau_end - tau_now, max(tau / 5.0, tau_new))
                else:
                    tau_new = tau_opt
                    m_new = m
            else:
                m_new = m_opt
                tau_new = same_tau

        if omega <= delta:
            # Substep accepted. Emit any requested outputs inside it.
            stats.substeps += 1
            next_t = tau_now + tau
            blown = 0
            for k in range(l, n_out):
                if tau_out[k] < next_t - 1e-14 * tau_end:
                    blown += 1
            if blown:
                w[l + blown] = w[l]
                for k in range(blown):
                    tau_phantom = tau_out[l + k] - tau_now
                    F2 = scipy.linalg.expm(tau_phantom * H[:j, :j])
                    w[l + k] = beta * F2[:j, 0] @ V[:j, :n]
                    stats.expms += 1
                l += blown
            w[l] = beta * F[:j, 0] @ V[:j, :n]
            tau_now += tau
            j = 0
            ireject = 0
            stats.err_sum += err
        else:
            stats.rejections += 1
            ireject += 1
            H[0, j] = 0.0

        oldtau, tau = tau, tau_new
        oldm, m = m, m_new

        if tau < tau_min_frac * tau_end and tau_now < tau_end:
            raise NonConvergence(
                f"KIOPS substep shrank below {tau_min_frac} of the interval",
                iters=stats.matvecs)

    stats.m_last = oldm
    return [w[k].copy() for k in range(n_out)], stats


def kiops_eval(A: MatrixFreeOperator, vectors, dt, tol, **kwargs):
    """sum_j phi_j(A*dt) v_j with all dt^j powers pre-absorbed into the v_j.

    dt = 0 is the degenerate no-step case and returns v_0 (the absorbed
    vectors for j >= 1 would all vanish).
    """
    if len(vectors) - 1 > 4:
        raise ValueError("phi orders above 4 are not supported")
    if dt == 0.0:
        return np.asarray(vectors[0], dtype=float).copy(), KiopsStats()
    ws, stats = kiops(A.scaled(dt), vectors, tau_out=(1.0,), tol=tol, **kwargs)
    return ws[0], stats
