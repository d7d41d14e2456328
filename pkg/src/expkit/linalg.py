"""Vector kernels, matrix-free operators, and dense phi-function evaluation.

State vectors are plain 1-D float64 numpy arrays. The matrix-free operator
wraps a linear action ``v -> A v`` together with an evaluation counter so
that the cost of every algorithm can be measured in right-hand-side
evaluations rather than wall time.

The dense routines (``dense_expm``, ``dense_phi``, ``dense_phi_action``)
operate on small matrices only: Hessenberg projections, divided-difference
generators, and test oracles.
"""

import math

import numpy as np
import scipy.linalg

EPS = float(np.finfo(np.float64).eps)


class EvalCounter:
    """Monotone counter of right-hand-side evaluations."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def charge(self, k=1):
        if k < 0:
            raise ValueError("counter cannot decrease")
        self.count += k


class CountingRhs:
    """Wrap an RHS function so every evaluation is charged to a counter."""

    def __init__(self, fn, counter=None):
        self.fn = fn
        self.counter = counter if counter is not None else EvalCounter()

    def __call__(self, u):
        self.counter.charge()
        return self.fn(u)

    @property
    def evals(self):
        return self.counter.count


class MatrixFreeOperator:
    """Linear action ``v -> A v`` with an attached evaluation counter.

    ``charge_per_apply`` is the number of RHS evaluations one application
    costs. Operators whose apply function already charges a shared counter
    (e.g. a finite-difference Jacobian built on a CountingRhs) pass 0.
    """

    def __init__(self, apply_fn, dim, counter=None, charge_per_apply=1):
        self.apply_fn = apply_fn
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError("operator dimension must be positive")
        self.counter = counter if counter is not None else EvalCounter()
        self.charge_per_apply = charge_per_apply

    def apply(self, v):
        if v.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got {v.shape}")
        if self.charge_per_apply:
            self.counter.charge(self.charge_per_apply)
        return self.apply_fn(v)

    @property
    def eval_counter(self):
        return self.counter.count

    def scaled(self, factor):
        """Operator ``v -> factor * (A v)`` sharing this counter."""
        return MatrixFreeOperator(
            lambda v: factor * self.apply(v),
            self.dim,
            counter=self.counter,
            charge_per_apply=0,
        )

    @classmethod
    def from_matrix(cls, A, counter=None):
        A = np.asarray(A, dtype=float)
        return cls(lambda v: A @ v, A.shape[0], counter=counter)


def norm_l2(v):
    """Unnormalized Euclidean norm."""
    return float(np.linalg.norm(v))


def dot(x, y):
    if x.shape != y.shape:
        raise ValueError("length mismatch in dot")
    return float(np.dot(x, y))


def axpy(alpha, x, y):
    """alpha*x + y."""
    if x.shape != y.shape:
        raise ValueError("length mismatch in axpy")
    return alpha * x + y


def fd_jacobian_apply(f, u, v, fu=None):
    """Forward-difference Jacobian action (f(u + eps*v) - f(u)) / eps.

    The increment eps = sqrt(machine eps) * (1 + ||u||) / ||v|| balances
    truncation against roundoff. Passing a cached ``fu = f(u)`` means only
    one new RHS evaluation is charged.
    """
    if u.shape != v.shape:
        raise ValueError("u and v must have equal length")
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ValueError("degenerate direction: v = 0")
    eps = math.sqrt(EPS) * (1.0 + np.linalg.norm(u)) / nv
    if fu is None:
        fu = f(u)
    out = (f(u + eps * v) - fu) / eps
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite Jacobian action")
    return out


def dense_expm(M):
    """Matrix exponential of a small dense matrix (Pade scaling-and-squaring)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("dense_expm expects a square matrix")
    if not np.all(np.isfinite(M)):
        raise FloatingPointError("non-finite entries in dense_expm input")
    return scipy.linalg.expm(M)


def _phi_taylor(l, M, terms=20):
    """Taylor series of phi_l, accurate for very small ||M||."""
    n = M.shape[0]
    out = np.zeros_like(M)
    term = np.eye(n)
    for k in range(terms):
        out += term / math.factorial(k + l)
        term = term @ M
    return out


def dense_phi(l, M):
    """phi_l(M) for a small dense matrix.

    phi_0 = exp and phi_{l+1}(z) = (phi_l(z) - 1/l!) / z. For l >= 1 the
    matrix is embedded in a block upper-bidiagonal form whose exponential
    carries phi_l(M) in its top-right block; tiny norms fall back to the
    Taylor series to avoid needless scaling.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("dense_phi expects a square matrix")
    if l < 0:
        raise ValueError("phi order must be >= 0")
    if l == 0:
        return dense_expm(M)
    if np.linalg.norm(M) < 1e-8:
        return _phi_taylor(l, M)
    n = M.shape[0]
    W = np.zeros(((l + 1) * n, (l + 1) * n))
    W[:n, :n] = M
    for k in range(l):
        W[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = np.eye(n)
    return dense_expm(W)[:n, -n:]


def dense_phi_action(l, M, b):
    """phi_l(M) b via one exponential of the (n+l)-dimensional augmented matrix.

    Much cheaper than forming phi_l(M) when only the action on a single
    vector is needed (e.g. divided differences read off a first column).
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if b.shape != (n,):
        raise ValueError("vector length mismatch in dense_phi_action")
    if l == 0:
        return dense_expm(M) @ b
    if np.linalg.norm(M) < 1e-8:
        return _phi_taylor(l, M) @ b
    A = np.zeros((n + l, n + l))
    A[:n, :n] = M
    A[:n, n] = b  # column b_l of the [b_l, ..., b_1] block
    for k in range(l - 1):
        A[n + k, n + k + 1] = 1.0
    v = np.zeros(n + l)
    v[-1] = 1.0
    return (dense_expm(A) @ v)[:n]
