import numpy as np
import pytest
import scipy.linalg

from expkit.kiops import (AugmentedSystem, KiopsStats, arnoldi_iop,
                          augmented_apply, kiops, kiops_eval)
from expkit.linalg import MatrixFreeOperator, dense_phi, dense_phi_action


def _stable(n, seed, radius=6.0):
    rng = np.random.default_rng(seed)
    A = -np.diag(np.linspace(0.3, radius, n))
    A += 0.1 * rng.standard_normal((n, n))
    return A


def _dense_aug(sys):
    n, p = sys.n, sys.p
    M = np.zeros((n + p, n + p))
    for j in range(n + p):
        e = np.zeros(n + p)
        e[j] = 1.0
        M[:, j] = augmented_apply(sys, e)
    return M


def test_augmented_exponential_identity():
    # exp of the (n+p) extended matrix reproduces the phi-weighted sum:
    # top block of expm(M)[.., last col] equals sum_j phi_j(A) b_j
    n, p = 8, 3
    A = _stable(n, seed=1)
    rng = np.random.default_rng(2)
    cols = [rng.standard_normal(n) for _ in range(p)]
    sys = AugmentedSystem(MatrixFreeOperator.from_matrix(A), cols)
    M = _dense_aug(sys)
    w = scipy.linalg.expm(M)[:n, -1]
    expect = sum(dense_phi(j + 1, A) @ cols[j] for j in range(p))
    assert np.linalg.norm(w - expect) <= 1e-12 * np.linalg.norm(expect)


def test_augmented_apply_shape_check():
    sys = AugmentedSystem(MatrixFreeOperator(lambda v: -v, 4), [np.ones(4)])
    with pytest.raises(ValueError):
        augmented_apply(sys, np.ones(4))


def test_arnoldi_relation_and_local_orthogonality():
    n, m = 20, 8
    A = _stable(n, seed=3)
    apply_fn = lambda v: A @ v
    start = np.random.default_rng(4).standard_normal(n)
    st = arnoldi_iop(apply_fn, start, m, iop_len=2)
    V = st.V[:m + 1]
    # the Krylov relation A V_m^T = V_{m+1}^T H holds exactly even though
    # incomplete orthogonalization only enforces local orthogonality
    resid = A @ V[:m].T - V.T @ st.H[:m + 1, :m]
    assert np.linalg.norm(resid) <= 1e-10 * np.linalg.norm(A)
    norms = np.linalg.norm(V, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-12)
    for j in range(1, m):
        assert abs(V[j] @ V[j + 1]) < 1e-12


def test_arnoldi_zero_start_rejected():
    with pytest.raises(ValueError):
        arnoldi_iop(lambda v: v, np.zeros(5), 4)


def test_kiops_eval_matches_dense():
    n = 25
    A = _stable(n, seed=5, radius=30.0)
    rng = np.random.default_rng(6)
    dt = 0.7
    vectors = [rng.standard_normal(n) for _ in range(4)]
    op = MatrixFreeOperator.from_matrix(A)
    w, stats = kiops_eval(op, vectors, dt, tol=1e-10)
    expect = sum(dense_phi_action(j, dt * A, vectors[j])
                 for j in range(len(vectors)))
    assert np.linalg.norm(w - expect) <= 1e-8 * np.linalg.norm(expect)
    assert stats.matvecs > 0
    assert stats.substeps >= 1


def test_kiops_eval_zero_dt_is_copy():
    v0 = np.arange(4.0)
    op = MatrixFreeOperator(lambda v: -v, 4)
    w, stats = kiops_eval(op, [v0, np.ones(4)], 0.0, tol=1e-8)
    assert np.array_equal(w, v0)
    assert w is not v0
    assert stats.matvecs == 0


def test_kiops_eval_rejects_high_order():
    op = MatrixFreeOperator(lambda v: -v, 3)
    with pytest.raises(ValueError):
        kiops_eval(op, [np.ones(3)] * 6, 0.1, tol=1e-8)


def test_kiops_multiple_output_times():
    n = 18
    A = _stable(n, seed=7, radius=12.0)
    rng = np.random.default_rng(8)
    vectors = [rng.standard_normal(n) for _ in range(3)]
    op = MatrixFreeOperator.from_matrix(A)
    taus = (0.25, 0.5, 1.0)
    ws, stats = kiops(op, vectors, tau_out=taus, tol=1e-10)
    assert len(ws) == 3 and all(w.shape == (n,) for w in ws)
    for w, tau in zip(ws, taus):
        expect = sum(tau**j * dense_phi_action(j, tau * A, vectors[j])
                     for j in range(3))
        assert np.linalg.norm(w - expect) <= 1e-7 * np.linalg.norm(expect)
    assert stats.substeps >= 1


def test_kiops_tau_out_validation():
    op = MatrixFreeOperator(lambda v: -v, 3)
    vecs = [np.ones(3), np.ones(3)]
    with pytest.raises(ValueError):
        kiops(op, vecs, tau_out=(1.0, 0.5))
    with pytest.raises(ValueError):
        kiops(op, vecs, tau_out=(-1.0,))


def test_kiops_happy_breakdown_small_system():
    # extended dimension 6 < m_init: the Krylov space becomes exact and
    # the result is correct to round-off in a single substep
    n = 4
    A = _stable(n, seed=9, radius=2.0)
    v0 = np.ones(n)
    v1 = np.arange(1.0, n + 1.0)
    op = MatrixFreeOperator.from_matrix(A)
    w, stats = kiops_eval(op, [v0, v1], 1.0, tol=1e-10)
    expect = dense_phi_action(0, A, v0) + dense_phi_action(1, A, v1)
    assert np.linalg.norm(w - expect) <= 1e-11 * np.linalg.norm(expect)
    assert stats.substeps == 1


def test_kiops_pads_missing_phi_vector():
    # a single input vector means a pure exponential; an explicit zero
    # phi_1 vector must give the same answer
    n = 10
    A = _stable(n, seed=10)
    v0 = np.random.default_rng(11).standard_normal(n)
    op = MatrixFreeOperator.from_matrix(A)
    w1, _ = kiops(op, [v0], tol=1e-10)
    w2, _ = kiops(op, [v0, np.zeros(n)], tol=1e-10)
    assert np.allclose(w1, w2, atol=1e-12)


def test_kiops_stats_counts_matvecs():
    n = 12
    A = _stable(n, seed=12, radius=40.0)
    op = MatrixFreeOperator.from_matrix(A)
    before = op.counter.count
    _, stats = kiops_eval(op, [np.ones(n), np.ones(n)], 0.5, tol=1e-9)
    assert stats.matvecs == op.counter.count - before
    assert stats.m_last >= 1
