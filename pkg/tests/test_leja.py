import math

import numpy as np
import pytest

import expkit.leja as leja_mod
from expkit.errors import NonConvergence
from expkit.leja import (DEFAULT_NUM_POINTS, divided_differences,
                         generate_leja_points, get_leja_points,
                         leja_interpolate, leja_interpolate_vertical)
from expkit.linalg import MatrixFreeOperator, dense_phi_action
from expkit.spectrum import make_estimate


@pytest.fixture(scope="module")
def xi():
    return get_leja_points(DEFAULT_NUM_POINTS)


def test_first_points(xi):
    assert xi[0] == 2.0
    assert xi[1] == pytest.approx(-2.0, abs=1e-4)
    assert xi[2] == pytest.approx(0.0, abs=1e-4)
    # the fourth point maximizes |(z-2)(z+2)z| at z = +-2/sqrt(3)
    assert abs(xi[3]) == pytest.approx(2.0 / math.sqrt(3.0), abs=1e-3)


def test_points_in_interval_and_distinct(xi):
    assert np.all(np.abs(xi) <= 2.0)
    assert len(np.unique(xi)) == len(xi)
    assert len(xi) == DEFAULT_NUM_POINTS


def test_point_cache_roundtrip(tmp_path, monkeypatch):
    monkeypatch.setenv("XDG_CACHE_HOME", str(tmp_path))
    monkeypatch.setattr(leja_mod, "_cached_points", None)
    first = get_leja_points(50)
    cache_files = list(tmp_path.rglob("*.txt"))
    assert cache_files, "expected a cache file to be written"
    # a second call must reuse the file, not regenerate
    monkeypatch.setattr(leja_mod, "_cached_points", None)
    monkeypatch.setattr(leja_mod, "generate_leja_points",
                        lambda *a, **k: pytest.fail("regenerated"))
    again = get_leja_points(50)
    assert np.array_equal(first, again)


def _phi_mp(l, z, mp):
    if l == 0:
        return mp.exp(z)
    if z == 0:
        return mp.mpf(1) / mp.factorial(l)
    acc = mp.exp(z)
    for k in range(l):
        acc -= z**k / mp.factorial(k)
    return acc / z**l


def test_divided_differences_vs_mpmath(xi):
    # independent oracle: classical recursive divided-difference table in
    # 50-digit arithmetic
    mp = pytest.importorskip("mpmath").mp
    mp.dps = 50
    h, lam = 0.9, -8.0
    est = make_estimate(lam)
    m = 8
    for l in range(5):
        d = divided_differences(l, h, est, xi, m).d
        # coefficients are divided differences of xi -> phi_l(h*(c+gamma*xi))
        # taken in the xi variable, which matches the shared basis recurrence
        nodes = [mp.mpf(float(x)) for x in xi[:m]]
        table = [_phi_mp(l, mp.mpf(h) * (mp.mpf(est.c)
                                         + mp.mpf(est.gamma) * x), mp)
                 for x in nodes]
        dd = [table[0]]
        for order in range(1, m):
            table = [(table[i + 1] - table[i])
                     / (nodes[i + order] - nodes[i])
                     for i in range(m - order)]
            dd.append(table[0])
        for j in range(m):
            assert float(d[j]) == pytest.approx(float(dd[j]), rel=1e-9,
                                                abs=1e-14)


def test_divided_differences_frozen_exponential(xi):
    # l = 0, h = 1, spectrum collapsed to [-4, 0]: first coefficient is
    # exp at the first node; second is the slope of exp between nodes
    est = make_estimate(-4.0, safety=1.0)
    d = divided_differences(0, 1.0, est, xi, 4).d
    z0 = est.c + est.gamma * xi[0]
    z1 = est.c + est.gamma * xi[1]
    assert d[0] == pytest.approx(math.exp(z0), rel=1e-12)
    assert d[1] == pytest.approx((math.exp(z1) - math.exp(z0)) / (z1 - z0),
                                 rel=1e-10)


def test_divided_differences_validation(xi):
    est = make_estimate(-1.0)
    with pytest.raises(ValueError):
        divided_differences(5, 1.0, est, xi, 8)
    with pytest.raises(ValueError):
        divided_differences(1, -0.5, est, xi, 8)


def _random_stable(n, seed, radius=20.0):
    rng = np.random.default_rng(seed)
    A = -np.diag(np.linspace(0.2, radius, n))
    A += 0.05 * radius / n * rng.standard_normal((n, n))
    return A


def test_interpolate_matches_dense_oracle(xi):
    n = 30
    A = _random_stable(n, seed=7)
    b = np.random.default_rng(8).standard_normal(n)
    op = MatrixFreeOperator.from_matrix(A)
    lam = np.linalg.eigvals(A).real.min()
    est = make_estimate(lam)
    h = 0.4
    for l in (0, 1, 3, 4):
        p, iters = leja_interpolate(op, b, l, h, est, 1e-12, xi=xi)
        exact = dense_phi_action(l, h * A, b)
        assert np.linalg.norm(p - exact) <= 1e-10 * np.linalg.norm(exact)
        assert iters > 0


def test_vertical_matches_individual(xi):
    n = 24
    A = _random_stable(n, seed=11)
    b = np.random.default_rng(12).standard_normal(n)
    op = MatrixFreeOperator.from_matrix(A)
    est = make_estimate(np.linalg.eigvals(A).real.min())
    coeffs = [1.0 / 8.0, 1.0 / 9.0, 1.0]
    res = leja_interpolate_vertical(op, b, 1, coeffs, 0.5, est, 1e-12, xi=xi)
    for ci, vec in zip(coeffs, res.vectors):
        single, _ = leja_interpolate(op, b, 1, ci * 0.5, est, 1e-12, xi=xi)
        assert np.linalg.norm(vec - single) <= 1e-10 * np.linalg.norm(single)
    assert res.freeze_iters[0] <= res.freeze_iters[2]


def test_termination_residual_honored(xi):
    # at the returned iteration count the advertised bound holds
    n = 16
    A = _random_stable(n, seed=3, radius=5.0)
    b = np.ones(n)
    op = MatrixFreeOperator.from_matrix(A)
    est = make_estimate(np.linalg.eigvals(A).real.min())
    tol = 1e-8
    res = leja_interpolate_vertical(op, b, 1, [1.0], 0.3, est, tol, xi=xi)
    exact = dense_phi_action(1, 0.3 * A, b)
    assert np.linalg.norm(res.vectors[0] - exact) < 100 * tol


def test_nonconvergence_reports_stalled(xi):
    n = 16
    A = _random_stable(n, seed=5, radius=400.0)
    b = np.ones(n)
    op = MatrixFreeOperator.from_matrix(A)
    est = make_estimate(np.linalg.eigvals(A).real.min())
    with pytest.raises(NonConvergence) as exc:
        leja_interpolate_vertical(op, b, 1, [0.5, 1.0], 1.0, est, 1e-12,
                                  xi=xi, max_points=12)
    assert exc.value.iters == 12
    assert exc.value.detail["stalled_coefficients"]


def test_coefficient_validation(xi):
    op = MatrixFreeOperator(lambda v: -v, 3)
    est = make_estimate(-1.0)
    b = np.ones(3)
    for bad in (0.0, 1.5, -0.2):
        with pytest.raises(ValueError):
            leja_interpolate_vertical(op, b, 1, [bad], 0.1, est, 1e-8, xi=xi)
    with pytest.raises(ValueError):
        leja_interpolate_vertical(op, b, 1, [1.0], 0.1, est, 0.0, xi=xi)
