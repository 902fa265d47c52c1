"""Kernel tests: each expected value comes from an oracle computed in the
test itself (Cramer for 2x2, characteristic polynomial for 3x3, multiply-back
residuals for the rest)."""

import numpy as np
import pytest

from cogrelay.exceptions import NoConvergence, NotPositiveDefinite, Singular
from cogrelay.numerics import dominant_eigpair, hermitian_solve, linear_solve_real


def cramer_2x2(m, b):
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    x0 = (b[0] * m[1][1] - m[0][1] * b[1]) / det
    x1 = (m[0][0] * b[1] - b[0] * m[1][0]) / det
    return np.array([x0, x1])


def charpoly_3x3_roots(a):
    """Roots of det(A - x I) by explicit cofactor expansion (independent of
    the power iteration)."""
    x = np.poly1d([1.0, 0.0])
    d00 = (a[1][1] - x) * (a[2][2] - x) - a[1][2] * a[2][1]
    d01 = a[1][0] * (a[2][2] - x) - a[1][2] * a[2][0]
    d02 = a[1][0] * a[2][1] - (a[1][1] - x) * a[2][0]
    det = (a[0][0] - x) * d00 - a[0][1] * d01 + a[0][2] * d02
    return np.roots(det.coeffs)


def random_pd(rng, n):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return x @ x.conj().T + np.eye(n)


def test_hermitian_solve_identity():
    x = hermitian_solve(np.eye(2), np.array([3.0, 4.0j]))
    assert np.allclose(x, [3.0, 4.0j], rtol=0, atol=1e-15)


def test_hermitian_solve_diagonal():
    x = hermitian_solve(np.diag([2.0, 4.0]), np.array([2.0, 2.0]))
    assert np.allclose(x, [1.0, 0.5], rtol=0, atol=1e-15)


def test_hermitian_solve_random_8x8_residual():
    rng = np.random.default_rng(11)
    a = random_pd(rng, 8)
    b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    x = hermitian_solve(a, b)
    assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_hermitian_solve_residual_property_all_sizes():
    rng = np.random.default_rng(12)
    for n in range(1, 11):
        for _ in range(20):
            a = random_pd(rng, n)
            b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            x = hermitian_solve(a, b)
            assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_hermitian_solve_rejects_non_hermitian():
    with pytest.raises(ValueError):
        hermitian_solve(np.array([[1.0, 2.0], [0.0, 1.0]]), np.ones(2))


def test_hermitian_solve_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        hermitian_solve(np.diag([1.0, -1.0]), np.ones(2))
    v = np.array([1.0, 2.0 + 1j])
    rank1 = np.outer(v, v.conj())  # PSD but singular
    with pytest.raises(NotPositiveDefinite):
        hermitian_solve(rank1, np.ones(2))


def test_hermitian_solve_shape_errors():
    with pytest.raises(ValueError):
        hermitian_solve(np.eye(2), np.ones(3))
    with pytest.raises(ValueError):
        hermitian_solve(np.ones((2, 3)), np.ones(2))


def test_hermitian_solve_deterministic():
    rng = np.random.default_rng(13)
    a = random_pd(rng, 6)
    b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    x1 = hermitian_solve(a, b)
    x2 = hermitian_solve(a.copy(), b.copy())
    assert np.array_equal(x1, x2)


def test_dominant_eigpair_diagonal():
    rho, x = dominant_eigpair(np.array([[2.0, 0.0], [0.0, 1.0]]))
    assert rho == pytest.approx(2.0, rel=1e-10)
    assert np.allclose(x, [1.0, 0.0], atol=1e-9)


def test_dominant_eigpair_symmetric_permutation():
    rho, x = dominant_eigpair(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert rho == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(x, [0.5, 0.5], atol=1e-12)


def test_dominant_eigpair_scalar_instance_extended_matrix():
    # balance matrix of the worked single-CBS instance at budget 10:
    # DF = [[0.1, 0.2], [1, 0]], D sigma = (0.2, 1), noise = (1, 1)
    lam_ext = [[0.1, 0.2, 0.2], [1.0, 0.0, 1.0], [0.11, 0.02, 0.12]]
    rho, x = dominant_eigpair(np.array(lam_ext))
    roots = charpoly_3x3_roots(lam_ext)
    rho_oracle = max(r.real for r in roots if abs(r.imag) < 1e-9)
    assert rho == pytest.approx(rho_oracle, rel=1e-9)
    assert rho < 1.0          # budget 10 exceeds the 15/7 optimum
    assert np.all(x >= 0) and np.sum(x) == pytest.approx(1.0, abs=1e-12)


def test_dominant_eigpair_residual_property():
    rng = np.random.default_rng(14)
    for n in (2, 3, 5, 8):
        for _ in range(20):
            mat = rng.random((n, n))
            rho, x = dominant_eigpair(mat)
            assert np.all(x >= 0.0)
            assert np.sum(x) == pytest.approx(1.0, abs=1e-12)
            assert np.linalg.norm(mat @ x - rho * x) <= 1e-9 * rho


def test_dominant_eigpair_zero_matrix():
    rho, x = dominant_eigpair(np.zeros((3, 3)))
    assert rho == 0.0 and np.sum(x) == pytest.approx(1.0)


def test_dominant_eigpair_rejects_negative_entries():
    with pytest.raises(ValueError):
        dominant_eigpair(np.array([[1.0, -0.1], [0.0, 1.0]]))


def test_dominant_eigpair_warm_start_matches():
    rng = np.random.default_rng(15)
    mat = rng.random((4, 4))
    rho1, x1 = dominant_eigpair(mat)
    rho2, x2 = dominant_eigpair(mat, start=x1)
    assert rho2 == pytest.approx(rho1, rel=1e-11)
    assert np.allclose(x1, x2, atol=1e-10)


def test_dominant_eigpair_oscillatory_no_convergence():
    # periodic matrix from a start off the Perron vector never settles
    mat = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(NoConvergence):
        dominant_eigpair(mat, max_iter=50, start=np.array([0.9, 0.1]))


def test_linear_solve_identity():
    b = np.array([3.0, -1.0, 2.5])
    assert np.array_equal(linear_solve_real(np.eye(3), b), b)


def test_linear_solve_2x2_hand_cases():
    # the two 2x2 systems of the worked single-CBS instance, checked by
    # Cramer's rule computed right here
    m1 = [[0.9, -0.2], [-1.0, 1.0]]
    b1 = [0.2, 1.0]
    x1 = linear_solve_real(np.array(m1), np.array(b1))
    assert np.allclose(x1, cramer_2x2(m1, b1), rtol=1e-14)
    assert np.allclose(x1, [4.0 / 7.0, 11.0 / 7.0], rtol=1e-12)

    m2 = [[0.9, -0.1], [-2.0, 1.0]]
    # with the worked instance's right-hand side D*n = (0.1, 1) this is the
    # downlink power recovery; Cramer gives (2/7, 11/7)
    x2 = linear_solve_real(np.array(m2), np.array([0.1, 1.0]))
    assert np.allclose(x2, cramer_2x2(m2, [0.1, 1.0]), rtol=1e-14)
    assert np.allclose(x2, [2.0 / 7.0, 11.0 / 7.0], rtol=1e-12)
    # any other right-hand side follows the same oracle
    x3 = linear_solve_real(np.array(m2), np.array([0.2, 1.0]))
    assert np.allclose(x3, cramer_2x2(m2, [0.2, 1.0]), rtol=1e-14)
    assert np.allclose(x3, [3.0 / 7.0, 13.0 / 7.0], rtol=1e-12)


def test_linear_solve_random_residual():
    rng = np.random.default_rng(16)
    for n in (1, 2, 4, 6):
        for _ in range(20):
            m = rng.standard_normal((n, n)) + np.eye(n) * 0.5
            b = rng.standard_normal(n)
            x = linear_solve_real(m, b)
            assert np.linalg.norm(m @ x - b) <= 1e-10 * max(np.linalg.norm(b), 1.0)


def test_linear_solve_singular():
    with pytest.raises(Singular):
        linear_solve_real(np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2))
