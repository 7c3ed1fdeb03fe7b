"""SVD reduction of the measurement matrix and basis classification."""

import numpy as np
import pytest

from centroid import (
    BASIS_MIXED,
    BASIS_NONNEG,
    RankDeficient,
    ShapeError,
    decompose,
    equivalent_measurement,
    feasible_point,
    from_basis,
)
from centroid.measurement import _jacobi_svd, classify_basis, simplex_vertices

from helpers import nonneg_system, qr_basis


@pytest.mark.parametrize("shape", [(1, 3), (2, 5), (3, 7), (5, 9)])
def test_decompose_reconstructs_and_validates(shape):
    rng = np.random.default_rng(sum(shape))
    A = rng.standard_normal(shape)
    sys = decompose(A)
    assert sys.M, sys.N == shape
    recon = sys.U_s @ np.diag(sys.Sigma_s) @ sys.V_s.T
    assert np.linalg.norm(recon - A) <= 1e-10 * np.linalg.norm(A)
    assert np.linalg.norm(sys.V_s.T @ sys.V_s - np.eye(sys.M)) <= 1e-12
    assert np.linalg.norm(sys.V_0.T @ sys.V_0 - np.eye(sys.N - sys.M)) <= 1e-12
    assert np.linalg.norm(sys.V_s.T @ sys.V_0) <= 1e-12


def test_equivalent_measurement_is_vst_x():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((3, 6))
    sys = decompose(A)
    x = rng.dirichlet(np.ones(7))[:6]
    t = equivalent_measurement(sys, A @ x)
    assert np.allclose(t, sys.V_s.T @ x, atol=1e-10)


def test_jacobi_singular_values_match_reference():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((4, 8))
    _, sigma, _ = _jacobi_svd(A)
    ref = np.linalg.svd(A, compute_uv=False)
    assert np.allclose(sigma, ref, rtol=1e-12)


def test_decompose_deterministic_and_sign_fixed():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((2, 5))
    s1, s2 = decompose(A), decompose(A.copy())
    assert np.array_equal(s1.V_s, s2.V_s)
    assert np.array_equal(s1.Sigma_s, s2.Sigma_s)
    for j in range(s1.M):
        col = s1.V_s[:, j]
        total = float(np.sum(col))
        if abs(total) > 1e-12:
            assert total > 0
        else:
            nz = np.nonzero(np.abs(col) > 1e-14)[0]
            assert col[nz[0]] > 0


def test_basis_classification():
    rng = np.random.default_rng(6)
    assert nonneg_system(6, 2, rng).basis_class == BASIS_NONNEG
    Q = qr_basis(6, 2, rng)
    assert np.min(Q) < 0  # generic QR basis is sign-mixed
    assert classify_basis(Q) == BASIS_MIXED


def test_shape_and_rank_errors():
    rng = np.random.default_rng(7)
    with pytest.raises(ShapeError):
        decompose(rng.standard_normal((4, 4)))
    with pytest.raises(ShapeError):
        decompose(np.ones(5))
    row = rng.standard_normal(6)
    with pytest.raises(RankDeficient):
        decompose(np.vstack([row, row]))
    with pytest.raises(RankDeficient):
        decompose(np.zeros((2, 5)))


def test_from_basis_requires_orthonormal():
    with pytest.raises(ShapeError):
        from_basis(np.array([[1.0], [1.0], [0.0]]))  # column norm sqrt(2)


def test_feasible_point():
    rng = np.random.default_rng(8)
    sys = nonneg_system(5, 2, rng)
    x = rng.dirichlet(np.ones(6))[:5]
    t = sys.V_s.T @ x
    x0, ok = feasible_point(sys, t)
    assert np.allclose(sys.V_s.T @ x0, t, atol=1e-12)
    # far-out t gives an x0 outside the simplex
    _, bad = feasible_point(sys, t + 10.0)
    assert not bad


def test_simplex_vertices():
    V = simplex_vertices(4)
    assert V.shape == (5, 4)
    assert np.array_equal(V[:4], np.eye(4))
    assert np.array_equal(V[4], np.zeros(4))
