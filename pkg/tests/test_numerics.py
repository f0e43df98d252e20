"""Tests for linear algebra and sampling primitives."""

import numpy as np
import pytest

from split_knockoffs.errors import (
    InsufficientDimensionError,
    InvalidParameterError,
    NotPositiveDefiniteError,
    NotPositiveSemidefiniteError,
)
from split_knockoffs.numerics import (
    ar1_covariance,
    child_seeds,
    cholesky_factor,
    cholesky_solve,
    make_rng,
    orthonormal_complement,
    psd_sqrt,
    sample_ar1_design,
    soft_threshold,
    sym_eigen,
    symmetrize,
)


def test_make_rng_is_deterministic():
    """Same seed gives the same stream."""
    a = make_rng(42).standard_normal(5)
    b = make_rng(42).standard_normal(5)
    assert np.array_equal(a, b)


def test_make_rng_rejects_out_of_range_seed():
    """Seeds must fit in 64 unsigned bits."""
    with pytest.raises(InvalidParameterError):
        make_rng(-1)
    with pytest.raises(InvalidParameterError):
        make_rng(2**64)


def test_child_seeds():
    """Child seeds are deterministic and distinct."""
    seeds = child_seeds(7, 4)
    assert seeds == child_seeds(7, 4)
    assert len(set(seeds)) == 4
    assert all(0 <= s < 2**64 for s in seeds)


def test_symmetrize_is_exact():
    """Result equals its transpose bit for bit."""
    M = make_rng(1).standard_normal((4, 4))
    S = symmetrize(M)
    assert np.array_equal(S, S.T)


def test_soft_threshold():
    """sign(x) max(|x| - t, 0)."""
    x = np.array([3.0, -0.5, 0.2, -2.0])
    assert np.allclose(soft_threshold(x, 1.0), [2.0, 0.0, 0.0, -1.0])
    with pytest.raises(InvalidParameterError):
        soft_threshold(x, -1.0)


def test_sym_eigen_rejects_non_finite():
    """NaN entries are refused."""
    with pytest.raises(InvalidParameterError):
        sym_eigen(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_psd_sqrt_reconstructs_matrix():
    """K^T K = M for a random PSD matrix."""
    B = make_rng(3).standard_normal((6, 4))
    M = B @ B.T  # rank 4, PSD
    K = psd_sqrt(M)
    np.testing.assert_allclose(K.T @ K, M, atol=1e-10)
    np.testing.assert_array_equal(K, K.T)


def test_psd_sqrt_clamps_tiny_negative_eigenvalues():
    """Round-off below zero is clamped, not rejected."""
    M = np.diag([1.0, -1e-12])
    K = psd_sqrt(M)
    np.testing.assert_allclose(K, np.diag([1.0, 0.0]), atol=1e-12)


def test_psd_sqrt_rejects_indefinite():
    """Clearly negative eigenvalues raise."""
    with pytest.raises(NotPositiveSemidefiniteError):
        psd_sqrt(np.diag([1.0, -0.5]))


def test_orthonormal_complement():
    """Columns are orthonormal and orthogonal to B."""
    B = make_rng(5).standard_normal((10, 4))
    U = orthonormal_complement(B, 3)
    assert U.shape == (10, 3)
    np.testing.assert_allclose(U.T @ B, 0.0, atol=1e-12)
    np.testing.assert_allclose(U.T @ U, np.eye(3), atol=1e-12)
    assert np.array_equal(U, orthonormal_complement(B, 3))


def test_orthonormal_complement_rank_deficient():
    """Pivoted fallback when B has dependent columns."""
    base = make_rng(6).standard_normal((6, 2))
    B = np.hstack([base, base[:, :1] + base[:, 1:]])  # rank 2
    U = orthonormal_complement(B, 4)
    np.testing.assert_allclose(U.T @ B, 0.0, atol=1e-12)
    np.testing.assert_allclose(U.T @ U, np.eye(4), atol=1e-12)


def test_orthonormal_complement_too_small():
    """rank(B) + k > rows raises."""
    B = make_rng(7).standard_normal((5, 3))
    with pytest.raises(InsufficientDimensionError):
        orthonormal_complement(B, 3)


def test_cholesky_rejects_singular():
    """Singular matrices are not positive definite."""
    with pytest.raises(NotPositiveDefiniteError):
        cholesky_factor(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_cholesky_solve():
    """Solves a positive definite system."""
    M = np.array([[4.0, 1.0], [1.0, 3.0]])
    x = cholesky_solve(M, np.array([1.0, 2.0]))
    np.testing.assert_allclose(M @ x, [1.0, 2.0])


def test_ar1_covariance():
    """Sigma_ij = rho^|i-j|."""
    S = ar1_covariance(4, 0.5)
    assert S[0, 0] == 1.0
    assert S[0, 3] == pytest.approx(0.125)
    assert S[2, 1] == pytest.approx(0.5)


def test_sample_ar1_design():
    """Shape, determinism and validation."""
    X = sample_ar1_design(make_rng(0), 20, 5, 0.5)
    assert X.shape == (20, 5)
    assert np.array_equal(X, sample_ar1_design(make_rng(0), 20, 5, 0.5))
    with pytest.raises(InvalidParameterError):
        sample_ar1_design(make_rng(0), 20, 5, 1.0)


def test_sym_eigen_worked_examples():
    """Eigenvalues ascend; diagonal inputs give axis eigenvectors."""
    values, vectors = sym_eigen(np.eye(3))
    np.testing.assert_allclose(values, [1.0, 1.0, 1.0])
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(3), atol=1e-12)

    values, vectors = sym_eigen(np.diag([2.0, 0.5]))
    np.testing.assert_allclose(values, [0.5, 2.0])
    np.testing.assert_allclose(np.abs(vectors), [[0.0, 1.0], [1.0, 0.0]], atol=1e-12)


def test_cholesky_solve_diagonal():
    """diag(2, 4) x = (2, 4) gives x = (1, 1)."""
    x = cholesky_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
    np.testing.assert_allclose(x, [1.0, 1.0])


def test_orthonormal_complement_full_rank_square():
    """A square full-rank B leaves no room for a complement."""
    with pytest.raises(InsufficientDimensionError):
        orthonormal_complement(np.eye(3), 1)


@pytest.mark.slow
def test_sample_ar1_design_correlation():
    """Adjacent columns correlate at rho."""
    X = sample_ar1_design(make_rng(11), 50_000, 4, 0.5)
    corr = np.corrcoef(X, rowvar=False)
    assert abs(corr[0, 1] - 0.5) < 0.02
    assert abs(corr[1, 3] - 0.25) < 0.02


def test_psd_sqrt_on_random_inputs():
    """K^T K reproduces random PSD matrices of varying rank and size."""
    rng = make_rng(20)
    for _ in range(100):
        d = int(rng.integers(1, 51))
        B = rng.standard_normal((d, int(rng.integers(1, d + 1))))
        M = B @ B.T
        K = psd_sqrt(M)
        assert np.linalg.norm(K.T @ K - M) <= 1e-8 * np.linalg.norm(M)


def test_orthonormal_complement_on_random_inputs():
    """Orthogonality residuals stay at round-off level for random shapes."""
    rng = make_rng(21)
    for _ in range(100):
        r = int(rng.integers(2, 40))
        c = int(rng.integers(1, r))
        k = int(rng.integers(1, r - c + 1))
        B = rng.standard_normal((r, c))
        U = orthonormal_complement(B, k)
        assert np.max(np.abs(U.T @ B)) <= 1e-10 * r * max(1.0, np.max(np.abs(B)))
        assert np.max(np.abs(U.T @ U - np.eye(k))) <= 1e-10 * r


def _power_iteration(M: np.ndarray, iters: int = 5000) -> float:
    v = np.ones(M.shape[0]) / np.sqrt(M.shape[0])
    for _ in range(iters):
        v = M @ v
        v /= np.linalg.norm(v)
    return float(v @ M @ v)


def test_sym_eigen_matches_power_iteration():
    """Top eigenvalue of A^T A matches power iteration; the rest match squared singular values."""
    rng = make_rng(22)
    for _ in range(10):
        A = rng.standard_normal((12, 5))
        values, vectors = sym_eigen(A.T @ A)
        assert values[-1] == pytest.approx(_power_iteration(A.T @ A), rel=1e-8)
        singular = np.linalg.svd(A, compute_uv=False)
        np.testing.assert_allclose(values, np.sort(singular**2), rtol=1e-8)
        np.testing.assert_allclose(vectors.T @ vectors, np.eye(5), atol=1e-12)


@pytest.mark.slow
def test_sample_ar1_design_independent_columns():
    """rho = 0 gives empirically uncorrelated columns."""
    X = sample_ar1_design(make_rng(23), 50_000, 4, 0.0)
    np.testing.assert_allclose(np.corrcoef(X, rowvar=False), np.eye(4), atol=0.02)
