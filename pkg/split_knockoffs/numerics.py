"""Dense linear algebra and seeded sampling primitives."""

from typing import List, Tuple, Union

import numpy as np
import scipy.linalg

from split_knockoffs.errors import (
    InsufficientDimensionError,
    InvalidParameterError,
    NotPositiveDefiniteError,
    NotPositiveSemidefiniteError,
)

# Symmetric matrices are plain ndarrays passed through ``symmetrize``.
SymMatrix = np.ndarray

# Pinned so that seeded experiments replay exactly.
RNG_ALGORITHM = "PCG64"

ArrayLike = Union[float, np.ndarray]


def make_rng(seed: int) -> np.random.Generator:
    """Create the project's random generator for a 64-bit seed."""
    if seed < 0 or seed >= 2**64:
        raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def child_seeds(seed: int, count: int) -> List[int]:
    """Derive ``count`` independent 64-bit seeds from ``seed``.

    Parallel callers use these instead of sharing one generator.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def symmetrize(M: np.ndarray) -> SymMatrix:
    """Return (M + M^T)/2 so that entries[i][j] == entries[j][i] exactly."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidParameterError(f"expected a square matrix, got shape {M.shape}")
    return 0.5 * (M + M.T)


def soft_threshold(x: ArrayLike, t: float) -> ArrayLike:
    """sign(x) * max(|x| - t, 0), elementwise."""
    if t < 0:
        raise InvalidParameterError(f"threshold must be non-negative, got {t}")
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def sym_eigen(M: SymMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix.

    Returns:
        (eigenvalues ascending, orthonormal eigenvectors as columns)
    """
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InvalidParameterError("matrix has non-finite entries")
    return scipy.linalg.eigh(symmetrize(M))


def psd_sqrt(M: SymMatrix) -> np.ndarray:
    """Symmetric square root K of a numerically PSD matrix, K^T K = M.

    Eigenvalues in [-1e-8 ||M||, 0) are clamped to zero; the equi-correlated
    construction lands exactly on the PSD boundary, so such modes are expected.
    """
    eigenvalues, vectors = sym_eigen(M)
    scale = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    if eigenvalues.size and eigenvalues[0] < -1e-8 * scale:
        raise NotPositiveSemidefiniteError(
            f"minimum eigenvalue {eigenvalues[0]:.3e} below tolerance {-1e-8 * scale:.3e}"
        )
    root = np.sqrt(np.clip(eigenvalues, 0.0, None))
    return symmetrize((vectors * root) @ vectors.T)


def orthonormal_complement(B: np.ndarray, k: int) -> np.ndarray:
    """An r x k orthonormal basis U with U^T B = 0.

    Householder QR without pivoting over the columns of B in natural order; the
    result is deterministic for a fixed B. Rank-deficient B falls back to
    column-pivoted QR when the unpivoted trailing block is too small.
    """
    B = np.asarray(B, dtype=float)
    if k < 1:
        raise InvalidParameterError(f"k must be positive, got {k}")
    r, c = B.shape
    rank = int(np.linalg.matrix_rank(B)) if B.size else 0
    if rank + k > r:
        raise InsufficientDimensionError(
            f"rank(B) + k = {rank} + {k} exceeds the ambient dimension {r}"
        )
    if c + k <= r:
        Q, _ = scipy.linalg.qr(B, mode="full")
        return Q[:, c : c + k]
    Q, _, _ = scipy.linalg.qr(B, mode="full", pivoting=True)
    return Q[:, rank : rank + k]


def cholesky_factor(M: SymMatrix) -> Tuple[np.ndarray, bool]:
    """Cholesky factor of a positive definite matrix, for repeated solves."""
    try:
        return scipy.linalg.cho_factor(symmetrize(M), lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {e}") from e


def cholesky_solve(M: SymMatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve M x = rhs for positive definite M."""
    return scipy.linalg.cho_solve(cholesky_factor(M), np.asarray(rhs, dtype=float))


def ar1_covariance(p: int, rho: float) -> SymMatrix:
    """Sigma_ij = rho^|i-j|."""
    return scipy.linalg.toeplitz(rho ** np.arange(p, dtype=float))


def sample_ar1_design(rng: np.random.Generator, n: int, p: int, rho: float) -> np.ndarray:
    """Draw n i.i.d. rows from N(0, Sigma) with AR(1) covariance rho^|i-j|."""
    if n < 1 or p < 1:
        raise InvalidParameterError(f"n and p must be positive, got n={n}, p={p}")
    if not 0.0 <= rho < 1.0:
        raise InvalidParameterError(f"rho must lie in [0, 1), got {rho}")
    lower = scipy.linalg.cholesky(ar1_covariance(p, rho), lower=True)
    return rng.standard_normal((n, p)) @ lower.T
