"""Split Knockoff copy of the gamma block of the augmented design on D2."""

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

from split_knockoffs.dataset import Dataset
from split_knockoffs.errors import (
    DimensionMismatchError,
    InfeasibleSError,
    InsufficientSamplesError,
    InvalidParameterError,
    NotPositiveSemidefiniteError,
)
from split_knockoffs.numerics import (
    SymMatrix,
    cholesky_solve,
    orthonormal_complement,
    psd_sqrt,
    sym_eigen,
    symmetrize,
)

FEASIBILITY_TOLERANCE = 1e-8


@dataclass(frozen=True)
class AugmentedDesign:
    """Stacked design of the D2 Split LASSO problem.

    A_beta = [X2/sqrt(n2); D/sqrt(nu)], A_gamma = [0; -I/sqrt(nu)],
    y_tilde = [y2/sqrt(n2); 0].
    """
    A_beta: np.ndarray
    A_gamma: np.ndarray
    y_tilde: np.ndarray
    n2: int
    m: int
    p: int
    nu: float

    @property
    def X2_scaled(self) -> np.ndarray:
        """Top block X2/sqrt(n2)."""
        return self.A_beta[: self.n2]

    @property
    def sigma_beta_beta(self) -> SymMatrix:
        return symmetrize(self.A_beta.T @ self.A_beta)


@dataclass(frozen=True)
class KnockoffCopy:
    A_tilde: np.ndarray
    s: np.ndarray
    C_nu: SymMatrix


def build_augmented(dataset2: Dataset, D: np.ndarray, nu: float) -> AugmentedDesign:
    """Assemble the augmented blocks for D2, normalizing the noise block by sqrt(n2)."""
    if nu <= 0:
        raise InvalidParameterError(f"nu must be positive, got {nu}")
    D = np.atleast_2d(np.asarray(D, dtype=float))
    n2, p = dataset2.X.shape
    if D.shape[1] != p:
        raise DimensionMismatchError(f"D has {D.shape[1]} columns but X has {p}")
    m = D.shape[0]
    root_n2, root_nu = math.sqrt(n2), math.sqrt(nu)
    A_beta = np.vstack([dataset2.X / root_n2, D / root_nu])
    A_gamma = np.vstack([np.zeros((n2, m)), -np.eye(m) / root_nu])
    y_tilde = np.concatenate([dataset2.y / root_n2, np.zeros(m)])
    return AugmentedDesign(
        A_beta=A_beta, A_gamma=A_gamma, y_tilde=y_tilde, n2=n2, m=m, p=p, nu=float(nu)
    )


def _beta_gamma_solve(aug: AugmentedDesign) -> np.ndarray:
    """Sigma_bb^-1 Sigma_bg with Sigma_bg = A_beta^T A_gamma = -D^T/nu."""
    return cholesky_solve(aug.sigma_beta_beta, aug.A_beta.T @ aug.A_gamma)


def compute_C_nu(aug: AugmentedDesign) -> SymMatrix:
    """Schur complement of Sigma_bb in the Gram matrix of [A_beta, A_gamma].

    C_nu = I/nu - D (X2^T X2/n2 + D^T D/nu)^-1 D^T / nu^2.
    """
    sigma_gb = aug.A_gamma.T @ aug.A_beta
    sigma_gg = aug.A_gamma.T @ aug.A_gamma
    return symmetrize(sigma_gg - sigma_gb @ _beta_gamma_solve(aug))


def s_equicorrelated(C: SymMatrix, nu: float) -> np.ndarray:
    """Constant s_i = min(2 lambda_min(C), 1/nu)."""
    eigenvalues, _ = sym_eigen(C)
    smallest = float(eigenvalues[0])
    if smallest < -FEASIBILITY_TOLERANCE:
        raise NotPositiveSemidefiniteError(
            f"C_nu has minimum eigenvalue {smallest:.3e}; expected a PSD Schur complement"
        )
    level = min(2.0 * max(smallest, 0.0), 1.0 / nu)
    return np.full(C.shape[0], level)


def _check_feasible(C: SymMatrix, s: np.ndarray) -> None:
    if np.any(s < 0):
        raise InfeasibleSError("s has negative entries")
    eigenvalues, _ = sym_eigen(2.0 * C - np.diag(s))
    if eigenvalues.size and eigenvalues[0] < -FEASIBILITY_TOLERANCE:
        raise InfeasibleSError(
            f"2 C_nu - diag(s) has minimum eigenvalue {eigenvalues[0]:.3e}"
        )


def construct_copy(aug: AugmentedDesign, s: np.ndarray) -> KnockoffCopy:
    """Build A_tilde with

        A_tilde^T A_tilde = A_gamma^T A_gamma
        A_beta^T A_tilde  = A_beta^T A_gamma
        A_gamma^T A_tilde = A_gamma^T A_gamma - diag(s)

    A_tilde = A_gamma (I - C^-1 S) + A_beta Sigma_bb^-1 Sigma_bg C^-1 S + U K with
    S = diag(s), K^T K = 2S - S C^-1 S and U orthonormal to [A_beta, A_gamma].
    The result depends only on (X2, D, nu, s).
    """
    if aug.n2 < aug.m + aug.p:
        raise InsufficientSamplesError(
            f"n2 = {aug.n2} < m + p = {aug.m + aug.p}; screen features first"
        )
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape[0] != aug.m:
        raise DimensionMismatchError(f"s has length {s.shape[0]}, expected {aug.m}")
    C = compute_C_nu(aug)
    _check_feasible(C, s)
    if not np.any(s):
        return KnockoffCopy(A_tilde=aug.A_gamma.copy(), s=s, C_nu=C)

    S = np.diag(s)
    c_inv_s = cholesky_solve(C, S)
    try:
        K = psd_sqrt(2.0 * S - S @ c_inv_s)
    except NotPositiveSemidefiniteError as e:
        raise InfeasibleSError(f"2S - S C^-1 S is not PSD: {e}") from e
    U = orthonormal_complement(np.hstack([aug.A_beta, aug.A_gamma]), aug.m)
    A_tilde = (
        aug.A_gamma @ (np.eye(aug.m) - c_inv_s)
        + aug.A_beta @ (_beta_gamma_solve(aug) @ c_inv_s)
        + U @ K
    )
    return KnockoffCopy(A_tilde=A_tilde, s=s, C_nu=C)


def compute_zeta(copy: KnockoffCopy, aug: AugmentedDesign) -> np.ndarray:
    """zeta = A_tilde^T y_tilde, the knockoff noise vector."""
    if copy.A_tilde.shape != (aug.y_tilde.shape[0], aug.m):
        raise DimensionMismatchError(
            f"copy has shape {copy.A_tilde.shape}, design expects ({aug.y_tilde.shape[0]}, {aug.m})"
        )
    return copy.A_tilde.T @ aug.y_tilde


def _relative(lhs: np.ndarray, rhs: np.ndarray, scale: float) -> float:
    return float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), scale))


def copy_residuals(copy: KnockoffCopy, aug: AugmentedDesign) -> Dict[str, float]:
    """Relative Frobenius errors of the copy conditions and the block structure.

    Keys ``gram``, ``cross_beta`` and ``cross_gamma`` are the defining conditions;
    ``bottom_block``, ``top_cross`` and ``top_gram`` describe the resulting shape
    of A_tilde in terms of X2, D and s.
    """
    A = copy.A_tilde
    S = np.diag(copy.s)
    gg = aug.A_gamma.T @ aug.A_gamma
    scale = float(np.linalg.norm(gg))
    top, bottom = A[: aug.n2], A[aug.n2 :]
    D = aug.A_beta[aug.n2 :] * math.sqrt(aug.nu)
    X2 = aug.X2_scaled * math.sqrt(aug.n2)
    root_nu = math.sqrt(aug.nu)
    return {
        "gram": _relative(A.T @ A, gg, scale),
        "cross_beta": _relative(aug.A_beta.T @ A, aug.A_beta.T @ aug.A_gamma, scale),
        "cross_gamma": _relative(aug.A_gamma.T @ A, gg - S, scale),
        "bottom_block": _relative(bottom, -np.eye(aug.m) / root_nu + root_nu * S, scale),
        "top_cross": _relative(top.T @ X2, -math.sqrt(aug.n2) * S @ D, scale),
        "top_gram": _relative(top.T @ top, S @ (2.0 * np.eye(aug.m) - aug.nu * S), scale),
    }
