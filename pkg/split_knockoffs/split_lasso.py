"""Split LASSO regularization path on D1 and the significance statistics Z, Z_tilde, r.

The path minimizes, for each lambda on a decreasing grid,

    1/(2 n1) ||y1 - X1 beta||^2 + 1/(2 nu) ||D beta - gamma||^2 + lambda ||gamma||_1

by block alternating minimization: an exact beta-step through one Cholesky
factor of X1^T X1/n1 + D^T D/nu, then a soft-threshold gamma-step.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg

from split_knockoffs.dataset import Dataset
from split_knockoffs.errors import (
    DimensionMismatchError,
    InternalInvariantViolationError,
    InvalidParameterError,
)
from split_knockoffs.numerics import cholesky_factor, soft_threshold

KKT_TOLERANCE = 1e-6
STEP_TOLERANCE = 1e-10


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly decreasing, log-uniform lambda values starting at lambda_max.

    Empty when lambda_max is zero.
    """
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    @property
    def lambda_max(self) -> float:
        return float(self.values[0]) if len(self.values) else 0.0


def make_lambda_grid(lambda_max: float, count: int = 200, min_ratio: float = 1e-3) -> LambdaGrid:
    """Log-spaced grid from lambda_max down to lambda_max * min_ratio."""
    if lambda_max < 0:
        raise InvalidParameterError(f"lambda_max must be non-negative, got {lambda_max}")
    if count < 2 or not 0.0 < min_ratio < 1.0:
        raise InvalidParameterError(
            f"need count >= 2 and 0 < min_ratio < 1, got {count}, {min_ratio}"
        )
    if lambda_max == 0.0:
        return LambdaGrid(values=np.empty(0))
    return LambdaGrid(values=np.geomspace(lambda_max, lambda_max * min_ratio, count))


@dataclass
class PointSolution:
    beta: np.ndarray
    gamma: np.ndarray
    iters: int
    converged: bool


class SplitLassoSolver:
    """Alternating minimization for a fixed (D1, D, nu).

    The Gram system is factored once; every beta-step reuses the factor through
    the precomputed solves beta_inf = M^-1 X1^T y1/n1 and G = M^-1 D^T/nu, so
    beta(gamma) = beta_inf + G gamma.
    """

    def __init__(
        self,
        dataset1: Dataset,
        D: np.ndarray,
        nu: float,
        max_iter: int = 10_000,
        check_monotone: bool = False,
    ):
        if nu <= 0:
            raise InvalidParameterError(f"nu must be positive, got {nu}")
        D = np.atleast_2d(np.asarray(D, dtype=float))
        if D.shape[1] != dataset1.p:
            raise DimensionMismatchError(
                f"D has {D.shape[1]} columns but X has {dataset1.p}"
            )
        self.X = dataset1.X
        self.y = dataset1.y
        self.n1 = dataset1.n
        self.D = D
        self.nu = float(nu)
        self.max_iter = max_iter
        self.check_monotone = check_monotone

        self.xty = self.X.T @ self.y / self.n1
        self.M = self.X.T @ self.X / self.n1 + D.T @ D / self.nu
        factor = cholesky_factor(self.M)
        self.beta_inf = scipy.linalg.cho_solve(factor, self.xty)
        self.G = scipy.linalg.cho_solve(factor, D.T / self.nu)
        self.d_inf = D @ self.beta_inf
        self._cache: Dict[float, PointSolution] = {}

    @property
    def m(self) -> int:
        return self.D.shape[0]

    @property
    def lambda_max(self) -> float:
        if self.m == 0:
            return 0.0
        return float(np.max(np.abs(self.d_inf)) / self.nu)

    def beta_step(self, gamma: np.ndarray) -> np.ndarray:
        """argmin over beta for fixed gamma."""
        return self.beta_inf + self.G @ gamma

    def objective(self, beta: np.ndarray, gamma: np.ndarray, lam: float) -> float:
        resid = self.y - self.X @ beta
        split = self.D @ beta - gamma
        return float(
            resid @ resid / (2 * self.n1)
            + split @ split / (2 * self.nu)
            + lam * np.abs(gamma).sum()
        )

    def kkt_residual(self, beta: np.ndarray, gamma: np.ndarray, lam: float) -> float:
        """Largest violation of the optimality conditions at (beta, gamma).

        With rho = (D beta - gamma)/(lambda nu): |rho| <= 1 everywhere, rho = sign(gamma)
        where gamma != 0, and the beta equation M beta = X1^T y1/n1 + D^T gamma/nu
        (relative to 1 + ||X1^T y1/n1||_inf).
        """
        if lam <= 0:
            raise InvalidParameterError(f"lambda must be positive, got {lam}")
        rho = (self.D @ beta - gamma) / (lam * self.nu)
        worst = float(np.max(np.abs(rho) - 1.0, initial=0.0))
        active = gamma != 0
        if np.any(active):
            worst = max(worst, float(np.max(np.abs(rho[active] - np.sign(gamma[active])))))
        beta_eq = self.M @ beta - self.xty - self.D.T @ gamma / self.nu
        scale = 1.0 + float(np.max(np.abs(self.xty), initial=0.0))
        return max(worst, float(np.max(np.abs(beta_eq), initial=0.0)) / scale)

    def solve(self, lam: float, gamma0: Optional[np.ndarray] = None) -> PointSolution:
        """Minimize the Split LASSO objective at one lambda, warm-started from gamma0.

        Stops once the largest beta coordinate change is at most
        1e-10 (1 + ||beta||_inf) and the KKT certificate is within 1e-6.
        """
        threshold = lam * self.nu
        gamma = np.zeros(self.m) if gamma0 is None else np.array(gamma0, dtype=float)
        beta = self.beta_step(gamma)
        previous = self.objective(beta, gamma, lam) if self.check_monotone else math.inf
        for it in range(1, self.max_iter + 1):
            gamma = soft_threshold(self.D @ beta, threshold)
            new_beta = self.beta_step(gamma)
            change = float(np.max(np.abs(new_beta - beta), initial=0.0))
            beta = new_beta
            if self.check_monotone:
                current = self.objective(beta, gamma, lam)
                if current > previous + 1e-12 * max(1.0, abs(previous)):
                    raise InternalInvariantViolationError(
                        f"objective increased from {previous!r} to {current!r} at lambda={lam!r}"
                    )
                previous = current
            if change <= STEP_TOLERANCE * (1.0 + float(np.max(np.abs(beta), initial=0.0))):
                if self.kkt_residual(beta, gamma, lam) <= KKT_TOLERANCE:
                    return PointSolution(beta=beta, gamma=gamma, iters=it, converged=True)
        return PointSolution(beta=beta, gamma=gamma, iters=self.max_iter, converged=False)

    def solve_cached(self, lam: float, gamma0: Optional[np.ndarray] = None) -> PointSolution:
        """``solve`` memoized on lambda, for bisection refinements."""
        hit = self._cache.get(lam)
        if hit is None:
            hit = self.solve(lam, gamma0)
            self._cache[lam] = hit
        return hit

    @property
    def refine_failures(self) -> int:
        """Memoized re-solves that hit max_iter."""
        return sum(1 for point in self._cache.values() if not point.converged)


@dataclass(frozen=True)
class BetaPath:
    """beta(lambda) on a grid; column k belongs to grid.values[k].

    ``solver`` re-solves at intermediate lambdas during refinement; synthetic
    paths may omit it, in which case refinement interpolates the grid bracket.
    """
    grid: LambdaGrid
    beta: np.ndarray  # p x K
    d_beta: np.ndarray  # m x K
    gamma: np.ndarray  # m x K
    iters: np.ndarray
    converged: np.ndarray
    d_inf: Optional[np.ndarray] = None  # D beta for every lambda >= lambda_max
    solver: Optional[SplitLassoSolver] = field(default=None, compare=False, repr=False)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    @property
    def lambda_max(self) -> float:
        return self.grid.lambda_max


def lambda_max(dataset1: Dataset, D: np.ndarray, nu: float) -> float:
    """Smallest lambda at which the joint minimizer has gamma = 0.

    Equals max_i |[D beta_inf]_i| / nu with beta_inf = M^-1 X1^T y1/n1.
    """
    return SplitLassoSolver(dataset1, D, nu).lambda_max


def solve_beta_path(
    dataset1: Dataset,
    D: np.ndarray,
    nu: float,
    grid: LambdaGrid,
    max_iter: int = 10_000,
    check_monotone: bool = False,
    solver: Optional[SplitLassoSolver] = None,
) -> BetaPath:
    """Solve the Split LASSO at every grid point, warm-starting down the grid.

    Non-convergence is flagged per point, never raised.
    """
    if solver is None:
        solver = SplitLassoSolver(dataset1, D, nu, max_iter=max_iter, check_monotone=check_monotone)
    K, p, m = len(grid), dataset1.p, solver.m
    betas = np.empty((p, K))
    gammas = np.empty((m, K))
    iters = np.zeros(K, dtype=int)
    converged = np.ones(K, dtype=bool)
    gamma = np.zeros(m)
    for k, lam in enumerate(grid.values):
        point = solver.solve(float(lam), gamma)
        gamma = point.gamma
        betas[:, k] = point.beta
        gammas[:, k] = point.gamma
        iters[k] = point.iters
        converged[k] = point.converged
    return BetaPath(
        grid=grid,
        beta=betas,
        d_beta=solver.D @ betas,
        gamma=gammas,
        iters=iters,
        converged=converged,
        d_inf=solver.d_inf,
        solver=solver,
    )


def _crossing(lo: float, hi: float, u_lo: float, u_hi: float) -> float:
    """Root of sign(u_lo) u(lambda) = lambda for u linear on [lo, hi].

    Active at lo (|u_lo| > lo), inactive at hi.
    """
    s = 1.0 if u_lo > 0 else -1.0
    f_lo = s * u_lo - lo
    f_hi = s * u_hi - hi
    if f_lo - f_hi <= 0:
        return lo
    return float(min(max(lo + f_lo / (f_lo - f_hi) * (hi - lo), lo), hi))


def _significance(
    path: BetaPath,
    nu: float,
    offset: np.ndarray,
    refine_steps: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Largest lambda with |[D beta(lambda)]_i / nu + offset_i| > lambda, per coordinate.

    Scans the grid from lambda_max down for the first active point, bisects the
    bracketing interval re-solving beta at each midpoint, and finishes with a
    linear interpolation inside the last bracket. Also returns the sign of
    [D beta]_i at the first active lambda.
    """
    lam = path.grid.values
    m = path.d_beta.shape[0] if len(lam) else len(offset)
    levels = np.zeros(m)
    signs = np.zeros(m, dtype=int)
    d_inf = path.d_inf if path.d_inf is not None else np.zeros(m)

    if len(lam) == 0:
        # beta(lambda) = beta_inf for every lambda > 0
        u = d_inf / nu + offset
        levels = np.abs(u)
        signs = np.sign(d_inf).astype(int)
        return levels, signs

    u_grid = path.d_beta / nu + offset[:, None]
    active = np.abs(u_grid) > lam[None, :]
    solver = path.solver if refine_steps > 0 else None

    for i in range(m):
        hits = np.flatnonzero(active[i])
        if hits.size == 0:
            continue
        k = int(hits[0])
        if k == 0:
            # constant above lambda_max, so the crossing is closed-form
            levels[i] = abs(u_grid[i, 0])
            signs[i] = int(np.sign(path.d_beta[i, 0]))
            continue
        lo, hi = float(lam[k]), float(lam[k - 1])
        u_lo, u_hi = float(u_grid[i, k]), float(u_grid[i, k - 1])
        d_lo = float(path.d_beta[i, k])
        warm = path.gamma[:, k]
        if solver is not None:
            for _ in range(refine_steps):
                mid = 0.5 * (lo + hi)
                if not lo < mid < hi:
                    break
                point = solver.solve_cached(mid, warm)
                d_mid = float(solver.D[i] @ point.beta)
                u_mid = d_mid / nu + offset[i]
                if abs(u_mid) > mid:
                    lo, u_lo, d_lo, warm = mid, u_mid, d_mid, point.gamma
                else:
                    hi, u_hi = mid, u_mid
        levels[i] = _crossing(lo, hi, u_lo, u_hi)
        signs[i] = 1 if d_lo > 0 else -1
    return levels, signs


def compute_Z_r(path: BetaPath, nu: float, refine_steps: int = 30) -> Tuple[np.ndarray, np.ndarray]:
    """Significance Z_i = sup{lambda : gamma_i(lambda) != 0} and entry signs r.

    gamma_i(lambda) != 0 iff |[D beta(lambda)]_i| > lambda nu. Coordinates never
    active on the grid get Z_i = 0 and r_i = 0.
    """
    m = path.d_beta.shape[0] if len(path.grid) else (len(path.d_inf) if path.d_inf is not None else 0)
    Z, r = _significance(path, nu, np.zeros(m), refine_steps)
    r = np.where(Z > 0, r, 0)
    return Z, r


def compute_Z_tilde(
    path: BetaPath,
    nu: float,
    zeta: np.ndarray,
    refine_steps: int = 30,
) -> np.ndarray:
    """Knockoff significance: gamma_tilde_i(lambda) != 0 iff |[D beta]_i/nu + zeta_i| > lambda."""
    zeta = np.asarray(zeta, dtype=float).reshape(-1)
    m = path.d_beta.shape[0] if len(path.grid) else (len(path.d_inf) if path.d_inf is not None else len(zeta))
    if zeta.shape[0] != m:
        raise DimensionMismatchError(f"zeta has length {zeta.shape[0]}, expected {m}")
    Z_tilde, _ = _significance(path, nu, zeta, refine_steps)
    return Z_tilde


@dataclass(frozen=True)
class FeatureStats:
    """Significance of each gamma coordinate and of its knockoff copy."""
    Z: np.ndarray
    Z_tilde: np.ndarray
    r: np.ndarray

    def __post_init__(self) -> None:
        if not (len(self.Z) == len(self.Z_tilde) == len(self.r)):
            raise DimensionMismatchError("Z, Z_tilde and r must have equal lengths")
        if np.any(self.r[self.Z == 0] != 0):
            raise InternalInvariantViolationError("r must vanish where Z is zero")


def feature_stats(
    path: BetaPath,
    nu: float,
    zeta: np.ndarray,
    refine_steps: int = 30,
) -> FeatureStats:
    """Z, r and Z_tilde sharing one path (and its re-solve cache)."""
    Z, r = compute_Z_r(path, nu, refine_steps)
    Z_tilde = compute_Z_tilde(path, nu, zeta, refine_steps)
    return FeatureStats(Z=Z, Z_tilde=Z_tilde, r=r)
