"""Feature screening on D1 for problems where n2 < m + p."""

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import Lasso, LassoCV
from sklearn.model_selection import KFold

from split_knockoffs.dataset import Dataset, split_dataset, split_samples
from split_knockoffs.errors import (
    InvalidFoldsError,
    InvalidParameterError,
    NonConvergedPathError,
    ScreeningTooLooseError,
)
from split_knockoffs.knockoff_filter import _as_matrix, _run_on_parts
from split_knockoffs.models import (
    ScreeningInfo,
    SelectionDiagnostics,
    SelectionResult,
    SplitConfig,
)
from split_knockoffs.numerics import child_seeds, make_rng
from split_knockoffs.split_lasso import SplitLassoSolver
from split_knockoffs.transforms import LinearTransform

SUPPORT_TOLERANCE = 1e-10
KKT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ScreenResult:
    """Kept beta columns and gamma rows (0-based, sorted) with the lambdas used."""
    S_beta: np.ndarray
    S_gamma: np.ndarray
    lambda_beta: float
    lambda_gamma: float

    def restrict(self, D: np.ndarray) -> np.ndarray:
        """D[S_gamma][:, S_beta]."""
        return D[np.ix_(self.S_gamma, self.S_beta)]

    def info(self) -> ScreeningInfo:
        return ScreeningInfo(
            lambda_beta=self.lambda_beta,
            lambda_gamma=self.lambda_gamma,
            S_beta=[int(i) + 1 for i in self.S_beta],
            S_gamma=[int(i) + 1 for i in self.S_gamma],
        )


def _columns(dataset: Dataset, cols: np.ndarray) -> Dataset:
    return Dataset(X=dataset.X[:, cols], y=dataset.y)


def lasso_kkt_residual(X: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """Largest violation of |X^T(y - X beta)/n|_i <= lam, with equality on the support."""
    grad = X.T @ (y - X @ beta) / X.shape[0]
    support = beta != 0
    worst = float(np.max(np.abs(grad[~support]) - lam, initial=0.0))
    if np.any(support):
        worst = max(worst, float(np.max(np.abs(grad[support] - lam * np.sign(beta[support])))))
    return worst


def lasso_fit(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> np.ndarray:
    """LASSO coefficients minimizing 1/(2n)||y - X beta||^2 + lam ||beta||_1.

    The fit is accepted only if its KKT residual is within
    KKT_TOLERANCE (1 + ||X^T y/n||_inf).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    model = Lasso(alpha=lam, fit_intercept=False, tol=tol, max_iter=max_iter)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model.fit(X, y)
    beta = np.asarray(model.coef_, dtype=float)
    residual = lasso_kkt_residual(X, y, beta, lam)
    scale = 1.0 + float(np.max(np.abs(X.T @ y), initial=0.0)) / X.shape[0]
    if residual > KKT_TOLERANCE * scale:
        raise NonConvergedPathError(
            f"LASSO at lambda={lam:.3e} stopped with KKT residual {residual:.3e}; raise max_iter"
        )
    return beta


def screen_beta(dataset1: Dataset, lambda_beta: float) -> np.ndarray:
    """Support of the LASSO fit on D1 at lambda_beta."""
    if lambda_beta <= 0:
        raise InvalidParameterError(f"lambda_beta must be positive, got {lambda_beta}")
    beta = lasso_fit(dataset1.X, dataset1.y, lambda_beta)
    return np.flatnonzero(np.abs(beta) > SUPPORT_TOLERANCE)


def screen_gamma(
    dataset1: Dataset,
    D_restricted_cols: np.ndarray,
    nu: float,
    lambda_gamma: float,
) -> np.ndarray:
    """Support of gamma from one Split LASSO solve at lambda_gamma.

    ``dataset1`` and ``D_restricted_cols`` must already be restricted to S_beta.
    """
    if lambda_gamma <= 0:
        raise InvalidParameterError(f"lambda_gamma must be positive, got {lambda_gamma}")
    if D_restricted_cols.shape[1] == 0:
        return np.empty(0, dtype=int)
    gamma = SplitLassoSolver(dataset1, D_restricted_cols, nu).solve(lambda_gamma).gamma
    return np.flatnonzero(np.abs(gamma) > SUPPORT_TOLERANCE)


def cv_lambda_beta(
    dataset1: Dataset,
    rng: np.random.Generator,
    folds: int = 5,
    count: int = 50,
    min_ratio: float = 1e-2,
) -> float:
    """LASSO penalty for screening by K-fold CV and the one-standard-error rule.

    Among grid values whose mean validation MSE is within one standard error of
    the minimum, the smallest is returned, so screening errs toward keeping
    more features.
    """
    n = dataset1.n
    if folds < 2 or n < folds:
        raise InvalidFoldsError(f"need 2 <= folds <= n1, got folds={folds}, n1={n}")
    top = float(np.max(np.abs(dataset1.X.T @ dataset1.y)) / n)
    if top == 0.0:
        raise InvalidParameterError("X1^T y1 is zero; there is nothing to screen for")

    splitter = KFold(n_splits=folds, shuffle=True, random_state=int(rng.integers(2**32 - 1)))
    estimator = LassoCV(
        alphas=np.geomspace(top, top * min_ratio, count),
        cv=splitter,
        fit_intercept=False,
        tol=1e-8,
        max_iter=100_000,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        estimator.fit(dataset1.X, dataset1.y)

    # mse_path_ is (alphas, folds), alphas_ descending
    losses = np.asarray(estimator.mse_path_)
    mean = losses.mean(axis=1)
    se = losses.std(axis=1, ddof=1) / np.sqrt(folds)
    best = int(np.argmin(mean))
    within = np.flatnonzero(mean <= mean[best] + se[best])
    return float(estimator.alphas_[within.max()])


def budget_lambda_gamma(
    dataset1: Dataset,
    D_restricted_cols: np.ndarray,
    nu: float,
    n2: int,
    count: int = 50,
    min_ratio: float = 1e-3,
) -> float:
    """Smallest lambda_gamma on a log grid with |S_beta| + |S_gamma| <= n2."""
    n_beta = D_restricted_cols.shape[1]
    if n_beta > n2:
        raise ScreeningTooLooseError(
            f"|S_beta| = {n_beta} exceeds n2 = {n2} even with no gamma features; "
            "raise lambda_beta"
        )
    if n_beta == 0:
        # any positive value leaves S_gamma empty
        return 1.0
    solver = SplitLassoSolver(dataset1, D_restricted_cols, nu)
    if solver.lambda_max == 0.0:
        return 1.0
    grid = np.geomspace(solver.lambda_max, solver.lambda_max * min_ratio, count)
    chosen = float(grid[0])
    gamma = np.zeros(solver.m)
    for lam in grid:
        gamma = solver.solve(float(lam), gamma).gamma
        if n_beta + int(np.sum(np.abs(gamma) > SUPPORT_TOLERANCE)) <= n2:
            chosen = float(lam)
    return chosen


def screening_rng(seed: int) -> np.random.Generator:
    """Generator for the lambda_beta cross-validation of a run seeded with ``seed``."""
    return make_rng(child_seeds(seed, 1)[0])


def screen_features(
    dataset1: Dataset,
    D: np.ndarray,
    nu: float,
    n2: int,
    lambda_beta: Optional[float] = None,
    lambda_gamma: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> ScreenResult:
    """Screen beta then gamma on D1, filling in default lambdas where not given."""
    if lambda_beta is None:
        if rng is None:
            raise InvalidParameterError("cross-validating lambda_beta needs a generator")
        lambda_beta = cv_lambda_beta(dataset1, rng)
    S_beta = screen_beta(dataset1, lambda_beta)
    restricted1 = _columns(dataset1, S_beta)
    D_cols = D[:, S_beta]
    if lambda_gamma is None:
        lambda_gamma = budget_lambda_gamma(restricted1, D_cols, nu, n2)
    S_gamma = screen_gamma(restricted1, D_cols, nu, lambda_gamma)
    if S_beta.size + S_gamma.size > n2:
        raise ScreeningTooLooseError(
            f"after screening |S_beta| + |S_gamma| = {S_beta.size} + {S_gamma.size} "
            f"exceeds n2 = {n2}; raise lambda_gamma (or lambda_beta)"
        )
    return ScreenResult(
        S_beta=S_beta, S_gamma=S_gamma, lambda_beta=float(lambda_beta), lambda_gamma=float(lambda_gamma)
    )


def run_hd_pipeline(
    dataset: Dataset,
    D: Union[LinearTransform, np.ndarray],
    config: SplitConfig,
    lambda_beta: Optional[float] = None,
    lambda_gamma: Optional[float] = None,
) -> SelectionResult:
    """Split Knockoffs after screening, with indices reported in the original coordinates.

    Screening only sees D1; the same split then feeds the restricted filter.
    Coordinates outside S_gamma are never tested.
    """
    matrix = _as_matrix(D, dataset.p)
    split = split_samples(
        dataset.n, config.resolve_n1(dataset.n), make_rng(config.seed), config.split_mode
    )
    d1, d2 = split_dataset(dataset, split)
    screen = screen_features(
        d1, matrix, config.nu, d2.n, lambda_beta, lambda_gamma, screening_rng(config.seed)
    )

    if screen.S_gamma.size == 0:
        return SelectionResult(
            W=[], Z=[], Z_tilde=[], r=[], T=None, selected=[], signs={}, tested=[],
            config=config,
            diagnostics=SelectionDiagnostics(
                mode="hd", nu=config.nu, n1=d1.n, n2=d2.n, lambda_max=0.0,
                converged=[], s=[], screening=screen.info(),
            ),
        )
    return _run_on_parts(
        _columns(d1, screen.S_beta),
        _columns(d2, screen.S_beta),
        screen.restrict(matrix),
        config,
        mode="hd",
        tested=[int(i) + 1 for i in screen.S_gamma],
        screening=screen.info(),
    )
