"""Ground truth, directional error metrics, simulated instances and CV over nu."""

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import KFold

from split_knockoffs.dataset import Dataset
from split_knockoffs.errors import DimensionMismatchError, InvalidFoldsError, InvalidParameterError
from split_knockoffs.models import ExperimentSpec, SelectionResult
from split_knockoffs.numerics import make_rng, sample_ar1_design
from split_knockoffs.split_lasso import SplitLassoSolver, make_lambda_grid, solve_beta_path
from split_knockoffs.transforms import LinearTransform, make_transform


@dataclass(frozen=True)
class GroundTruth:
    """True coefficients and the transformed signal gamma* = D beta*."""
    beta_star: np.ndarray
    gamma_star: np.ndarray
    sigma: float

    @classmethod
    def from_beta(cls, D: np.ndarray, beta_star: np.ndarray, sigma: float) -> "GroundTruth":
        beta_star = np.asarray(beta_star, dtype=float)
        return cls(beta_star=beta_star, gamma_star=D @ beta_star, sigma=sigma)


def _selected_signs(selection: SelectionResult, gamma_star: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Estimated and true signs on the selected (1-based) coordinates."""
    gamma_star = np.asarray(gamma_star, dtype=float).reshape(-1)
    idx = np.asarray(selection.selected, dtype=int)
    if idx.size and (idx.min() < 1 or idx.max() > gamma_star.size):
        raise DimensionMismatchError(
            f"selected index outside 1..{gamma_star.size}"
        )
    estimated = np.array([selection.signs[i] for i in selection.selected], dtype=int)
    return estimated, np.sign(gamma_star[idx - 1]).astype(int)


def fdp_dir(selection: SelectionResult, gamma_star: np.ndarray) -> float:
    """Fraction of selections whose sign differs from sign(gamma*_i), nulls included."""
    estimated, truth = _selected_signs(selection, gamma_star)
    return int(np.sum(estimated != truth)) / max(len(estimated), 1)


def mfdp_dir(selection: SelectionResult, gamma_star: np.ndarray, q: float) -> float:
    """Directional errors over |S| + 1/q."""
    estimated, truth = _selected_signs(selection, gamma_star)
    return int(np.sum(estimated != truth)) / (len(estimated) + 1.0 / q)


def fdp_classical(selection: SelectionResult, gamma_star: np.ndarray) -> float:
    """Fraction of selections with gamma*_i = 0."""
    _, truth = _selected_signs(selection, gamma_star)
    return int(np.sum(truth == 0)) / max(len(truth), 1)


def power_dir(selection: SelectionResult, gamma_star: np.ndarray) -> float:
    """Share of nonzero gamma*_i selected with the correct sign.

    Returns 1.0 when gamma* has no nonzero entry.
    """
    estimated, truth = _selected_signs(selection, gamma_star)
    nonnull = int(np.count_nonzero(np.asarray(gamma_star)))
    if nonnull == 0:
        return 1.0
    return int(np.sum((estimated == truth) & (truth != 0))) / nonnull


def pattern_support(p: int) -> np.ndarray:
    """1-based i <= 20 with i = 0 or -1 (mod 3)."""
    return np.array([i for i in range(1, min(p, 20) + 1) if i % 3 in (0, 2)], dtype=int)


def beta_pattern(p: int, pattern: str = "mod3", amplitude: float = 1.0) -> np.ndarray:
    beta = np.zeros(p)
    if pattern == "mod3":
        beta[pattern_support(p) - 1] = amplitude
    elif pattern != "null":
        raise InvalidParameterError(f"unknown beta pattern: {pattern}")
    return beta


def generate_instance(
    spec: ExperimentSpec, replicate_seed: int
) -> Tuple[Dataset, GroundTruth, LinearTransform]:
    """AR(1) design, patterned beta*, Gaussian noise; deterministic per seed."""
    rng = make_rng(replicate_seed)
    X = sample_ar1_design(rng, spec.n, spec.p, spec.rho)
    transform = make_transform(spec.transform_kind, spec.p)
    truth = GroundTruth.from_beta(
        transform.D, beta_pattern(spec.p, spec.beta_pattern, spec.amplitude), spec.sigma
    )
    noise = rng.standard_normal(spec.n)
    y = X @ truth.beta_star
    if spec.sigma > 0:
        y = y + spec.sigma * noise
    return Dataset(X=X, y=y), truth, transform


def _fold_loss(
    train: Dataset,
    valid: Dataset,
    D: np.ndarray,
    nu: float,
    lambda_count: int,
    lambda_min_ratio: float,
) -> float:
    """Smallest validation MSE along the Split LASSO path fitted on one training fold."""
    solver = SplitLassoSolver(train, D, nu)
    grid = make_lambda_grid(solver.lambda_max, lambda_count, lambda_min_ratio)
    betas = solve_beta_path(train, D, nu, grid, solver=solver).beta
    # beta_inf covers every lambda >= lambda_max
    betas = np.column_stack([solver.beta_inf, betas])
    resid = valid.y[:, None] - valid.X @ betas
    return float(np.min(np.mean(resid**2, axis=0)))


def cv_select_nu(
    dataset1: Dataset,
    D: np.ndarray,
    nu_grid: Sequence[float],
    folds: int,
    rng: np.random.Generator,
    lambda_count: int = 50,
    lambda_min_ratio: float = 1e-3,
) -> Tuple[float, pd.DataFrame]:
    """Pick nu by K-fold cross-validation of the Split LASSO on D1.

    For each nu the fold loss is the best validation MSE over the lambda path;
    losses are averaged over folds. Ties go to the smaller nu.

    Returns:
        (nu_star, table with columns nu, log10_nu, cv_mse, cv_se)
    """
    nus = np.sort(np.asarray(list(nu_grid), dtype=float))
    if nus.size == 0 or np.any(nus <= 0):
        raise InvalidParameterError("nu grid must be non-empty and positive")
    if folds < 2 or dataset1.n < folds:
        raise InvalidFoldsError(f"need 2 <= folds <= n1, got folds={folds}, n1={dataset1.n}")
    splitter = KFold(n_splits=folds, shuffle=True, random_state=int(rng.integers(2**32 - 1)))
    parts = [
        (Dataset(X=dataset1.X[tr], y=dataset1.y[tr]), Dataset(X=dataset1.X[va], y=dataset1.y[va]))
        for tr, va in splitter.split(dataset1.X)
    ]

    rows = []
    for nu in nus:
        losses = np.array(
            [_fold_loss(tr, va, D, float(nu), lambda_count, lambda_min_ratio) for tr, va in parts]
        )
        rows.append(
            {
                "nu": float(nu),
                "log10_nu": float(np.log10(nu)),
                "cv_mse": float(losses.mean()),
                "cv_se": float(losses.std(ddof=1) / np.sqrt(folds)),
            }
        )
    table = pd.DataFrame(rows)
    return float(table["nu"].iloc[int(np.argmin(table["cv_mse"].to_numpy()))]), table


def nu_grid_from_log10(values: Iterable[float]) -> list[float]:
    return [float(10.0**v) for v in values]
