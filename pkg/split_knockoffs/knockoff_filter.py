"""W statistics, knockoff thresholds and the end-to-end selection pipelines."""

from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from split_knockoffs.dataset import Dataset, split_dataset, split_samples
from split_knockoffs.errors import (
    DimensionMismatchError,
    InsufficientSamplesError,
    InternalInvariantViolationError,
    InvalidParameterError,
    NonConvergedPathError,
)
from split_knockoffs.knockoff_copy import (
    build_augmented,
    compute_C_nu,
    compute_zeta,
    construct_copy,
    s_equicorrelated,
)
from split_knockoffs.models import (
    ScreeningInfo,
    SelectionDiagnostics,
    SelectionResult,
    SplitConfig,
)
from split_knockoffs.numerics import make_rng
from split_knockoffs.split_lasso import (
    BetaPath,
    SplitLassoSolver,
    feature_stats,
    make_lambda_grid,
    solve_beta_path,
)
from split_knockoffs.transforms import LinearTransform

# |Z - Z_tilde| at or below this multiple of lambda_max counts as a tie.
TIE_TOLERANCE = 1e-9

Mode = Literal["split", "no_split", "hd"]


def _check_pair(Z: np.ndarray, Z_tilde: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    Z = np.asarray(Z, dtype=float).reshape(-1)
    Z_tilde = np.asarray(Z_tilde, dtype=float).reshape(-1)
    if Z.shape != Z_tilde.shape:
        raise DimensionMismatchError(
            f"Z has length {Z.shape[0]} but Z_tilde has length {Z_tilde.shape[0]}"
        )
    return Z, Z_tilde


def _tie_signs(Z: np.ndarray, Z_tilde: np.ndarray, tie_scale: float) -> np.ndarray:
    diff = Z - Z_tilde
    return np.where(np.abs(diff) <= TIE_TOLERANCE * tie_scale, 0.0, np.sign(diff))


def w_statistics(Z: np.ndarray, Z_tilde: np.ndarray, tie_scale: float = 0.0) -> np.ndarray:
    """W_i = Z_i * sign(Z_i - Z_tilde_i).

    Args:
        Z: Significance of each coordinate
        Z_tilde: Significance of its knockoff
        tie_scale: lambda_max of the path; differences within 1e-9 * tie_scale give W_i = 0

    Returns:
        W with |W| = Z
    """
    Z, Z_tilde = _check_pair(Z, Z_tilde)
    return Z * _tie_signs(Z, Z_tilde, tie_scale)


def w_statistics_max(Z: np.ndarray, Z_tilde: np.ndarray, tie_scale: float = 0.0) -> np.ndarray:
    """W'_i = max(Z_i, Z_tilde_i) * sign(Z_i - Z_tilde_i); W' <= W elementwise."""
    Z, Z_tilde = _check_pair(Z, Z_tilde)
    return np.maximum(Z, Z_tilde) * _tie_signs(Z, Z_tilde, tie_scale)


def threshold(W: np.ndarray, q: float, plus: bool) -> Optional[float]:
    """Knockoff (plus=False) or knockoff+ threshold.

    Smallest distinct positive |W_i| = t with
    (#{W <= -t} + plus) / max(1, #{W >= t}) <= q, or None (+infinity).
    """
    if not 0.0 < q < 1.0:
        raise InvalidParameterError(f"q must lie in (0, 1), got {q}")
    W = np.asarray(W, dtype=float).reshape(-1)
    candidates = np.unique(np.abs(W[W != 0]))
    if candidates.size == 0:
        return None
    ordered = np.sort(W)
    positives = len(ordered) - np.searchsorted(ordered, candidates, side="left")
    negatives = np.searchsorted(ordered, -candidates, side="right")
    ratio = (negatives + int(plus)) / np.maximum(1, positives)
    passing = np.flatnonzero(ratio <= q)
    if passing.size == 0:
        return None
    return float(candidates[passing[0]])


def select(W: np.ndarray, T: Optional[float], r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Positions with W_i >= T and their direction estimates r_i.

    Returns:
        (sorted 0-based positions, signs at those positions)
    """
    W = np.asarray(W, dtype=float).reshape(-1)
    r = np.asarray(r, dtype=int).reshape(-1)
    if T is None:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    chosen = np.flatnonzero(W >= T)
    signs = r[chosen]
    if np.any(signs == 0):
        raise InternalInvariantViolationError("selected coordinate has no direction estimate")
    return chosen, signs


def fdp_hat(W: np.ndarray, T: Optional[float], plus: bool) -> float:
    """Estimated false discovery proportion at threshold T (0 when T is +infinity)."""
    if T is None:
        return 0.0
    W = np.asarray(W, dtype=float)
    return (int(np.sum(W <= -T)) + int(plus)) / max(1, int(np.sum(W >= T)))


def reselect(result: SelectionResult, plus: bool) -> SelectionResult:
    """The same W thresholded with the other (knockoff or knockoff+) rule."""
    if plus == result.config.plus:
        return result
    W = np.asarray(result.W, dtype=float)
    T = threshold(W, result.config.q, plus)
    chosen, signs = select(W, T, np.asarray(result.r, dtype=int))
    labels = result.tested
    return result.model_copy(
        update={
            "T": T,
            "selected": [labels[i] for i in chosen],
            "signs": {labels[i]: int(v) for i, v in zip(chosen, signs)},
            "config": result.config.model_copy(update={"plus": plus}),
        }
    )


def _as_matrix(D: Union[LinearTransform, np.ndarray], p: int) -> np.ndarray:
    matrix = D.D if isinstance(D, LinearTransform) else np.atleast_2d(np.asarray(D, dtype=float))
    if matrix.shape[1] != p:
        raise DimensionMismatchError(f"D has {matrix.shape[1]} columns but X has {p}")
    return matrix


def _solve_path(d1: Dataset, D: np.ndarray, config: SplitConfig) -> BetaPath:
    solver = SplitLassoSolver(d1, D, config.nu, max_iter=config.max_iter)
    grid = make_lambda_grid(solver.lambda_max, config.lambda_count, config.lambda_min_ratio)
    path = solve_beta_path(d1, D, config.nu, grid, solver=solver)
    if not path.all_converged and not config.allow_nonconverged:
        failed = int(np.sum(~path.converged))
        raise NonConvergedPathError(
            f"Split LASSO did not converge at {failed} of {len(grid)} grid points "
            f"(nu={config.nu}); raise max_iter or allow non-converged paths"
        )
    return path


def _run_on_parts(
    d1: Dataset,
    d2: Dataset,
    D: np.ndarray,
    config: SplitConfig,
    mode: Mode = "split",
    tested: Optional[Sequence[int]] = None,
    screening: Optional[ScreeningInfo] = None,
) -> SelectionResult:
    """Run the filter on an explicit (D1, D2) pair.

    ``tested`` maps positions of D's rows to 1-based reported indices.
    """
    m, p = D.shape
    if d2.n < m + p:
        raise InsufficientSamplesError(
            f"copy construction needs n2 >= m + p, got n2={d2.n}, m={m}, p={p}; "
            "use the high-dimensional pipeline to screen features"
        )
    path = _solve_path(d1, D, config)

    aug = build_augmented(d2, D, config.nu)
    s = s_equicorrelated(compute_C_nu(aug), config.nu)
    zeta = compute_zeta(construct_copy(aug, s), aug)

    stats = feature_stats(path, config.nu, zeta, config.refine_bisection_steps)
    refine_failures = path.solver.refine_failures if path.solver is not None else 0
    if refine_failures and not config.allow_nonconverged:
        raise NonConvergedPathError(
            f"{refine_failures} bisection re-solves did not converge (nu={config.nu}); "
            "raise max_iter or allow non-converged paths"
        )
    W = w_statistics(stats.Z, stats.Z_tilde, tie_scale=path.lambda_max)
    T = threshold(W, config.q, config.plus)
    chosen, signs = select(W, T, stats.r)

    labels: List[int] = list(tested) if tested is not None else list(range(1, m + 1))
    return SelectionResult(
        W=W.tolist(),
        Z=stats.Z.tolist(),
        Z_tilde=stats.Z_tilde.tolist(),
        r=[int(v) for v in stats.r],
        T=T,
        selected=[labels[i] for i in chosen],
        signs={labels[i]: int(v) for i, v in zip(chosen, signs)},
        tested=labels,
        config=config,
        diagnostics=SelectionDiagnostics(
            mode=mode,
            nu=config.nu,
            n1=d1.n,
            n2=d2.n,
            lambda_max=path.lambda_max,
            converged=path.converged.tolist(),
            refine_nonconverged=refine_failures,
            s=s.tolist(),
            screening=screening,
        ),
    )


def run_split_knockoff(
    dataset: Dataset,
    D: Union[LinearTransform, np.ndarray],
    config: SplitConfig,
) -> SelectionResult:
    """Split Knockoff selection of gamma = D beta with directional FDR control.

    Splits the rows (seeded by ``config.seed``), estimates the path on D1 and the
    knockoff noise on D2, then thresholds W. Deterministic for fixed inputs.
    """
    matrix = _as_matrix(D, dataset.p)
    split = split_samples(
        dataset.n, config.resolve_n1(dataset.n), make_rng(config.seed), config.split_mode
    )
    d1, d2 = split_dataset(dataset, split)
    return _run_on_parts(d1, d2, matrix, config, mode="split")


def run_no_split(
    dataset: Dataset,
    D: Union[LinearTransform, np.ndarray],
    config: SplitConfig,
) -> SelectionResult:
    """The same filter with the path, the copy and zeta all computed on the full data."""
    matrix = _as_matrix(D, dataset.p)
    m, p = matrix.shape
    if dataset.n < m + p:
        raise InsufficientSamplesError(
            f"without sample splitting the copy needs n >= m + p, got n={dataset.n}, m={m}, p={p}"
        )
    return _run_on_parts(dataset, dataset, matrix, config, mode="no_split")
