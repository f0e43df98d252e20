"""Monte-Carlo replicate runner for the simulation study."""

from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from rich.console import Console

from split_knockoffs import __version__
from split_knockoffs.dataset import Dataset, split_dataset, split_samples
from split_knockoffs.errors import SplitKnockoffError
from split_knockoffs.evaluation import (
    cv_select_nu,
    fdp_dir,
    generate_instance,
    mfdp_dir,
    power_dir,
)
from split_knockoffs.knockoff_filter import reselect, run_no_split, run_split_knockoff
from split_knockoffs.models import (
    ExperimentReport,
    ExperimentSpec,
    NuSummary,
    ReplicateRecord,
    SplitConfig,
)
from split_knockoffs.numerics import child_seeds, make_rng
from split_knockoffs.screening import (
    cv_lambda_beta,
    run_hd_pipeline,
    screen_beta,
    screening_rng,
)
from split_knockoffs.stats import comparison_frame, summarize

console = Console(stderr=True)

VARIANTS = (("knockoff", False), ("knockoff+", True))

Unit = Tuple[int, int]  # (nu index, replicate)


def nu_label(log10_nu: float) -> str:
    return f"{log10_nu:g}"


def _choose_nu(
    spec: ExperimentSpec, dataset: Dataset, D: np.ndarray, split_seed: int, cv_seed: int
) -> float:
    """nu* by cross-validation on this replicate's D1 (the full data without splitting)."""
    grid = [10.0**v for v in spec.log10_nu_grid]
    rng = make_rng(cv_seed)
    if spec.mode == "no_split":
        d1 = dataset
    else:
        d1, _ = split_dataset(dataset, split_samples(dataset.n, spec.n1, make_rng(split_seed)))
    if spec.mode == "hd":
        # the screen run_hd_pipeline will use for this split seed
        S_beta = screen_beta(d1, cv_lambda_beta(d1, screening_rng(split_seed)))
        d1 = Dataset(X=d1.X[:, S_beta], y=d1.y)
        D = D[:, S_beta]
    nu_star, _ = cv_select_nu(
        d1, D, grid, spec.cv_folds, rng, lambda_count=spec.cv_lambda_count
    )
    return nu_star


def run_unit(spec: ExperimentSpec, nu_index: int, replicate: int) -> List[ReplicateRecord]:
    """One instance, one nu, both threshold variants.

    The instance depends only on (base_seed, replicate), so every nu sees the
    same data; split and CV seeds are derived from the replicate seed.
    """
    seed = spec.base_seed + replicate
    dataset, truth, transform = generate_instance(spec, seed)
    split_seed, cv_seed = child_seeds(seed, 2)

    base = {"scenario": spec.scenario, "mode": spec.mode, "replicate": replicate}
    if spec.nu_choice == "cv":
        label = "cv"
        log10_nu = float("nan")
    else:
        log10_nu = spec.log10_nu_grid[nu_index]
        label = nu_label(log10_nu)

    try:
        if spec.nu_choice == "cv":
            nu = _choose_nu(spec, dataset, transform.D, split_seed, cv_seed)
            log10_nu = float(np.log10(nu))
        else:
            nu = 10.0**log10_nu
        config = SplitConfig(
            nu=nu,
            q=spec.q,
            plus=False,
            n1=spec.n1,
            lambda_count=spec.lambda_count,
            refine_bisection_steps=spec.refine_bisection_steps,
            seed=split_seed,
        )
        if spec.mode == "split":
            result = run_split_knockoff(dataset, transform, config)
        elif spec.mode == "no_split":
            result = run_no_split(dataset, transform, config)
        else:
            result = run_hd_pipeline(dataset, transform, config)
    except (SplitKnockoffError, np.linalg.LinAlgError) as e:
        return [
            ReplicateRecord(
                **base, variant=variant, nu_label=label, log10_nu=log10_nu,
                failed=True, error=f"{type(e).__name__}: {e}",
            )
            for variant, _ in VARIANTS
        ]

    records = []
    for variant, plus in VARIANTS:
        chosen = reselect(result, plus)
        records.append(
            ReplicateRecord(
                **base,
                variant=variant,
                nu_label=label,
                log10_nu=log10_nu,
                fdp_dir=fdp_dir(chosen, truth.gamma_star),
                mfdp=mfdp_dir(chosen, truth.gamma_star, spec.q),
                power=power_dir(chosen, truth.gamma_star),
                n_selected=len(chosen.selected),
                threshold=chosen.T,
            )
        )
    return records


def _units(spec: ExperimentSpec) -> List[Unit]:
    nu_count = 1 if spec.nu_choice == "cv" else len(spec.log10_nu_grid)
    return [(i, rep) for i in range(nu_count) for rep in range(spec.replicates)]


def run_experiment(spec: ExperimentSpec, jobs: int = 1, quiet: bool = False) -> ExperimentReport:
    """Run every (nu, replicate) unit and aggregate per nu.

    Records are merged in (nu index, replicate, variant) order, so the report is
    the same for any ``jobs``. Failed units are kept as records and excluded
    from the means.

    Args:
        spec: Experiment description
        jobs: Worker processes; 1 runs in-process
        quiet: Suppress progress output

    Returns:
        ExperimentReport
    """
    units = _units(spec)
    by_unit: Dict[Unit, List[ReplicateRecord]] = {}
    if not quiet:
        console.print(
            f"[bold]Running {len(units)} work units ({spec.scenario}, {spec.mode}, jobs={jobs})[/bold]"
        )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = {executor.submit(run_unit, spec, i, rep): (i, rep) for i, rep in units}
            for future in as_completed(futures):
                by_unit[futures[future]] = future.result()
    else:
        for i, rep in units:
            by_unit[(i, rep)] = run_unit(spec, i, rep)

    records = [record for unit in sorted(by_unit) for record in by_unit[unit]]
    n_failed = sum(1 for unit in by_unit.values() if unit and unit[0].failed)
    if n_failed and not quiet:
        console.print(f"[yellow]{n_failed} of {len(units)} work units failed[/yellow]")
    return ExperimentReport(
        spec=spec,
        harness_version=__version__,
        records=records,
        summaries=summarize(records),
        n_failed=n_failed,
    )


def compare_split_modes(
    spec: ExperimentSpec, jobs: int = 1, quiet: bool = False
) -> Tuple[ExperimentReport, ExperimentReport, pd.DataFrame]:
    """Split and no-split runs on identical replicate seeds, side by side per nu and variant."""
    split_report = run_experiment(spec.model_copy(update={"mode": "split"}), jobs, quiet)
    no_split_report = run_experiment(spec.model_copy(update={"mode": "no_split"}), jobs, quiet)
    return (
        split_report,
        no_split_report,
        comparison_frame(split_report.summaries, no_split_report.summaries),
    )


def find_summary(report: ExperimentReport, variant: str, label: str) -> Optional[NuSummary]:
    """The summary row for (variant, nu label), or None."""
    for summary in report.summaries:
        if summary.variant == variant and summary.nu_label == label:
            return summary
    return None
