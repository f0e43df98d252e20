"""CLI entry point for split-knockoffs."""

import functools
import os
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console

from split_knockoffs import SCHEMA_VERSION, __version__
from split_knockoffs.errors import InvalidInputError, InvalidParameterError, NumericalError

err_console = Console(stderr=True)

EXIT_INVALID_INPUT = 2
EXIT_NUMERICAL = 3

TRANSFORM_CHOICES = {
    "identity": "identity",
    "line": "line_difference",
    "graph": "graph_difference",
    "stacked": "stacked",
}


def handle_errors(func: Callable) -> Callable:
    """Map library errors to exit codes: 2 for bad input, 3 for numeric failure."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (InvalidInputError, ValidationError) as e:
            err_console.print(f"[red]Error: {e}[/red]")
            sys.exit(EXIT_INVALID_INPUT)
        except NumericalError as e:
            err_console.print(f"[red]Numerical failure: {e}[/red]")
            sys.exit(EXIT_NUMERICAL)

    return wrapper


def parse_nu_grid(text: str) -> List[float]:
    """log10 nu values from LO:HI:STEP (inclusive) or a single number."""
    parts = text.split(":")
    try:
        numbers = [float(part) for part in parts]
    except ValueError:
        raise InvalidParameterError(f"invalid nu grid {text!r}; expected LO:HI:STEP") from None
    if len(numbers) == 1:
        return numbers
    if len(numbers) != 3:
        raise InvalidParameterError(f"invalid nu grid {text!r}; expected LO:HI:STEP")
    lo, hi, step = numbers
    if step <= 0 or hi < lo:
        raise InvalidParameterError(f"invalid nu grid {text!r}; need STEP > 0 and HI >= LO")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [float(np.round(lo + k * step, 12)) for k in range(count)]


def _load_transform(
    d: Optional[str],
    transform: Optional[str],
    edges: Optional[str],
    p: int,
    d_rows: Optional[int] = None,
) -> np.ndarray:
    from split_knockoffs.csv_io import read_edges, read_transform
    from split_knockoffs.transforms import custom_transform, make_transform

    if (d is None) == (transform is None):
        raise InvalidParameterError("give exactly one of --d or --transform")
    if d is not None:
        return custom_transform(read_transform(Path(d), p, d_rows)).D
    kind = TRANSFORM_CHOICES[transform]
    if kind == "graph_difference":
        if edges is None:
            raise InvalidParameterError("--transform graph needs --edges")
        return make_transform(kind, p, read_edges(Path(edges))).D
    return make_transform(kind, p).D


def _load_dataset(x: str, y: str):
    from split_knockoffs.csv_io import read_matrix, read_vector
    from split_knockoffs.dataset import Dataset

    return Dataset(X=read_matrix(Path(x)), y=read_vector(Path(y)))


def _manifest(command: str, options: dict, inputs: dict, seed: int, started: float):
    from split_knockoffs.csv_io import file_digest
    from split_knockoffs.models import RunManifest

    return RunManifest(
        command=command,
        config=options,
        input_digests={name: file_digest(Path(path)) for name, path in inputs.items() if path},
        library_version=__version__,
        seed=seed,
        os=platform.system(),
        python_version=platform.python_version(),
        timestamp=datetime.now(timezone.utc).isoformat(),
        elapsed_s=time.perf_counter() - started,
    )


@click.group()
@click.version_option(
    version=__version__, message=f"%(prog)s %(version)s (schema {SCHEMA_VERSION})"
)
def main() -> None:
    """Split Knockoffs: directional FDR control for structural sparsity gamma = D beta."""
    pass


def transform_options(func: Callable) -> Callable:
    func = click.option("--edges", type=click.Path(exists=True), help="Edge list CSV (tail,head), 1-based")(func)
    func = click.option(
        "--transform", type=click.Choice(list(TRANSFORM_CHOICES)), help="Built-in transformation D"
    )(func)
    func = click.option("--d-rows", type=int, help="Rows m of a custom D (default: largest triplet row)")(func)
    func = click.option("--d", "d", type=click.Path(exists=True), help="Custom D: dense CSV or row,col,value triplets")(func)
    return func


@main.command(name="filter")
@click.option("--x", "x", type=click.Path(exists=True), required=True, help="Design matrix CSV (n x p)")
@click.option("--y", "y", type=click.Path(exists=True), required=True, help="Response CSV (n x 1)")
@transform_options
@click.option("--nu", type=float, required=True, help="Variable-splitting strength nu > 0")
@click.option("--q", type=float, required=True, help="Target directional FDR")
@click.option("--plus", is_flag=True, help="Use the knockoff+ threshold")
@click.option("--n1", type=int, help="Rows in D1 (default: round(0.4 n))")
@click.option("--seed", type=int, default=0, help="Seed of the sample split")
@click.option("--no-split", is_flag=True, help="Use the full data for the path and the copy")
@click.option("--hd", is_flag=True, help="Screen features on D1 first (high-dimensional data)")
@click.option("--lambda-beta", type=float, help="Screening penalty for beta (default: CV)")
@click.option("--lambda-gamma", type=float, help="Screening penalty for gamma (default: n2 budget)")
@click.option("--lambda-count", type=int, default=200, help="Points on the lambda grid")
@click.option("--standardize", is_flag=True, help="Scale columns of X to norm sqrt(n)")
@click.option("--allow-nonconverged", is_flag=True, help="Proceed when path points did not converge")
@click.option("--out", type=click.Path(), help="Write the JSON result here instead of stdout")
@handle_errors
def filter_cmd(
    x: str,
    y: str,
    d: Optional[str],
    transform: Optional[str],
    edges: Optional[str],
    d_rows: Optional[int],
    nu: float,
    q: float,
    plus: bool,
    n1: Optional[int],
    seed: int,
    no_split: bool,
    hd: bool,
    lambda_beta: Optional[float],
    lambda_gamma: Optional[float],
    lambda_count: int,
    standardize: bool,
    allow_nonconverged: bool,
    out: Optional[str],
) -> None:
    """Run the Split Knockoff filter on CSV data and write a JSON result."""
    from split_knockoffs.dataset import standardize as standardize_columns
    from split_knockoffs.knockoff_filter import run_no_split, run_split_knockoff
    from split_knockoffs.models import SplitConfig
    from split_knockoffs.screening import run_hd_pipeline
    from split_knockoffs.stats import console, print_selection

    started = time.perf_counter()
    if no_split and hd:
        raise InvalidParameterError("--no-split and --hd cannot be combined")
    dataset = _load_dataset(x, y)
    if standardize:
        dataset = standardize_columns(dataset)
    D = _load_transform(d, transform, edges, dataset.p, d_rows)
    config = SplitConfig(
        nu=nu,
        q=q,
        plus=plus,
        n1=n1,
        seed=seed,
        lambda_count=lambda_count,
        allow_nonconverged=allow_nonconverged,
    )

    err_console.print(f"[bold]Running Split Knockoff on n={dataset.n}, p={dataset.p}, m={D.shape[0]}[/bold]")
    if no_split:
        result = run_no_split(dataset, D, config)
    elif hd:
        result = run_hd_pipeline(dataset, D, config, lambda_beta, lambda_gamma)
    else:
        result = run_split_knockoff(dataset, D, config)

    options = {
        "transform": transform, "nu": nu, "q": q, "plus": plus, "n1": n1, "seed": seed,
        "no_split": no_split, "hd": hd, "lambda_beta": lambda_beta, "lambda_gamma": lambda_gamma,
        "lambda_count": lambda_count, "standardize": standardize,
        "allow_nonconverged": allow_nonconverged,
    }
    result = result.model_copy(
        update={
            "manifest": _manifest(
                "filter", options, {"x": x, "y": y, "d": d, "edges": edges}, seed, started
            )
        }
    )
    payload = result.model_dump_json(by_alias=True, indent=2)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(payload + "\n")
        print_selection(result, console)
        console.print(f"\n[green]Result written to {out}[/green]")
    else:
        click.echo(payload)
        print_selection(result, err_console)


@main.command()
@click.option("--scenario", type=click.Choice(["d1", "d2", "d3"]), default="d2", help="Transformation D1, D2 or D3")
@click.option("--n", type=int, default=500, help="Observations per replicate")
@click.option("--p", type=int, default=100, help="Features")
@click.option("--rho", type=float, default=0.5, help="AR(1) correlation of the design")
@click.option("--sigma", type=float, default=1.0, help="Noise standard deviation")
@click.option("--amplitude", type=float, default=1.0, help="Magnitude of the nonzero coefficients")
@click.option("--beta-pattern", type=click.Choice(["mod3", "null"]), default="mod3", help="Coefficient pattern")
@click.option("--q", type=float, default=0.2, help="Target directional FDR")
@click.option("--nu-grid", default="0:2:0.2", help="log10 nu grid LO:HI:STEP")
@click.option("--nu-choice", type=click.Choice(["grid", "cv"]), default="grid", help="Every grid nu, or CV per replicate")
@click.option("--reps", type=int, default=10, help="Replicates per nu")
@click.option("--seed", type=int, default=0, help="Base seed; replicate r uses seed + r")
@click.option("--mode", type=click.Choice(["split", "no-split", "hd"]), default="split", help="Pipeline")
@click.option("--n1", type=int, default=200, help="Rows in D1")
@click.option("--lambda-count", type=int, default=200, help="Points on the lambda grid")
@click.option("--folds", type=int, default=5, help="CV folds when --nu-choice cv")
@click.option("--jobs", type=int, envvar="SPLIT_KNOCKOFFS_JOBS", help="Worker processes (default: all cores)")
@click.option("--compare-no-split", is_flag=True, help="Also run without splitting and write a comparison CSV")
@click.option("--out-csv", type=click.Path(), help="Tidy per-replicate CSV; the aggregate goes next to it")
@handle_errors
def simulate(
    scenario: str,
    n: int,
    p: int,
    rho: float,
    sigma: float,
    amplitude: float,
    beta_pattern: str,
    q: float,
    nu_grid: str,
    nu_choice: str,
    reps: int,
    seed: int,
    mode: str,
    n1: int,
    lambda_count: int,
    folds: int,
    jobs: Optional[int],
    compare_no_split: bool,
    out_csv: Optional[str],
) -> None:
    """Monte-Carlo study of FDR_dir and power across nu."""
    from split_knockoffs.experiment import compare_split_modes, run_experiment
    from split_knockoffs.models import ExperimentSpec
    from split_knockoffs.stats import print_experiment_summary, write_csv, write_experiment_csvs

    spec = ExperimentSpec(
        scenario=scenario,
        n=n,
        p=p,
        rho=rho,
        sigma=sigma,
        amplitude=amplitude,
        beta_pattern=beta_pattern,
        q=q,
        log10_nu_grid=parse_nu_grid(nu_grid),
        nu_choice=nu_choice,
        replicates=reps,
        base_seed=seed,
        mode=mode.replace("-", "_"),
        n1=n1,
        lambda_count=lambda_count,
        cv_folds=folds,
    )
    workers = jobs if jobs is not None else (os.cpu_count() or 1)
    if workers < 1:
        raise InvalidParameterError(f"--jobs must be positive, got {workers}")

    comparison = None
    if compare_no_split:
        report, no_split_report, comparison = compare_split_modes(spec, workers)
        summaries = report.summaries + no_split_report.summaries
        records = report.records + no_split_report.records
    else:
        report = run_experiment(spec, workers)
        summaries, records = report.summaries, report.records

    print_experiment_summary(summaries, title=f"Scenario {scenario.upper()} ({reps} replicates)")
    if out_csv:
        paths = write_experiment_csvs(records, summaries, Path(out_csv))
        if comparison is not None:
            target = Path(out_csv).with_name(f"{Path(out_csv).stem}_comparison.csv")
            write_csv(comparison, target)
            paths["comparison"] = target
        for path in paths.values():
            err_console.print(f"[green]Wrote {path}[/green]")


@main.command(name="cv-nu")
@click.option("--x", "x", type=click.Path(exists=True), required=True, help="Design matrix CSV (n x p)")
@click.option("--y", "y", type=click.Path(exists=True), required=True, help="Response CSV (n x 1)")
@transform_options
@click.option("--nu-grid", default="0:2:0.2", help="log10 nu grid LO:HI:STEP")
@click.option("--folds", type=int, default=5, help="Cross-validation folds")
@click.option("--n1", type=int, help="Rows in D1 (default: round(0.4 n))")
@click.option("--seed", type=int, default=0, help="Seed of the split and the fold assignment")
@handle_errors
def cv_nu(
    x: str,
    y: str,
    d: Optional[str],
    transform: Optional[str],
    edges: Optional[str],
    d_rows: Optional[int],
    nu_grid: str,
    folds: int,
    n1: Optional[int],
    seed: int,
) -> None:
    """Choose nu by cross-validating the Split LASSO on D1."""
    from split_knockoffs.dataset import split_dataset, split_samples
    from split_knockoffs.evaluation import cv_select_nu, nu_grid_from_log10
    from split_knockoffs.numerics import child_seeds, make_rng
    from split_knockoffs.stats import FLOAT_FORMAT, print_cv_table

    dataset = _load_dataset(x, y)
    D = _load_transform(d, transform, edges, dataset.p, d_rows)
    size = n1 if n1 is not None else int(round(0.4 * dataset.n))
    d1, _ = split_dataset(dataset, split_samples(dataset.n, size, make_rng(seed)))
    nu_star, table = cv_select_nu(
        d1, D, nu_grid_from_log10(parse_nu_grid(nu_grid)), folds, make_rng(child_seeds(seed, 1)[0])
    )
    print_cv_table(table, nu_star, err_console)
    click.echo(f"nu_star,{nu_star:.17g}")
    click.echo(table.to_csv(index=False, float_format=FLOAT_FORMAT), nl=False)


def _random_copy_inputs(
    dims: Tuple[int, int, int],
    d: Optional[str],
    transform: Optional[str],
    edges: Optional[str],
    d_rows: Optional[int],
    seed: int,
) -> Tuple[np.ndarray, np.ndarray]:
    from split_knockoffs.numerics import make_rng

    p, m, n2 = dims
    rng = make_rng(seed)
    X2 = rng.standard_normal((n2, p))
    if d is not None or transform is not None:
        return X2, _load_transform(d, transform, edges, p, d_rows)
    return X2, rng.standard_normal((m, p))


@main.command(name="copy-check")
@click.option("--x", "x", type=click.Path(exists=True), help="X2 design CSV")
@transform_options
@click.option("--random", "random_dims", type=int, nargs=3, help="Synthetic instance: P M N2")
@click.option("--nu", type=float, required=True, help="Variable-splitting strength nu > 0")
@click.option("--seed", type=int, default=0, help="Seed of the synthetic instance")
@click.option("--tolerance", type=float, default=1e-8, help="Largest acceptable relative residual")
@click.option("--show-bottom", is_flag=True, help="Print the bottom m x m block of the copy")
@handle_errors
def copy_check(
    x: Optional[str],
    d: Optional[str],
    transform: Optional[str],
    edges: Optional[str],
    d_rows: Optional[int],
    random_dims: Optional[Tuple[int, int, int]],
    nu: float,
    seed: int,
    tolerance: float,
    show_bottom: bool,
) -> None:
    """Build a knockoff copy and verify its defining identities."""
    from rich.table import Table

    from split_knockoffs.csv_io import read_matrix
    from split_knockoffs.dataset import Dataset
    from split_knockoffs.knockoff_copy import (
        build_augmented,
        compute_C_nu,
        construct_copy,
        copy_residuals,
        s_equicorrelated,
    )
    from split_knockoffs.stats import console, print_residuals

    if (x is None) == (not random_dims):
        raise InvalidParameterError("give exactly one of --x or --random")
    if random_dims:
        X2, D = _random_copy_inputs(random_dims, d, transform, edges, d_rows, seed)
    else:
        X2 = read_matrix(Path(x))
        D = _load_transform(d, transform, edges, X2.shape[1], d_rows)

    aug = build_augmented(Dataset(X=X2, y=np.zeros(X2.shape[0])), D, nu)
    s = s_equicorrelated(compute_C_nu(aug), nu)
    copy = construct_copy(aug, s)
    residuals = copy_residuals(copy, aug)

    console.print(f"[bold]n2={aug.n2}, p={aug.p}, m={aug.m}, nu={nu:g}, s={s[0]:.6g}[/bold]")
    print_residuals(residuals, tolerance)
    if show_bottom:
        bottom = copy.A_tilde[aug.n2 :]
        table = Table(title="Bottom m x m block of the copy")
        for j in range(aug.m):
            table.add_column(str(j + 1), justify="right")
        for row in bottom:
            table.add_row(*[f"{np.round(v, 10) + 0.0:.10g}" for v in row])
        console.print(table)

    if max(residuals.values()) > tolerance:
        err_console.print("[red]Copy conditions violated[/red]")
        sys.exit(EXIT_NUMERICAL)
    console.print("[green]All copy conditions hold[/green]")


if __name__ == "__main__":
    main()
