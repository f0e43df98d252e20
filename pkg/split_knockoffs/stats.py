"""Aggregation and reporting of selections and experiment records."""

from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from split_knockoffs.models import NuSummary, ReplicateRecord, SelectionResult

console = Console()

RECORD_COLUMNS = [
    "scenario",
    "mode",
    "variant",
    "log10_nu",
    "replicate",
    "fdp_dir",
    "mfdp",
    "power",
    "n_selected",
    "threshold",
    "nu_label",
    "failed",
    "error",
]

FLOAT_FORMAT = "%.17g"


def records_frame(records: List[ReplicateRecord]) -> pd.DataFrame:
    """One row per (nu, replicate, variant), in record order."""
    return pd.DataFrame([r.model_dump() for r in records], columns=RECORD_COLUMNS)


def _quantile(values: pd.Series, level: float) -> float:
    return float(np.clip(values.quantile(level), 0.0, 1.0))


def _sd(values: pd.Series) -> float:
    return float(values.std(ddof=1)) if len(values) > 1 else 0.0


def summarize(records: List[ReplicateRecord]) -> List[NuSummary]:
    """Per (mode, variant, nu) means, standard deviations and 10%/90% quantiles.

    Failed records are counted but left out of every statistic.
    """
    if not records:
        return []
    df = records_frame(records)
    summaries = []
    for (mode, variant, label), group in df.groupby(["mode", "variant", "nu_label"], sort=False):
        ok = group[~group["failed"]]
        n_ok = len(ok)
        if n_ok == 0:
            nan = float("nan")
            stats = dict.fromkeys(
                [
                    "mean_fdp_dir", "sd_fdp_dir", "fdp_dir_lo", "fdp_dir_hi", "mean_mfdp",
                    "mean_power", "sd_power", "power_lo", "power_hi", "mean_n_selected",
                ],
                nan,
            )
        else:
            stats = {
                "mean_fdp_dir": float(ok["fdp_dir"].mean()),
                "sd_fdp_dir": _sd(ok["fdp_dir"]),
                "fdp_dir_lo": _quantile(ok["fdp_dir"], 0.1),
                "fdp_dir_hi": _quantile(ok["fdp_dir"], 0.9),
                "mean_mfdp": float(ok["mfdp"].mean()),
                "mean_power": float(ok["power"].mean()),
                "sd_power": _sd(ok["power"]),
                "power_lo": _quantile(ok["power"], 0.1),
                "power_hi": _quantile(ok["power"], 0.9),
                "mean_n_selected": float(ok["n_selected"].mean()),
            }
        summaries.append(
            NuSummary(
                mode=mode,
                variant=variant,
                nu_label=label,
                log10_nu=float(group["log10_nu"].mean()),
                n_ok=n_ok,
                n_failed=len(group) - n_ok,
                **stats,
            )
        )
    return summaries


def summaries_frame(summaries: List[NuSummary]) -> pd.DataFrame:
    return pd.DataFrame([s.model_dump() for s in summaries])


def comparison_frame(split: List[NuSummary], no_split: List[NuSummary]) -> pd.DataFrame:
    """Split vs no-split FDR_dir and power per (nu, variant)."""
    keep = ["nu_label", "log10_nu", "variant", "mean_fdp_dir", "mean_power"]
    left = summaries_frame(split)[keep]
    right = summaries_frame(no_split)[keep].drop(columns=["log10_nu"])
    merged = left.merge(right, on=["nu_label", "variant"], suffixes=("_split", "_no_split"))
    return merged.rename(
        columns={
            "mean_fdp_dir_split": "fdr_dir_split",
            "mean_power_split": "power_split",
            "mean_fdp_dir_no_split": "fdr_dir_no_split",
            "mean_power_no_split": "power_no_split",
        }
    )


def write_csv(df: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_experiment_csvs(
    records: List[ReplicateRecord],
    summaries: List[NuSummary],
    out_csv: Path,
) -> Dict[str, Path]:
    """Tidy per-replicate CSV at ``out_csv`` and the aggregate next to it."""
    aggregate = out_csv.with_name(f"{out_csv.stem}_aggregate.csv")
    write_csv(records_frame(records), out_csv)
    write_csv(summaries_frame(summaries), aggregate)
    return {"records": out_csv, "aggregate": aggregate}


def print_experiment_summary(summaries: List[NuSummary], title: str = "Experiment Summary") -> None:
    table = Table(title=title)
    table.add_column("Mode", style="cyan")
    table.add_column("Variant", style="cyan")
    table.add_column("log10 nu", justify="right")
    table.add_column("OK", justify="right")
    table.add_column("Failed", justify="right")
    table.add_column("FDR_dir", justify="right", style="magenta")
    table.add_column("80% band", justify="right")
    table.add_column("Power", justify="right", style="green")
    table.add_column("|S|", justify="right")

    for s in summaries:
        table.add_row(
            s.mode,
            s.variant,
            s.nu_label,
            str(s.n_ok),
            str(s.n_failed) if s.n_failed == 0 else f"[red]{s.n_failed}[/red]",
            f"{s.mean_fdp_dir:.4f}",
            f"[{s.fdp_dir_lo:.2f}, {s.fdp_dir_hi:.2f}]",
            f"{s.mean_power:.4f}",
            f"{s.mean_n_selected:.1f}",
        )
    console.print(table)


def print_selection(result: SelectionResult, out: Console = console) -> None:
    """Threshold, selections and their directions."""
    d = result.diagnostics
    table = Table(title=f"Split Knockoff{'+' if result.config.plus else ''} selection")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="magenta")
    table.add_row("Mode", d.mode)
    table.add_row("nu", f"{d.nu:g}")
    table.add_row("q", f"{result.config.q:g}")
    table.add_row("n1 / n2", f"{d.n1} / {d.n2}")
    table.add_row("Tested", str(len(result.tested)))
    table.add_row("lambda_max", f"{d.lambda_max:.6g}")
    table.add_row("Threshold T", "inf" if result.T is None else f"{result.T:.6g}")
    table.add_row("Selected", str(len(result.selected)))
    if d.s:
        table.add_row("s", f"{d.s[0]:.6g}")
    if not all(d.converged):
        table.add_row("Non-converged", f"[yellow]{d.converged.count(False)}[/yellow]")
    out.print(table)

    if result.selected:
        picks = Table(title="Selected coordinates")
        picks.add_column("Index", justify="right")
        picks.add_column("Direction", justify="center")
        picks.add_column("W", justify="right")
        position = {label: k for k, label in enumerate(result.tested)}
        for i in result.selected:
            sign = "+" if result.signs[i] > 0 else "-"
            picks.add_row(str(i), sign, f"{result.W[position[i]]:.6g}")
        out.print(picks)


def print_cv_table(table_df: pd.DataFrame, nu_star: float, out: Console = console) -> None:
    table = Table(title=f"Cross-validation over nu (nu* = {nu_star:g})")
    table.add_column("log10 nu", justify="right")
    table.add_column("CV MSE", justify="right", style="magenta")
    table.add_column("SE", justify="right")
    for row in table_df.itertuples(index=False):
        mark = " [green]*[/green]" if row.nu == nu_star else ""
        table.add_row(f"{row.log10_nu:g}", f"{row.cv_mse:.6g}{mark}", f"{row.cv_se:.3g}")
    out.print(table)


def print_residuals(residuals: Dict[str, float], tolerance: float, out: Console = console) -> None:
    table = Table(title="Knockoff copy residuals (relative Frobenius)")
    table.add_column("Check", style="cyan")
    table.add_column("Residual", justify="right")
    table.add_column("Status")
    for name, value in residuals.items():
        ok = value <= tolerance
        table.add_row(name, f"{value:.3e}", "[green]ok[/green]" if ok else "[red]FAIL[/red]")
    out.print(table)
