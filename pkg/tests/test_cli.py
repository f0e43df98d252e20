"""Tests for the command-line interface."""

import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from split_knockoffs import __version__
from split_knockoffs.cli import main, parse_nu_grid
from split_knockoffs.errors import InvalidParameterError
from split_knockoffs.numerics import make_rng


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def data_files(tmp_path):
    """A small sparse regression problem as X.csv / y.csv."""
    rng = make_rng(0)
    X = rng.standard_normal((120, 6))
    beta = np.array([2.0, 2.0, 0.0, 0.0, -2.0, 0.0])
    y = X @ beta + rng.standard_normal(120)
    x_path, y_path = tmp_path / "X.csv", tmp_path / "y.csv"
    np.savetxt(x_path, X, delimiter=",")
    np.savetxt(y_path, y[:, None], delimiter=",")
    return str(x_path), str(y_path)


def _filter_args(data_files, out, *extra):
    x, y = data_files
    return ["filter", "--x", x, "--y", y, "--transform", "line", "--nu", "1", "--q", "0.2",
            "--lambda-count", "60", "--out", str(out), *extra]


def test_version(runner):
    """--version names the library and the result schema."""
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output
    assert "splitknock/1" in result.output


def test_filter_writes_json(runner, data_files, tmp_path):
    """The JSON result carries statistics, selections and a manifest."""
    out = tmp_path / "result.json"
    result = runner.invoke(main, _filter_args(data_files, out))
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert payload["schema"] == "splitknock/1"
    assert len(payload["W"]) == len(payload["Z"]) == len(payload["r"]) == 5
    assert payload["tested"] == [1, 2, 3, 4, 5]
    assert set(payload["selected"]) <= set(payload["tested"])
    manifest = payload["manifest"]
    assert manifest["command"] == "filter"
    assert manifest["library_version"] == __version__
    assert set(manifest["input_digests"]) == {"x", "y"}


def test_filter_is_deterministic(runner, data_files, tmp_path):
    """Two runs agree on everything except wall-clock fields."""
    payloads = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert runner.invoke(main, _filter_args(data_files, out, "--seed", "9")).exit_code == 0
        payload = json.loads(out.read_text())
        del payload["manifest"]["timestamp"], payload["manifest"]["elapsed_s"]
        payloads.append(payload)
    assert payloads[0] == payloads[1]


def test_filter_hd(runner, data_files, tmp_path):
    """--hd reports the screen in the diagnostics."""
    out = tmp_path / "hd.json"
    result = runner.invoke(
        main, _filter_args(data_files, out, "--hd", "--lambda-beta", "1e-8", "--lambda-gamma", "1e-8")
    )
    assert result.exit_code == 0, result.output
    diagnostics = json.loads(out.read_text())["diagnostics"]
    assert diagnostics["mode"] == "hd"
    assert diagnostics["screening"]["S_beta"] == [1, 2, 3, 4, 5, 6]


def test_filter_transform_choice_errors(runner, data_files, tmp_path):
    """Exactly one of --d and --transform is required."""
    x, y = data_files
    base = ["filter", "--x", x, "--y", y, "--nu", "1", "--q", "0.2"]
    assert runner.invoke(main, base).exit_code == 2
    d_path = tmp_path / "D.csv"
    np.savetxt(d_path, np.eye(6), delimiter=",")
    both = base + ["--d", str(d_path), "--transform", "identity"]
    assert runner.invoke(main, both).exit_code == 2


def test_filter_no_split_too_few_rows(runner, tmp_path):
    """No-split with n < m + p is an input error."""
    rng = make_rng(1)
    x_path, y_path = tmp_path / "X.csv", tmp_path / "y.csv"
    np.savetxt(x_path, rng.standard_normal((10, 8)), delimiter=",")
    np.savetxt(y_path, rng.standard_normal((10, 1)), delimiter=",")
    result = runner.invoke(
        main,
        ["filter", "--x", str(x_path), "--y", str(y_path), "--transform", "identity",
         "--nu", "1", "--q", "0.2", "--no-split"],
    )
    assert result.exit_code == 2


def test_filter_bad_q(runner, data_files, tmp_path):
    """Out-of-range q is rejected by validation."""
    out = tmp_path / "r.json"
    args = _filter_args(data_files, out)
    args[args.index("--q") + 1] = "1.5"
    assert runner.invoke(main, args).exit_code == 2


def test_parse_nu_grid():
    """Inclusive LO:HI:STEP and single values."""
    grid = parse_nu_grid("0:2:0.2")
    assert len(grid) == 11
    assert grid[0] == 0.0 and grid[-1] == 2.0
    assert grid[3] == 0.6
    assert parse_nu_grid("1.5") == [1.5]
    for text in ("a:b:c", "0:1", "2:0:0.5", "0:1:0"):
        with pytest.raises(InvalidParameterError):
            parse_nu_grid(text)


def test_simulate_writes_csvs(runner, tmp_path):
    """One row per (nu, replicate, variant) plus the aggregate."""
    out = tmp_path / "sim" / "runs.csv"
    result = runner.invoke(
        main,
        ["simulate", "--n", "100", "--p", "8", "--n1", "40", "--nu-grid", "0:1:1",
         "--reps", "2", "--jobs", "1", "--lambda-count", "30", "--out-csv", str(out)],
    )
    assert result.exit_code == 0, result.output
    records = pd.read_csv(out)
    assert len(records) == 8
    assert set(records["variant"]) == {"knockoff", "knockoff+"}
    assert len(pd.read_csv(tmp_path / "sim" / "runs_aggregate.csv")) == 4


def test_simulate_compare_no_split(runner, tmp_path):
    """--compare-no-split adds a comparison CSV."""
    out = tmp_path / "runs.csv"
    result = runner.invoke(
        main,
        ["simulate", "--n", "100", "--p", "8", "--n1", "40", "--nu-grid", "1", "--reps", "1",
         "--jobs", "1", "--lambda-count", "30", "--compare-no-split", "--out-csv", str(out)],
    )
    assert result.exit_code == 0, result.output
    comparison = pd.read_csv(tmp_path / "runs_comparison.csv")
    assert len(comparison) == 2
    assert "fdr_dir_no_split" in comparison.columns


def test_simulate_invalid_grid(runner):
    """A malformed grid exits 2."""
    result = runner.invoke(main, ["simulate", "--nu-grid", "2:0:1", "--reps", "1"])
    assert result.exit_code == 2


def test_cv_nu(runner, data_files):
    """Prints nu_star and a CSV table with one row per grid point."""
    x, y = data_files
    result = runner.invoke(
        main,
        ["cv-nu", "--x", x, "--y", y, "--transform", "identity", "--nu-grid", "0:1:0.5",
         "--folds", "3"],
    )
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    start = next(i for i, line in enumerate(lines) if line.startswith("nu_star,"))
    nu_star = float(lines[start].split(",")[1])
    assert lines[start + 1] == "nu,log10_nu,cv_mse,cv_se"
    rows = lines[start + 2 :]
    assert len(rows) == 3
    assert nu_star in [float(row.split(",")[0]) for row in rows]


def test_copy_check_random(runner):
    """A synthetic instance passes every residual check."""
    result = runner.invoke(main, ["copy-check", "--random", "5", "4", "20", "--nu", "1"])
    assert result.exit_code == 0, result.output
    assert "All copy conditions hold" in result.output


def test_copy_check_orthonormal_example(runner, tmp_path):
    """Orthonormal X2, D = I, nu = 1: the bottom block of the copy vanishes."""
    rng = make_rng(2)
    n2, p = 10, 3
    Q, _ = np.linalg.qr(rng.standard_normal((n2, p)))
    x_path = tmp_path / "X2.csv"
    np.savetxt(x_path, Q * np.sqrt(n2), delimiter=",", fmt="%.17g")
    result = runner.invoke(
        main,
        ["copy-check", "--x", str(x_path), "--transform", "identity", "--nu", "1", "--show-bottom"],
    )
    assert result.exit_code == 0, result.output
    assert "s=1" in result.output


def test_copy_check_exit_codes(runner, tmp_path):
    """Bad inputs exit 2; residuals above tolerance exit 3."""
    assert runner.invoke(main, ["copy-check", "--nu", "1"]).exit_code == 2
    too_small = runner.invoke(main, ["copy-check", "--random", "5", "4", "8", "--nu", "1"])
    assert too_small.exit_code == 2
    strict = runner.invoke(
        main, ["copy-check", "--random", "5", "4", "20", "--nu", "1", "--tolerance", "-1"]
    )
    assert strict.exit_code == 3


def test_copy_check_triplet_rows(runner, tmp_path):
    """--d-rows sizes a triplet D; an out-of-range row is an input error."""
    path = tmp_path / "D.csv"
    path.write_text("row,col,value\n1,1,1\n1,2,-1\n", encoding="utf-8")
    args = ["copy-check", "--random", "4", "3", "30", "--d", str(path), "--nu", "1"]
    assert runner.invoke(main, args + ["--d-rows", "3"]).exit_code == 0
    path.write_text("row,col,value\n3,1,1\n", encoding="utf-8")
    assert runner.invoke(main, args + ["--d-rows", "2"]).exit_code == 2
