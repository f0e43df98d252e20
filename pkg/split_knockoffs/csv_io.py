"""CSV input formats: designs, responses, transforms and edge lists.

All files are UTF-8, comma-delimited, row-major, with an optional single header
row recognised by a non-numeric first row. Diagnostics report 1-based file rows
(header included) and columns.
"""

import hashlib
import math
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from split_knockoffs.errors import InvalidParameterError, MalformedInputError
from split_knockoffs.transforms import Edge

TRIPLET_HEADER = ["row", "col", "value"]


def _is_number(cell: object) -> bool:
    if not isinstance(cell, str):
        return False
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_cells(path: Path) -> Tuple[pd.DataFrame, bool]:
    """Raw string cells and whether the first row was a header."""
    try:
        raw = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            encoding="utf-8",
        )
    except FileNotFoundError as e:
        raise MalformedInputError("file not found", path=str(path)) from e
    except pd.errors.EmptyDataError as e:
        raise MalformedInputError("file is empty", path=str(path)) from e
    except pd.errors.ParserError as e:
        raise MalformedInputError(f"inconsistent row length: {e}", path=str(path)) from e
    except UnicodeDecodeError as e:
        raise MalformedInputError("file is not valid UTF-8", path=str(path)) from e
    header = not all(_is_number(cell) for cell in raw.iloc[0])
    return raw, header


def _to_float(raw: pd.DataFrame, header: bool, path: Path) -> np.ndarray:
    body = raw.iloc[1:] if header else raw
    if body.empty:
        raise MalformedInputError("no data rows", path=str(path))
    offset = 2 if header else 1
    values = np.empty(body.shape)
    for r, row in enumerate(body.itertuples(index=False)):
        for c, cell in enumerate(row):
            if not isinstance(cell, str) or cell.strip() == "":
                raise MalformedInputError("missing value", str(path), r + offset, c + 1)
            try:
                value = float(cell)
            except ValueError:
                raise MalformedInputError(
                    f"not a number: {cell!r}", str(path), r + offset, c + 1
                ) from None
            if not math.isfinite(value):
                raise MalformedInputError(
                    f"non-finite value: {cell!r}", str(path), r + offset, c + 1
                )
            values[r, c] = value
    return values


def read_matrix(path: Path) -> np.ndarray:
    """Dense numeric matrix."""
    raw, header = _read_cells(path)
    return _to_float(raw, header, path)


def read_vector(path: Path) -> np.ndarray:
    """Single-column numeric file as a vector."""
    values = read_matrix(path)
    if values.shape[1] != 1:
        raise MalformedInputError(
            f"expected one column, found {values.shape[1]}", path=str(path)
        )
    return values[:, 0]


def read_transform(path: Path, p: int, m: Optional[int] = None) -> np.ndarray:
    """D from a dense m x p CSV or a triplet file with header row,col,value (1-based).

    A triplet file only lists nonzeros, so without ``m`` its row count is the
    largest row index and trailing all-zero rows are not represented.
    """
    if m is not None and m < 1:
        raise InvalidParameterError(f"m must be positive, got {m}")
    raw, header = _read_cells(path)
    first = [str(cell).strip().lower() for cell in raw.iloc[0]]
    if header and first == TRIPLET_HEADER:
        triplets = _to_float(raw, header, path)
        rows = triplets[:, 0]
        cols = triplets[:, 1]
        for k, (i, j) in enumerate(zip(rows, cols)):
            if i < 1 or i != int(i) or (m is not None and i > m):
                raise MalformedInputError(f"bad row index {i:g}", str(path), k + 2, 1)
            if j < 1 or j > p or j != int(j):
                raise MalformedInputError(f"column index {j:g} outside 1..{p}", str(path), k + 2, 2)
        D = np.zeros((m if m is not None else int(rows.max()), p))
        np.add.at(D, (rows.astype(int) - 1, cols.astype(int) - 1), triplets[:, 2])
        return D
    D = _to_float(raw, header, path)
    if D.shape[1] != p:
        raise MalformedInputError(f"D has {D.shape[1]} columns, X has {p}", path=str(path))
    if m is not None and D.shape[0] != m:
        raise MalformedInputError(f"D has {D.shape[0]} rows, expected {m}", path=str(path))
    return D


def read_edges(path: Path) -> List[Edge]:
    """(tail, head) integer pairs, one per row."""
    raw, header = _read_cells(path)
    values = _to_float(raw, header, path)
    if values.shape[1] != 2:
        raise MalformedInputError(
            f"edge file needs two columns, found {values.shape[1]}", path=str(path)
        )
    offset = 2 if header else 1
    edges: List[Edge] = []
    for k, (tail, head) in enumerate(values):
        if tail != int(tail) or head != int(head):
            raise MalformedInputError("edge endpoints must be integers", str(path), k + offset, 1)
        edges.append((int(tail), int(head)))
    return edges


def file_digest(path: Path) -> str:
    """sha256 of a file's bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
