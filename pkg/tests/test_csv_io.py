"""Tests for CSV readers."""

import numpy as np
import pytest

from split_knockoffs.csv_io import (
    file_digest,
    read_edges,
    read_matrix,
    read_transform,
    read_vector,
)
from split_knockoffs.errors import InvalidParameterError, MalformedInputError


def _write(tmp_path, name: str, text: str):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_read_matrix_with_and_without_header(tmp_path):
    """A non-numeric first row is a header."""
    plain = _write(tmp_path, "a.csv", "1,2\n3,4.5\n")
    headed = _write(tmp_path, "b.csv", "x1,x2\n1,2\n3,4.5\n")
    expected = np.array([[1.0, 2.0], [3.0, 4.5]])
    assert np.array_equal(read_matrix(plain), expected)
    assert np.array_equal(read_matrix(headed), expected)


def test_read_matrix_bad_cell_position(tmp_path):
    """Diagnostics carry the 1-based file row and column."""
    path = _write(tmp_path, "bad.csv", "x1,x2\n1,2\n3,abc\n")
    with pytest.raises(MalformedInputError) as info:
        read_matrix(path)
    assert info.value.row == 3
    assert info.value.column == 2


def test_read_matrix_rejects_non_finite_and_missing(tmp_path):
    """inf, nan and empty cells are refused."""
    for text in ("1,inf\n", "nan,1\n", "1,2\n3,\n"):
        with pytest.raises(MalformedInputError):
            read_matrix(_write(tmp_path, "c.csv", text))


def test_read_matrix_ragged_and_missing_file(tmp_path):
    """Inconsistent row lengths, empty files and absent paths are input errors."""
    with pytest.raises(MalformedInputError):
        read_matrix(_write(tmp_path, "r.csv", "1,2\n3,4,5\n"))
    with pytest.raises(MalformedInputError):
        read_matrix(_write(tmp_path, "e.csv", ""))
    with pytest.raises(MalformedInputError):
        read_matrix(tmp_path / "absent.csv")


def test_read_vector(tmp_path):
    """One column only."""
    assert read_vector(_write(tmp_path, "y.csv", "y\n1\n-2\n")).tolist() == [1.0, -2.0]
    with pytest.raises(MalformedInputError):
        read_vector(_write(tmp_path, "y2.csv", "1,2\n"))


def test_read_transform_dense_and_triplet(tmp_path):
    """Both layouts give the same D."""
    dense = _write(tmp_path, "d.csv", "1,-1,0\n0,1,-1\n")
    triplet = _write(tmp_path, "t.csv", "row,col,value\n1,1,1\n1,2,-1\n2,2,1\n2,3,-1\n")
    expected = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
    assert np.array_equal(read_transform(dense, 3), expected)
    assert np.array_equal(read_transform(triplet, 3), expected)
    with pytest.raises(MalformedInputError):
        read_transform(dense, 4)
    with pytest.raises(MalformedInputError):
        read_transform(_write(tmp_path, "t2.csv", "row,col,value\n1,4,1\n"), 3)


def test_read_edges(tmp_path):
    """Integer endpoint pairs."""
    path = _write(tmp_path, "edges.csv", "tail,head\n1,2\n2,3\n")
    assert read_edges(path) == [(1, 2), (2, 3)]
    with pytest.raises(MalformedInputError):
        read_edges(_write(tmp_path, "e2.csv", "1,2.5\n"))
    with pytest.raises(MalformedInputError):
        read_edges(_write(tmp_path, "e3.csv", "1,2,3\n"))


def test_file_digest(tmp_path):
    """sha256 of the bytes."""
    path = _write(tmp_path, "z.csv", "")
    assert file_digest(path) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_read_transform_explicit_rows(tmp_path):
    """m keeps trailing all-zero rows of a triplet file and is checked for dense files."""
    triplet = _write(tmp_path, "t.csv", "row,col,value\n1,1,1\n1,2,-1\n")
    assert read_transform(triplet, 3).shape == (1, 3)
    D = read_transform(triplet, 3, m=3)
    np.testing.assert_array_equal(D, [[1.0, -1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(MalformedInputError):
        read_transform(_write(tmp_path, "t2.csv", "row,col,value\n4,1,1\n"), 3, m=3)
    dense = _write(tmp_path, "d.csv", "1,-1,0\n0,1,-1\n")
    with pytest.raises(MalformedInputError):
        read_transform(dense, 3, m=3)
    with pytest.raises(InvalidParameterError):
        read_transform(dense, 3, m=0)
