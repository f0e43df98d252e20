"""Tests for the transformation matrices D."""

import numpy as np
import pytest

from split_knockoffs.errors import InvalidEdgeError, InvalidParameterError
from split_knockoffs.transforms import (
    TransformKind,
    custom_transform,
    line_edges,
    make_transform,
)


def test_identity():
    """D = I_p."""
    t = make_transform("identity", 3)
    assert np.array_equal(t.D, np.eye(3))
    assert t.kind is TransformKind.IDENTITY


def test_line_difference():
    """Rows (1, -1) on consecutive features."""
    t = make_transform("line_difference", 3)
    assert np.array_equal(t.D, [[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
    assert t.edges == [(1, 2), (2, 3)]


def test_stacked():
    """Identity on top of the line difference."""
    t = make_transform("stacked", 3)
    assert t.D.shape == (5, 3)
    assert np.array_equal(t.D[:3], np.eye(3))
    assert np.array_equal(t.D[3:], make_transform("line_difference", 3).D)


def test_graph_difference():
    """One +1 at the tail, one -1 at the head; rows sum to zero."""
    edges = [(1, 3), (2, 4), (4, 1)]
    t = make_transform("graph_difference", 4, edges)
    assert np.all(t.D.sum(axis=1) == 0)
    beta = np.array([1.0, 2.0, 3.0, 4.0])
    assert (t.D @ beta).tolist() == [-2.0, -2.0, 3.0]


def test_graph_difference_invalid_edges():
    """Out of range, self-loops and duplicates (either orientation) are rejected."""
    with pytest.raises(InvalidEdgeError):
        make_transform("graph_difference", 3, [(1, 4)])
    with pytest.raises(InvalidEdgeError):
        make_transform("graph_difference", 3, [(2, 2)])
    with pytest.raises(InvalidEdgeError):
        make_transform("graph_difference", 3, [(1, 2), (2, 1)])
    with pytest.raises(InvalidEdgeError):
        make_transform("graph_difference", 3, [])


def test_difference_kinds_need_two_features():
    """p = 1 has no edges."""
    with pytest.raises(InvalidParameterError):
        make_transform("line_difference", 1)


def test_line_edges():
    """Path graph edges."""
    assert line_edges(4) == [(1, 2), (2, 3), (3, 4)]


def test_restrict_and_custom():
    """Submatrices are tagged custom; custom wraps dense input."""
    t = make_transform("stacked", 4).restrict([0, 4], [0, 1])
    assert t.kind is TransformKind.CUSTOM
    assert np.array_equal(t.D, [[1.0, 0.0], [1.0, -1.0]])
    with pytest.raises(InvalidParameterError):
        custom_transform(np.array([[np.nan]]))
