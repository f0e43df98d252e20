"""Linear transformations gamma = D beta."""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from split_knockoffs.errors import InvalidEdgeError, InvalidParameterError

Edge = Tuple[int, int]


class TransformKind(str, Enum):
    IDENTITY = "identity"
    LINE_DIFFERENCE = "line_difference"
    GRAPH_DIFFERENCE = "graph_difference"
    STACKED = "stacked"
    CUSTOM = "custom"


@dataclass(frozen=True)
class LinearTransform:
    """The m x p matrix D with the tag of how it was built.

    Edges are 1-based (tail, head) pairs; row e of a graph difference has +1 at
    the tail and -1 at the head, so [D beta]_e = beta_tail - beta_head.
    """
    D: np.ndarray
    kind: TransformKind
    edges: Optional[List[Edge]] = None

    @property
    def m(self) -> int:
        return self.D.shape[0]

    @property
    def p(self) -> int:
        return self.D.shape[1]

    def restrict(self, rows: Sequence[int], cols: Sequence[int]) -> "LinearTransform":
        """Submatrix D[rows][:, cols] (0-based), tagged custom."""
        sub = self.D[np.ix_(np.asarray(rows, dtype=int), np.asarray(cols, dtype=int))]
        return LinearTransform(D=sub, kind=TransformKind.CUSTOM)


def _incidence(p: int, edges: Sequence[Edge]) -> np.ndarray:
    D = np.zeros((len(edges), p))
    for row, (tail, head) in enumerate(edges):
        D[row, tail - 1] = 1.0
        D[row, head - 1] = -1.0
    return D


def _validate_edges(p: int, edges: Sequence[Edge]) -> List[Edge]:
    if not edges:
        raise InvalidEdgeError("graph difference needs at least one edge")
    seen = set()
    checked: List[Edge] = []
    for tail, head in edges:
        tail, head = int(tail), int(head)
        if not (1 <= tail <= p and 1 <= head <= p):
            raise InvalidEdgeError(f"edge ({tail}, {head}) outside [1, {p}]")
        if tail == head:
            raise InvalidEdgeError(f"self-loop ({tail}, {head})")
        key = frozenset((tail, head))
        if key in seen:
            raise InvalidEdgeError(f"duplicate edge ({tail}, {head})")
        seen.add(key)
        checked.append((tail, head))
    return checked


def line_edges(p: int) -> List[Edge]:
    """Edges (i, i+1), i = 1..p-1, of the path graph."""
    return [(i, i + 1) for i in range(1, p)]


def make_transform(
    kind: TransformKind | str,
    p: int,
    edges: Optional[Sequence[Edge]] = None,
) -> LinearTransform:
    """Build D for one of the standard kinds.

    Args:
        kind: identity, line_difference, graph_difference or stacked
        p: Number of features
        edges: 1-based (tail, head) pairs, graph_difference only

    Returns:
        LinearTransform satisfying the kind's structure
    """
    kind = TransformKind(kind)
    if p < 1:
        raise InvalidParameterError(f"p must be positive, got {p}")
    if kind is TransformKind.IDENTITY:
        return LinearTransform(D=np.eye(p), kind=kind)
    if kind is TransformKind.CUSTOM:
        raise InvalidParameterError("custom transforms are built with custom_transform()")
    if p < 2:
        raise InvalidParameterError(f"{kind.value} needs p >= 2, got {p}")
    if kind is TransformKind.LINE_DIFFERENCE:
        path = line_edges(p)
        return LinearTransform(D=_incidence(p, path), kind=kind, edges=path)
    if kind is TransformKind.GRAPH_DIFFERENCE:
        checked = _validate_edges(p, edges or [])
        return LinearTransform(D=_incidence(p, checked), kind=kind, edges=checked)
    # stacked: identity on top of the line difference
    D = np.vstack([np.eye(p), _incidence(p, line_edges(p))])
    return LinearTransform(D=D, kind=kind)


def custom_transform(D: np.ndarray) -> LinearTransform:
    """Wrap a user-supplied dense D."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    if not np.all(np.isfinite(D)):
        raise InvalidParameterError("D contains non-finite entries")
    return LinearTransform(D=D, kind=TransformKind.CUSTOM)
