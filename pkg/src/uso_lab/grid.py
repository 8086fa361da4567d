"""Grid shapes, vertices, faces and rank-matrix orientations.

A grid is the product of two complete graphs K_a x K_b.  Vertex ``(x, y)``
pairs an X-facet ``x`` in ``0..a-1`` with a Y-facet ``y`` in ``0..b-1``;
two vertices are adjacent when they agree in exactly one coordinate.

Every row and column of a unique sink orientation is a transitive
tournament, so an orientation is stored as two rank matrices:
``row_rank[y][x]`` counts the outgoing row edges of ``(x, y)`` and
``col_rank[x][y]`` counts its outgoing column edges.  Edges point from the
higher rank to the lower one; rank 0 is the sink of its row or column.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import InputError


@dataclass(frozen=True, order=True)
class GridShape:
    a: int
    b: int

    def __post_init__(self):
        if isinstance(self.a, bool) or isinstance(self.b, bool):
            raise InputError("grid sizes must be integers")
        if int(self.a) != self.a or int(self.b) != self.b:
            raise InputError("grid sizes must be integers")
        if self.a < 2 or self.b < 2:
            raise InputError(f"grid sizes must be at least 2, got {self.a}x{self.b}")

    @property
    def n(self) -> int:
        """Number of facets."""
        return self.a + self.b

    @property
    def d(self) -> int:
        """Dimension of the polytope."""
        return self.a + self.b - 2

    @property
    def num_vertices(self) -> int:
        return self.a * self.b

    @property
    def num_faces(self) -> int:
        return ((1 << self.a) - 1) * ((1 << self.b) - 1)

    def contains(self, v: Vertex) -> bool:
        return 0 <= v.x < self.a and 0 <= v.y < self.b

    def check(self, v: Vertex) -> None:
        if not self.contains(v):
            raise InputError(f"vertex {tuple(v)} outside {self}")

    def vertices(self):
        """All vertices, ``y``-major."""
        return [Vertex(x, y) for y in range(self.b) for x in range(self.a)]

    def index(self, v: Vertex) -> int:
        return v.y * self.a + v.x

    def vertex(self, idx: int) -> Vertex:
        return Vertex(idx % self.a, idx // self.a)

    @classmethod
    def parse(cls, text: str) -> GridShape:
        """Parse ``"AxB"``."""
        try:
            a, b = (int(t) for t in text.lower().split("x"))
        except ValueError:
            raise InputError(f"shape must look like AxB, got {text!r}") from None
        return cls(a, b)

    def __str__(self) -> str:
        return f"{self.a}x{self.b}"


class Vertex(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class Outmap:
    phi_x: frozenset
    phi_y: frozenset

    def __len__(self) -> int:
        return len(self.phi_x) + len(self.phi_y)


@dataclass(frozen=True)
class Face:
    xs: frozenset
    ys: frozenset

    def __init__(self, xs, ys):
        object.__setattr__(self, "xs", frozenset(xs))
        object.__setattr__(self, "ys", frozenset(ys))
        if not self.xs or not self.ys:
            raise InputError("a face needs at least one X- and one Y-facet")

    def __contains__(self, v) -> bool:
        return v[0] in self.xs and v[1] in self.ys

    def vertices(self):
        return [Vertex(x, y) for y in sorted(self.ys) for x in sorted(self.xs)]

    @classmethod
    def full(cls, shape: GridShape) -> Face:
        return cls(range(shape.a), range(shape.b))

    def __str__(self) -> str:
        return f"X{sorted(self.xs)} x Y{sorted(self.ys)}"


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.int64, copy=True)
    out.setflags(write=False)
    return out


class GridOrientation:
    """An orientation given by per-row and per-column rank permutations.

    Build through :func:`uso_lab.validate.validate_rank_matrices` when the
    matrices come from outside; the constructor here trusts its input up to
    array shapes.
    """

    def __init__(self, shape: GridShape, row_rank, col_rank):
        row_rank = _frozen(row_rank)
        col_rank = _frozen(col_rank)
        if row_rank.shape != (shape.b, shape.a):
            raise InputError(f"row_rank must be {shape.b}x{shape.a}, got {row_rank.shape}")
        if col_rank.shape != (shape.a, shape.b):
            raise InputError(f"col_rank must be {shape.a}x{shape.b}, got {col_rank.shape}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "row_rank", row_rank)
        object.__setattr__(self, "col_rank", col_rank)

    def __setattr__(self, name, value):
        raise AttributeError("GridOrientation is immutable")

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridOrientation):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_rank, other.row_rank)
            and np.array_equal(self.col_rank, other.col_rank)
        )

    def __hash__(self) -> int:
        return hash((self.shape, self.row_rank.tobytes(), self.col_rank.tobytes()))

    def __repr__(self) -> str:
        return f"GridOrientation({self.shape}, row_rank={self.row_rank.tolist()}, col_rank={self.col_rank.tolist()})"

    def key(self) -> tuple:
        """Hashable canonical content, handy for visited-set bookkeeping."""
        return (self.shape.a, self.shape.b, self.row_rank.tobytes(), self.col_rank.tobytes())

    # Plain-list views for the tight Python loops of the walk and the DPs.
    @cached_property
    def rows(self) -> list[list[int]]:
        return self.row_rank.tolist()

    @cached_property
    def cols(self) -> list[list[int]]:
        return self.col_rank.tolist()

    @cached_property
    def row_order(self) -> list[list[int]]:
        """``row_order[y][r]`` is the X-index holding rank ``r`` in row ``y``."""
        return np.argsort(self.row_rank, axis=1, kind="stable").tolist()

    @cached_property
    def col_order(self) -> list[list[int]]:
        """``col_order[x][r]`` is the Y-index holding rank ``r`` in column ``x``."""
        return np.argsort(self.col_rank, axis=1, kind="stable").tolist()

    @cached_property
    def sinks(self) -> list[Vertex]:
        """Vertices with no outgoing edge at all."""
        ys, xs = np.nonzero((self.row_rank == 0) & (self.col_rank.T == 0))
        return sorted((Vertex(int(x), int(y)) for x, y in zip(xs, ys)), key=lambda v: (v.y, v.x))

    @property
    def sink(self) -> Vertex:
        """The unique global sink (for a USO)."""
        s = self.sinks
        if len(s) != 1:
            raise InputError(f"orientation has {len(s)} global sinks")
        return s[0]

    def degree_pairs(self) -> np.ndarray:
        """Array ``(b, a, 2)`` of refined out-degrees."""
        return np.stack([self.row_rank, self.col_rank.T], axis=-1)


def outmap(o: GridOrientation, v: Vertex) -> Outmap:
    o.shape.check(v)
    x, y = v
    rx = o.rows[y]
    cy = o.cols[x]
    return Outmap(
        frozenset(x2 for x2 in range(o.shape.a) if rx[x2] < rx[x]),
        frozenset(y2 for y2 in range(o.shape.b) if cy[y2] < cy[y]),
    )


def refined_out_degree(o: GridOrientation, v: Vertex) -> tuple[int, int]:
    o.shape.check(v)
    return o.rows[v.y][v.x], o.cols[v.x][v.y]


def out_neighbors(o: GridOrientation, v: Vertex) -> list[tuple[tuple[str, int], Vertex]]:
    """``(pivot, target)`` pairs, X-pivots first, each side in increasing rank."""
    i, j = refined_out_degree(o, v)
    x, y = v
    out = [(("X", x2), Vertex(x2, y)) for x2 in o.row_order[y][:i]]
    out += [(("Y", y2), Vertex(x, y2)) for y2 in o.col_order[x][:j]]
    return out


def is_sink_of_face(o: GridOrientation, v: Vertex, f: Face) -> bool:
    o.shape.check(v)
    if v not in f:
        raise InputError(f"vertex {tuple(v)} is not in face {f}")
    phi = outmap(o, v)
    return not (phi.phi_x & f.xs) and not (phi.phi_y & f.ys)


def is_adjacent(u: Vertex, v: Vertex) -> bool:
    return (u.x == v.x) != (u.y == v.y)


def facet_id(shape: GridShape, side: str, index: int) -> int:
    """Serialized facet index: X-facets ``0..a-1``, Y-facets ``a..n-1``."""
    return index if side == "X" else shape.a + index
