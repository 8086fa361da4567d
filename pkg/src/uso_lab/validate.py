"""Unique-sink checks for grid orientations.

Two independent routes decide USO-ness:

* :func:`validate_uso` runs in polynomial time.  Two sinks of one face can
  never share a row or column, and a pair of sinks of a face is also a pair
  of sinks of the 2x2 face they span, so "no face has two sinks" reduces to
  a check over 2x2 faces.  Vertex ``v`` is the sink of exactly
  ``2**(a-1-i_v) * 2**(b-1-j_v)`` faces, hence with no double sinks every
  face has exactly one sink iff these counts add up to the number of faces.
* :func:`validate_uso_bruteforce` enumerates every face and counts sinks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import CyclicityError, InputError, SizeError
from .grid import Face, GridOrientation, GridShape, Vertex

BRUTE_FORCE_LIMIT = 12


@dataclass(frozen=True)
class Violation:
    kind: str  # "double-sink", "no-sink", "count-mismatch"
    face: Face | None = None
    sinks: tuple = ()
    detail: str = ""

    def __str__(self) -> str:
        parts = [self.kind]
        if self.face is not None:
            parts.append(f"face {self.face}")
        if self.sinks:
            parts.append("sinks " + " ".join(f"({v.x},{v.y})" for v in self.sinks))
        if self.detail:
            parts.append(self.detail)
        return "; ".join(parts)


@dataclass(frozen=True)
class UsoReport:
    is_uso: bool
    witness: Violation | None
    faces_checked: int
    method: str

    def __post_init__(self):
        if self.is_uso and self.witness is not None:
            raise ValueError("a USO report cannot carry a witness")

    def records(self) -> dict:
        return {
            "method": self.method,
            "is_uso": self.is_uso,
            "faces_checked": self.faces_checked,
            "witness": str(self.witness) if self.witness else "none",
        }


@dataclass(frozen=True)
class CycleReport:
    acyclic: bool
    cycle: tuple = field(default=())


def _check_permutations(mat: np.ndarray, name: str, what: str) -> None:
    k = mat.shape[1]
    target = np.arange(k)
    for r, line in enumerate(mat):
        if not np.array_equal(np.sort(line), target):
            raise InputError(f"{what} {r} of {name} not a permutation of 0..{k - 1}: {line.tolist()}")


def validate_rank_matrices(a: int, b: int, row_rank, col_rank) -> GridOrientation:
    """Build an orientation from raw matrices, rejecting non-permutations.

    ``row_rank`` must be ``b`` rows of ``a`` entries, ``col_rank`` ``a``
    rows of ``b`` entries.
    """
    shape = GridShape(a, b)
    try:
        rr = np.asarray(row_rank, dtype=np.int64)
        cr = np.asarray(col_rank, dtype=np.int64)
    except (TypeError, ValueError):
        raise InputError("rank matrices must be rectangular integer arrays") from None
    if rr.shape != (b, a):
        raise InputError(f"row_rank must have shape {b}x{a}, got {'x'.join(map(str, rr.shape))}")
    if cr.shape != (a, b):
        raise InputError(f"col_rank must have shape {a}x{b}, got {'x'.join(map(str, cr.shape))}")
    _check_permutations(rr, "row_rank", "row")
    _check_permutations(cr, "col_rank", "column")
    return GridOrientation(shape, rr, cr)


def count_identity(o: GridOrientation) -> tuple[int, int]:
    """``(sum of per-vertex sink-face counts, number of faces)`` exactly."""
    a, b = o.shape.a, o.shape.b
    # exponent a-1-i + b-1-j for each vertex, bucketed to keep the bigint work O(a+b)
    exps = (a - 1 - o.row_rank) + (b - 1 - o.col_rank.T)
    hist = np.bincount(exps.ravel(), minlength=a + b - 1)
    lhs = sum(int(c) << k for k, c in enumerate(hist.tolist()) if c)
    return lhs, o.shape.num_faces


def _double_sink_row_pairs(o: GridOrientation):
    """Yield ``(y, y2)`` with ``y < y2`` where some 2x2 face on these rows has two sinks."""
    b = o.shape.b
    R = o.row_rank
    C = o.col_rank  # C[x, y]
    for y in range(b):
        order = np.argsort(R[y])  # X-indices by increasing rank in row y
        # below[y2, p]: in column order[p], y lies below y2
        below = C[order, y][None, :] < C[order, :].T
        rp = R[:, order]
        vals = np.where(below, rp, -1)
        prev = np.maximum.accumulate(vals, axis=1)
        prev = np.concatenate([np.full((b, 1), -1), prev[:, :-1]], axis=1)
        # x earlier in row y (so sink of its row pair), below y2 in its column, and
        # x2 later in row y, below y in its column, ranked under x in row y2
        bad = (~below) & (prev > rp)
        bad[y] = False
        for y2 in np.nonzero(bad.any(axis=1))[0].tolist():
            yield (y, y2) if y < y2 else (y2, y)


def _first_double_sink(o: GridOrientation, y: int, y2: int) -> Violation:
    R, C = o.rows, o.cols
    a = o.shape.a
    for x in range(a):
        for x2 in range(x + 1, a):
            for (p, q) in (((x, y), (x2, y2)), ((x, y2), (x2, y))):
                (px, py), (qx, qy) = p, q
                if (
                    R[py][px] < R[py][qx]
                    and C[px][py] < C[px][qy]
                    and R[qy][qx] < R[qy][px]
                    and C[qx][qy] < C[qx][py]
                ):
                    return Violation(
                        "double-sink",
                        Face((x, x2), (y, y2)),
                        tuple(sorted((Vertex(*p), Vertex(*q)), key=lambda v: (v.y, v.x))),
                    )
    raise AssertionError("row pair flagged without a double-sink face")


def validate_uso(o: GridOrientation) -> UsoReport:
    """Polynomial-time USO test (``O(a * b**2)`` array work)."""
    a, b = o.shape.a, o.shape.b
    pairs = sorted(set(_double_sink_row_pairs(o)))
    checked = a * (a - 1) // 2 * b * (b - 1) // 2
    if pairs:
        return UsoReport(False, _first_double_sink(o, *pairs[0]), checked, "polynomial")
    lhs, faces = count_identity(o)
    if lhs != faces:
        detail = f"sink-face total {lhs} != face count {faces}"
        return UsoReport(False, Violation("count-mismatch", detail=detail), checked, "polynomial")
    return UsoReport(True, None, checked, "polynomial")


def sink_counts_per_face(o: GridOrientation) -> np.ndarray:
    """Number of sinks of every face, indexed ``[xs_mask, ys_mask]``.

    Straight from the definition: ``v`` is a sink of face ``F`` iff ``v`` is
    in ``F`` and no outgoing edge of ``v`` stays inside ``F``.
    """
    a, b = o.shape.a, o.shape.b
    R, C = o.rows, o.cols
    xmasks = np.arange(1 << a)
    ymasks = np.arange(1 << b)
    in_x = np.zeros((a * b, 1 << a), dtype=np.int64)
    in_y = np.zeros((a * b, 1 << b), dtype=np.int64)
    for y in range(b):
        for x in range(a):
            v = y * a + x
            out_x = sum(1 << x2 for x2 in range(a) if R[y][x2] < R[y][x])
            out_y = sum(1 << y2 for y2 in range(b) if C[x][y2] < C[x][y])
            in_x[v] = ((xmasks >> x) & 1) * ((xmasks & out_x) == 0)
            in_y[v] = ((ymasks >> y) & 1) * ((ymasks & out_y) == 0)
    return in_x.T @ in_y


def validate_uso_bruteforce(o: GridOrientation, limit: int = BRUTE_FORCE_LIMIT) -> UsoReport:
    """USO test by enumerating all ``(2**a - 1) * (2**b - 1)`` faces."""
    a, b = o.shape.a, o.shape.b
    if a > limit or b > limit:
        raise SizeError(f"brute-force enumeration limited to {limit}x{limit}, got {o.shape}")
    counts = sink_counts_per_face(o)[1:, 1:]
    bad = np.argwhere(counts != 1)
    faces = counts.size
    if len(bad) == 0:
        return UsoReport(True, None, faces, "brute-force")
    # first offending face in (xs_mask, ys_mask) enumeration order
    xm, ym = (int(t) + 1 for t in bad[0])
    face = Face([x for x in range(a) if xm >> x & 1], [y for y in range(b) if ym >> y & 1])
    sinks = tuple(v for v in face.vertices() if _is_face_sink(o, v, face))
    kind = "no-sink" if not sinks else "double-sink"
    return UsoReport(False, Violation(kind, face, sinks), faces, "brute-force")


def _is_face_sink(o: GridOrientation, v: Vertex, f: Face) -> bool:
    R, C = o.rows, o.cols
    return all(R[v.y][x2] > R[v.y][v.x] for x2 in f.xs if x2 != v.x) and all(
        C[v.x][y2] > C[v.x][v.y] for y2 in f.ys if y2 != v.y
    )


def sink_first_order(o: GridOrientation):
    """Kahn's algorithm specialised to rank matrices.

    Each row and column is consumed in increasing rank, so a vertex becomes
    available once its row and its column have been consumed up to its rank.
    Returns ``(order, remaining)`` as flat vertex indices; ``remaining`` is
    empty iff the orientation is acyclic.
    """
    a, b = o.shape.a, o.shape.b
    R, C = o.rows, o.cols
    row_order, col_order = o.row_order, o.col_order
    row_done = [0] * b
    col_done = [0] * a
    queue = deque(y * a + x for y in range(b) for x in range(a) if R[y][x] == 0 and C[x][y] == 0)
    order = []
    while queue:
        v = queue.popleft()
        order.append(v)
        x, y = v % a, v // a
        row_done[y] += 1
        col_done[x] += 1
        if row_done[y] < a:
            x2 = row_order[y][row_done[y]]
            if col_done[x2] == C[x2][y]:
                queue.append(y * a + x2)
        if col_done[x] < b:
            y2 = col_order[x][col_done[x]]
            if row_done[y2] == R[y2][x]:
                queue.append(y2 * a + x)
    remaining = []
    if len(order) < a * b:
        seen = bytearray(a * b)
        for v in order:
            seen[v] = 1
        remaining = [v for v in range(a * b) if not seen[v]]
    return order, remaining, (row_done, col_done)


def check_acyclic(o: GridOrientation) -> CycleReport:
    order, remaining, (row_done, col_done) = sink_first_order(o)
    if not remaining:
        return CycleReport(True)
    a = o.shape.a
    R = o.rows

    # every leftover vertex has an unconsumed out-neighbour: follow one until a repeat
    def blocker(v: int) -> int:
        x, y = v % a, v // a
        if row_done[y] < R[y][x]:
            return y * a + o.row_order[y][row_done[y]]
        return o.col_order[x][col_done[x]] * a + x

    pos = {}
    path = []
    v = remaining[0]
    while v not in pos:
        pos[v] = len(path)
        path.append(v)
        v = blocker(v)
    cycle = tuple(Vertex(u % a, u // a) for u in path[pos[v]:])
    return CycleReport(False, cycle)


def require_acyclic(o: GridOrientation) -> list[int]:
    """Sink-first topological order as flat indices, or :class:`CyclicityError`."""
    order, remaining, _ = sink_first_order(o)
    if remaining:
        rep = check_acyclic(o)
        raise CyclicityError(
            "orientation has a directed cycle: " + " -> ".join(f"({v.x},{v.y})" for v in rep.cycle),
            rep.cycle,
        )
    return order


def is_directed_cycle(o: GridOrientation, cycle) -> bool:
    """True iff consecutive vertices (cyclically) are joined by forward edges."""
    if len(cycle) < 2:
        return False
    R, C = o.rows, o.cols
    for u, v in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        if u.y == v.y and u.x != v.x:
            if not R[u.y][v.x] < R[u.y][u.x]:
                return False
        elif u.x == v.x and u.y != v.y:
            if not C[u.x][v.y] < C[u.x][u.y]:
                return False
        else:
            return False
    return True
