"""Grid USO generators and the orientation text format.

File format (UTF-8)::

    # optional comment lines
    a b
    <b lines of a integers: row_rank, y ascending>
    <a lines of b integers: col_rank, x ascending>
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import InputError, InternalError, ParseError, SamplingError, SizeError
from .grid import GridOrientation, GridShape
from .rng import derive_seed, make_rng
from .validate import validate_rank_matrices, validate_uso

LINEAR_RETRY_CAP = 64
REJECTION_LIMIT = 5


@dataclass(frozen=True)
class LinearPotential:
    alpha: tuple
    beta: tuple

    def value(self, x: int, y: int) -> float:
        return self.alpha[x] + self.beta[y]

    def is_generic(self) -> bool:
        sums = [p + q for q in self.beta for p in self.alpha]
        return len(set(sums)) == len(sums)


@dataclass(frozen=True)
class GenConfig:
    kind: str = "linear"
    seed: int = 0
    max_tries: int = 1_000_000
    steps: int = 1000

    def __post_init__(self):
        if self.kind not in ("linear", "rejection", "flip"):
            raise InputError(f"unknown generator kind {self.kind!r}")
        if self.max_tries < 1 or self.steps < 0:
            raise InputError("max_tries must be positive and steps non-negative")


def orientation_from_potential(shape: GridShape, potential: LinearPotential) -> GridOrientation:
    """Orient every edge toward the endpoint with the smaller ``alpha[x] + beta[y]``."""
    if len(potential.alpha) != shape.a or len(potential.beta) != shape.b:
        raise InputError("potential length does not match the shape")
    if not potential.is_generic():
        raise InputError("potential is not generic: two vertices share a value")
    alpha = np.asarray(potential.alpha, dtype=float)
    beta = np.asarray(potential.beta, dtype=float)
    f = alpha[None, :] + beta[:, None]  # f[y, x]
    row_rank = np.argsort(np.argsort(f, axis=1), axis=1)
    col_rank = np.argsort(np.argsort(f.T, axis=1), axis=1)
    return GridOrientation(shape, row_rank, col_rank)


def gen_linear(shape: GridShape, seed: int) -> tuple[GridOrientation, LinearPotential]:
    rng = make_rng(seed)
    for _ in range(LINEAR_RETRY_CAP):
        pot = LinearPotential(
            tuple(rng.random() for _ in range(shape.a)),
            tuple(rng.random() for _ in range(shape.b)),
        )
        if pot.is_generic():
            return orientation_from_potential(shape, pot), pot
    raise InternalError(f"no generic potential after {LINEAR_RETRY_CAP} draws")


def candidate_batch(shape: GridShape, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
    """``count`` candidates as arrays ``(count, b, a)`` and ``(count, a, b)`` of uniform permutations."""
    a, b = shape.a, shape.b
    rows = rng.permuted(np.broadcast_to(np.arange(a), (count, b, a)), axis=2)
    cols = rng.permuted(np.broadcast_to(np.arange(b), (count, a, b)), axis=2)
    return rows, cols


def _no_double_sink_mask(rows: np.ndarray, cols: np.ndarray, x1: int, x2: int) -> np.ndarray:
    """Per candidate: no 2x2 face on columns ``x1, x2`` has two sinks."""
    b = rows.shape[1]
    y1, y2 = np.triu_indices(b, k=1)
    first = rows[:, :, x1] < rows[:, :, x2]  # (count, b): x1 under x2 in row y
    c1 = cols[:, x1, :]
    c2 = cols[:, x2, :]
    diag = first[:, y1] & ~first[:, y2] & (c1[:, y1] < c1[:, y2]) & (c2[:, y2] < c2[:, y1])
    anti = first[:, y2] & ~first[:, y1] & (c1[:, y2] < c1[:, y1]) & (c2[:, y1] < c2[:, y2])
    return ~(diag | anti).any(axis=1)


def gen_rejection(
    shape: GridShape,
    seed: int,
    max_tries: int = 10_000_000,
    limit: int = REJECTION_LIMIT,
    batch: int = 1 << 15,
) -> GridOrientation:
    """Uniform sample from the USOs of ``shape`` by rejection.

    Candidates (independent uniform permutations for every row and column,
    numpy PCG64 stream seeded with ``seed``) are drawn in batches that start
    at 64 and double up to ``batch``.  A batch is
    thinned by the 2x2 double-sink test one column pair at a time; the
    survivors go through :func:`validate_uso` in draw order and the first
    accepted candidate is returned, so the result is the first accepted
    draw of the plain sampler.
    """
    if shape.a > limit or shape.b > limit:
        raise SizeError(f"rejection sampling limited to {limit}x{limit}, got {shape}")
    if max_tries < 1:
        raise InputError("max_tries must be positive")
    a = shape.a
    rng = np.random.default_rng(seed)
    tries = 0
    size = min(64, batch)
    while tries < max_tries:
        count = min(size, max_tries - tries)
        size = min(2 * size, batch)
        rows, cols = candidate_batch(shape, rng, count)
        alive = np.arange(count)
        for x2 in range(1, a):
            for x1 in range(x2):
                keep = _no_double_sink_mask(rows[alive], cols[alive], x1, x2)
                alive = alive[keep]
                if not len(alive):
                    break
            if not len(alive):
                break
        for idx in alive.tolist():
            cand = GridOrientation(shape, rows[idx], cols[idx])
            if validate_uso(cand).is_uso:
                return cand
        tries += count
    raise SamplingError(f"no USO among {max_tries} candidates of shape {shape}", max_tries)


def random_candidate(shape: GridShape, rng: np.random.Generator) -> GridOrientation:
    """One candidate with independent uniform row and column permutations."""
    rows, cols = candidate_batch(shape, rng, 1)
    return GridOrientation(shape, rows[0], cols[0])


def _transposed(o: GridOrientation, line_kind: str, line: int, r: int) -> GridOrientation:
    """Swap ranks ``r`` and ``r+1`` inside one row or column."""
    row_rank = o.row_rank.copy()
    col_rank = o.col_rank.copy()
    mat = row_rank if line_kind == "row" else col_rank
    vec = mat[line]
    i, j = int(np.flatnonzero(vec == r)[0]), int(np.flatnonzero(vec == r + 1)[0])
    vec[i], vec[j] = r + 1, r
    return GridOrientation(o.shape, row_rank, col_rank)


def flip_chain_states(start: GridOrientation, steps: int, seed: int):
    """Yield the current state after each of ``steps`` proposals."""
    if not validate_uso(start).is_uso:
        raise InputError("flip chain must start from a USO")
    a, b = start.shape.a, start.shape.b
    rng = make_rng(seed)
    state = start
    for _ in range(steps):
        # a row or column uniformly among the a+b lines, then an adjacent rank pair
        line = rng.randrange(a + b)
        if line < b:
            prop = _transposed(state, "row", line, rng.randrange(a - 1))
        else:
            prop = _transposed(state, "col", line - b, rng.randrange(b - 1))
        if validate_uso(prop).is_uso:
            state = prop
        yield state


def gen_flip_chain(start: GridOrientation, steps: int, seed: int) -> GridOrientation:
    if steps < 0:
        raise InputError("steps must be non-negative")
    state = start
    if steps == 0:
        if not validate_uso(start).is_uso:
            raise InputError("flip chain must start from a USO")
        return start
    for state in flip_chain_states(start, steps, seed):
        pass
    return state


def generate(shape: GridShape, config: GenConfig) -> GridOrientation:
    if config.kind == "linear":
        return gen_linear(shape, config.seed)[0]
    if config.kind == "rejection":
        return gen_rejection(shape, config.seed, config.max_tries)
    start, _ = gen_linear(shape, config.seed)
    return gen_flip_chain(start, config.steps, derive_seed(config.seed, 1))


def dumps(o: GridOrientation, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append(f"{o.shape.a} {o.shape.b}")
    lines += [" ".join(map(str, row)) for row in o.rows]
    lines += [" ".join(map(str, col)) for col in o.cols]
    return "\n".join(lines) + "\n"


def loads(text: str) -> GridOrientation:
    body = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        try:
            body.append((lineno, [int(t) for t in s.split()]))
        except ValueError:
            raise ParseError(f"non-integer token in {s!r}", lineno) from None
    if not body:
        raise ParseError("empty orientation file")
    lineno, header = body[0]
    if len(header) != 2:
        raise ParseError("header must be 'a b'", lineno, "header")
    a, b = header
    try:
        GridShape(a, b)
    except InputError as exc:
        raise ParseError(str(exc), lineno, "header") from None
    expected = [("row_rank", y, a) for y in range(b)] + [("col_rank", x, b) for x in range(a)]
    rest = body[1:]
    if len(rest) < len(expected):
        name, idx, _ = expected[len(rest)]
        raise ParseError(f"missing {name} row {idx}", rest[-1][0] if rest else lineno, name)
    if len(rest) > len(expected):
        raise ParseError("trailing data after col_rank", rest[len(expected)][0])
    for (name, idx, width), (ln, vals) in zip(expected, rest):
        if len(vals) != width:
            raise ParseError(f"{name} row {idx} has {len(vals)} entries, expected {width}", ln, name)
    rows = [vals for _, vals in rest[:b]]
    cols = [vals for _, vals in rest[b:]]
    try:
        return validate_rank_matrices(a, b, rows, cols)
    except InputError as exc:
        raise ParseError(str(exc)) from None


def save(o: GridOrientation, path, comment: str | None = None) -> None:
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(dumps(o, comment))


def load(path) -> GridOrientation:
    with open(os.fspath(path), encoding="utf-8") as fh:
        return loads(fh.read())
