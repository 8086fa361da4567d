"""Slow, definition-level reference implementations used only by the tests.

Nothing in here shares code with the package beyond the orientation
container, so agreement between the two is meaningful.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

from uso_lab.grid import GridOrientation, GridShape, Vertex


def edge_head(o: GridOrientation, u: Vertex, v: Vertex) -> Vertex:
    """Endpoint the edge ``{u, v}`` points to (lower rank within its line)."""
    if u.y == v.y:
        return u if o.rows[u.y][u.x] < o.rows[v.y][v.x] else v
    assert u.x == v.x
    return u if o.cols[u.x][u.y] < o.cols[v.x][v.y] else v


def successors(o: GridOrientation, v: Vertex) -> list[Vertex]:
    a, b = o.shape.a, o.shape.b
    nbrs = [Vertex(x, v.y) for x in range(a) if x != v.x] + [Vertex(v.x, y) for y in range(b) if y != v.y]
    return [u for u in nbrs if edge_head(o, v, u) == u]


def naive_outmap(o: GridOrientation, v: Vertex) -> tuple[set, set]:
    px, py = set(), set()
    for u in successors(o, v):
        (px if u.y == v.y else py).add(u.x if u.y == v.y else u.y)
    return px, py


def nonempty_subsets(n: int):
    for r in range(1, n + 1):
        yield from itertools.combinations(range(n), r)


def naive_is_uso(o: GridOrientation) -> bool:
    a, b = o.shape.a, o.shape.b
    for xs in nonempty_subsets(a):
        for ys in nonempty_subsets(b):
            face = {Vertex(x, y) for x in xs for y in ys}
            sinks = [v for v in face if not any(u in face for u in successors(o, v))]
            if len(sinks) != 1:
                return False
    return True


def all_candidates(shape: GridShape):
    """Every pair of rank matrices (row and column permutations) of ``shape``."""
    a, b = shape.a, shape.b
    row_perms = list(itertools.permutations(range(a)))
    col_perms = list(itertools.permutations(range(b)))
    for rows in itertools.product(row_perms, repeat=b):
        for cols in itertools.product(col_perms, repeat=a):
            yield GridOrientation(shape, [list(r) for r in rows], [list(c) for c in cols])


def naive_reach(o: GridOrientation, w: Vertex) -> set:
    seen, stack = set(), list(successors(o, w))
    while stack:
        u = stack.pop()
        if u not in seen:
            seen.add(u)
            stack.extend(successors(o, u))
    return seen


def naive_has_cycle(o: GridOrientation) -> bool:
    colour = {}

    def visit(v):
        colour[v] = 1
        for u in successors(o, v):
            c = colour.get(u, 0)
            if c == 1 or (c == 0 and visit(u)):
                return True
        colour[v] = 2
        return False

    return any(colour.get(v, 0) == 0 and visit(v) for v in o.shape.vertices())


def naive_expected_steps(o: GridOrientation) -> dict:
    @lru_cache(maxsize=None)
    def E(v):
        succ = successors(o, v)
        if not succ:
            return Fraction(0)
        return 1 + sum(E(u) for u in succ) / len(succ)

    return {v: E(v) for v in o.shape.vertices()}


def naive_hitting(o: GridOrientation, target: set) -> dict:
    @lru_cache(maxsize=None)
    def E(v):
        if v in target:
            return Fraction(0)
        succ = successors(o, v)
        return 1 + sum(E(u) for u in succ) / len(succ)

    return {v: E(v) for v in o.shape.vertices()}


def naive_sigma(o: GridOrientation, w: Vertex) -> dict:
    """Expected index of the first pivot in ``Phi(w)``; the terminal pivot counts too."""
    wx, wy = naive_outmap(o, w)

    @lru_cache(maxsize=None)
    def S(v):
        succ = successors(o, v)
        if not succ:
            return Fraction(1)
        total = Fraction(1)
        for u in succ:
            in_w = (u.x in wx) if u.y == v.y else (u.y in wy)
            if not in_w:
                total += S(u) / len(succ)
        return total

    return {v: S(v) for v in o.shape.vertices()}


def harmonic(n: int) -> Fraction:
    return sum((Fraction(1, k) for k in range(1, n + 1)), Fraction(0))


def exact_e1_probability(o: GridOrientation, chain, i: int) -> dict:
    """Exact ``Pr[E1]`` for every start in ``W^{i+1} - W^i``, by recursion on the
    position before ``tau_1`` (the walk is Markov in its position until then)."""
    ux, uy = naive_outmap(o, chain.w[i + 1])
    lx, ly = naive_outmap(o, chain.w[i])
    low = chain.W[i]

    @lru_cache(maxsize=None)
    def P(v):
        succ = successors(o, v)
        if not succ:  # the terminal pivot is a tau pivot; the walk sits at the sink
            return Fraction(int(v in low))
        total = Fraction(0)
        for u in succ:
            along_x = u.y == v.y
            h = u.x if along_x else u.y
            watched = (h in ux or h in lx) if along_x else (h in uy or h in ly)
            if watched:
                total += int(u in low or (h in lx if along_x else h in ly))
            else:
                total += P(u)
        return total / len(succ)

    return {v: P(v) for v in sorted(chain.W[i + 1] - chain.W[i], key=lambda v: (v.y, v.x))}
