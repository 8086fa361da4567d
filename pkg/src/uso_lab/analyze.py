"""Exact analysis of Random-Edge on acyclic grid orientations.

All dynamic programs run over the sink-first topological order.  Along that
order every row and every column is consumed in increasing rank, so the
out-neighbours of a vertex inside its row are precisely the row vertices
already processed.  Keeping one running sum per row and per column turns
each expectation DP into an ``O(a*b)`` sweep.

Values are :class:`fractions.Fraction` with ``exact=True`` (the reference
mode for bound checks) and ``float`` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InputError, InvalidUsoError, ReachabilityError
from .grid import GridOrientation, Vertex
from .validate import check_acyclic, require_acyclic

HITTING_CONSTANT = 155


def harmonic(n: int, exact: bool = True):
    """``H_n``; by convention ``H_0 = 0``."""
    if n < 0:
        raise InputError("harmonic number needs n >= 0")
    if exact:
        return sum((Fraction(1, k) for k in range(1, n + 1)), Fraction(0))
    return sum(1.0 / k for k in range(1, n + 1))


def bernoulli_hitting_expectation(p, k: int):
    """Expected trials until ``k`` successive successes, success probability ``p``.

    Closed form ``(1 - p**k) / (p**k * (1 - p))``; exact for Fraction or int
    ``p``.
    """
    if not 0 < p < 1:
        raise InputError(f"success probability must lie in (0, 1), got {p}")
    if k < 0:
        raise InputError("run length must be non-negative")
    if isinstance(p, float):
        pk = p**k
        return (1.0 - pk) / (pk * (1.0 - p))
    p = Fraction(p)
    pk = p**k
    return (1 - pk) / (pk * (1 - p))


def hitting_bound(n: int) -> Fraction:
    return HITTING_CONSTANT * (harmonic(n) + 1)


def sigma_bound(n: int) -> Fraction:
    return harmonic(n) + 1


def topo_order(o: GridOrientation) -> list[Vertex]:
    """Vertices with every edge pointing from later to earlier (sink first)."""
    a = o.shape.a
    return [Vertex(v % a, v // a) for v in require_acyclic(o)]


def _as_mask(o: GridOrientation, vertices) -> bytearray:
    a = o.shape.a
    mask = bytearray(o.shape.num_vertices)
    for v in vertices:
        o.shape.check(v)
        mask[v[1] * a + v[0]] = 1
    return mask


def _to_dict(o: GridOrientation, values: list) -> dict:
    a = o.shape.a
    return {Vertex(i % a, i // a): val for i, val in enumerate(values)}


def _sweep(o, absorbing=None, keep_x=None, keep_y=None, sink_value=0, exact=True, order=None) -> list:
    """Generic expectation DP.

    ``E(v) = 0`` on ``absorbing``; ``E(v) = sink_value`` at a sink outside it;
    otherwise ``E(v) = 1 + (1/|Phi(v)|) * sum E(target)`` where only pivots
    with ``keep_x[x2]`` / ``keep_y[y2]`` contribute (the others end the walk).
    """
    a, b = o.shape.a, o.shape.b
    R, C = o.rows, o.cols
    if order is None:
        order = require_acyclic(o)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    sink_val = Fraction(sink_value) if exact else float(sink_value)
    row_sum = [zero] * b
    col_sum = [zero] * a
    out = [zero] * (a * b)
    for v in order:
        x, y = v % a, v // a
        if absorbing is not None and absorbing[v]:
            e = zero
        else:
            m = R[y][x] + C[x][y]
            if m == 0:
                e = sink_val
            elif exact:
                e = one + Fraction(row_sum[y] + col_sum[x]) / m
            else:
                e = 1.0 + (row_sum[y] + col_sum[x]) / m
        out[v] = e
        if keep_x is None or keep_x[x]:
            row_sum[y] += e
        if keep_y is None or keep_y[y]:
            col_sum[x] += e
    return out


def expected_steps_flat(o: GridOrientation, exact: bool = True, order=None) -> list:
    return _sweep(o, exact=exact, order=order)


def exact_expected_steps(o: GridOrientation, exact: bool = True) -> dict:
    """Expected Random-Edge walk length to the global sink from every vertex."""
    return _to_dict(o, expected_steps_flat(o, exact))


def _can_reach(o: GridOrientation, target: bytearray, order) -> bytearray:
    a, b = o.shape.a, o.shape.b
    row_any = [False] * b
    col_any = [False] * a
    ok = bytearray(a * b)
    for v in order:
        x, y = v % a, v // a
        if target[v] or row_any[y] or col_any[x]:
            ok[v] = 1
            row_any[y] = True
            col_any[x] = True
    return ok


def hitting_time_flat(o: GridOrientation, absorbing: bytearray, exact: bool = True, order=None) -> list:
    if order is None:
        order = require_acyclic(o)
    ok = _can_reach(o, absorbing, order)
    if not all(ok):
        bad = ok.index(0)
        a = o.shape.a
        raise ReachabilityError(f"vertex ({bad % a},{bad // a}) cannot reach the absorbing set")
    return _sweep(o, absorbing=absorbing, exact=exact, order=order)


def exact_hitting_time(o: GridOrientation, absorbing, exact: bool = True) -> dict:
    """Expected steps until the walk first enters ``absorbing`` (a vertex collection)."""
    return _to_dict(o, hitting_time_flat(o, _as_mask(o, absorbing), exact))


def reach_set(o: GridOrientation, w: Vertex) -> frozenset:
    """Vertices reachable from ``w`` by a non-empty directed path.

    The reachable set meets each row (column) in a set closed under lower
    rank, so it is grown by extending per-row and per-column rank prefixes;
    every vertex enters at most once.
    """
    o.shape.check(w)
    a, b = o.shape.a, o.shape.b
    R, C = o.rows, o.cols
    row_order, col_order = o.row_order, o.col_order
    row_cov = [0] * b
    col_cov = [0] * a
    seen = bytearray(a * b)
    out = []
    stack = [w]
    while stack:
        x, y = stack.pop()
        k, l = R[y][x], C[x][y]
        for r in range(row_cov[y], k):
            x2 = row_order[y][r]
            if not seen[y * a + x2]:
                seen[y * a + x2] = 1
                out.append(Vertex(x2, y))
                stack.append((x2, y))
        row_cov[y] = max(row_cov[y], k)
        for r in range(col_cov[x], l):
            y2 = col_order[x][r]
            if not seen[y2 * a + x]:
                seen[y2 * a + x] = 1
                out.append(Vertex(x, y2))
                stack.append((x, y2))
        col_cov[x] = max(col_cov[x], l)
    return frozenset(out)


def reach_closure(o: GridOrientation, order=None) -> list[int]:
    """Bitmask of ``reach_set`` for every vertex (bit ``y*a + x``).

    The rank-``k-1`` vertex of a row dominates every lower one, so the
    reachable set of ``v`` is the union over its next-lower row and column
    neighbours of ``{u} | reach(u)``.
    """
    a = o.shape.a
    R, C = o.rows, o.cols
    if order is None:
        order = require_acyclic(o)
    reach = [0] * (a * o.shape.b)
    for v in order:
        x, y = v % a, v // a
        k, l = R[y][x], C[x][y]
        bits = 0
        if k:
            u = y * a + o.row_order[y][k - 1]
            bits |= reach[u] | (1 << u)
        if l:
            u = o.col_order[x][l - 1] * a + x
            bits |= reach[u] | (1 << u)
        reach[v] = bits
    return reach


def degree_pair_counts(o: GridOrientation) -> np.ndarray:
    """``counts[i, j]`` = number of vertices with refined out-degree ``(i, j)``."""
    a, b = o.shape.a, o.shape.b
    counts = np.zeros((a, b), dtype=np.int64)
    np.add.at(counts, (o.row_rank.ravel(), o.col_rank.T.ravel()), 1)
    return counts


def degree_uniqueness_violations(o: GridOrientation) -> list[tuple[int, int, int]]:
    """``(i, j, count)`` for every guaranteed pair not held by exactly one vertex."""
    counts = degree_pair_counts(o)[: o.shape.a - 1, : o.shape.b - 1]
    return [(int(i), int(j), int(counts[i, j])) for i, j in np.argwhere(counts != 1)]


def vertex_with_degree(o: GridOrientation, i: int, j: int) -> list[Vertex]:
    ys, xs = np.nonzero((o.row_rank == i) & (o.col_rank.T == j))
    return [Vertex(int(x), int(y)) for y, x in sorted(zip(ys.tolist(), xs.tolist()))]


def milestone_count(a: int, b: int) -> int:
    """``1 + floor(log2(min(a-1, b-1)))``."""
    return (min(a - 1, b - 1)).bit_length()


@dataclass(frozen=True)
class MilestoneChain:
    L: int
    w: tuple  # w[0] is the global sink
    W: tuple  # W[0] == {w[0]}
    demoted: bool = False
    nominal_L: int = 0

    def reach(self, i: int) -> frozenset:
        return self.W[i]


def milestones(o: GridOrientation) -> MilestoneChain:
    a, b = o.shape.a, o.shape.b
    sinks = o.sinks
    if len(sinks) != 1:
        raise InvalidUsoError(f"expected one global sink, found {len(sinks)}")
    nominal = milestone_count(a, b)
    ws = [sinks[0]]
    L = nominal
    demoted = False
    for i in range(1, nominal + 1):
        d = 1 << (i - 1)
        found = vertex_with_degree(o, d, d)
        if len(found) == 1:
            ws.append(found[0])
            continue
        if d < a - 1 and d < b - 1:
            raise InvalidUsoError(f"{len(found)} vertices with refined out-degree ({d},{d})")
        # only the top index can leave the guaranteed range
        L = i - 1
        demoted = True
        break
    W = [frozenset([ws[0]])] + [reach_set(o, w) for w in ws[1:]]
    return MilestoneChain(L, tuple(ws), tuple(W), demoted, nominal)


def _check_index(chain: MilestoneChain, i: int) -> None:
    if not 0 <= i <= chain.L - 1:
        raise InputError(f"milestone index {i} outside 0..{chain.L - 1}")


def sigma_flat(o: GridOrientation, chain: MilestoneChain, i: int, exact: bool = True, order=None) -> list:
    _check_index(chain, i)
    w = chain.w[i + 1]
    R, C = o.rows, o.cols
    keep_x = [not R[w.y][x] < R[w.y][w.x] for x in range(o.shape.a)]
    keep_y = [not C[w.x][y] < C[w.x][w.y] for y in range(o.shape.b)]
    return _sweep(o, keep_x=keep_x, keep_y=keep_y, sink_value=1, exact=exact, order=order)


def exact_expected_sigma(o: GridOrientation, chain: MilestoneChain, i: int, exact: bool = True) -> dict:
    """Expected first time a pivot of ``Phi(w^{i+1})`` (or the terminal pivot) is drawn."""
    return _to_dict(o, sigma_flat(o, chain, i, exact))


@dataclass(frozen=True)
class LemmaResult:
    name: str
    passed: bool
    checked: int
    counterexample: str | None = None


@dataclass(frozen=True)
class LemmaReport:
    results: tuple

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> LemmaResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def records(self) -> list[dict]:
        return [
            {"lemma": r.name, "passed": r.passed, "checked": r.checked, "counterexample": r.counterexample or "none"}
            for r in self.results
        ]


def _phi_sets(o: GridOrientation, v: Vertex) -> tuple[set, set]:
    R, C = o.rows, o.cols
    px = {x for x in range(o.shape.a) if R[v.y][x] < R[v.y][v.x]}
    py = {y for y in range(o.shape.b) if C[v.x][y] < C[v.x][v.y]}
    return px, py


def _prefix_max(order_rows: list, ranks: np.ndarray) -> np.ndarray:
    """``M[s, k, t]`` = max over the ``k`` lowest-ranked entries of line ``s`` of line ``t``'s ranks."""
    order = np.asarray(order_rows)  # (lines, width)
    nlines, width = order.shape
    g = ranks[:, order].transpose(1, 2, 0)  # g[s, p, t] = ranks[t, order[s, p]]
    pm = np.maximum.accumulate(g, axis=1)
    out = np.full((nlines, width + 1, nlines), -1, dtype=np.int64)
    out[:, 1:, :] = pm
    return out


def _lemma_pivot_containment(o: GridOrientation, reach: list[int], block: int = 512) -> LemmaResult:
    """For all ``w`` not reaching ``v``: ``Phi_X(v) >= Phi_X(w)`` or ``Phi_Y(v) >= Phi_Y(w)``."""
    a, b = o.shape.a, o.shape.b
    V = a * b
    xs = np.tile(np.arange(a), b)
    ys = np.repeat(np.arange(b), a)
    k = o.row_rank[ys, xs]
    l = o.col_rank[xs, ys]
    MX = _prefix_max(o.row_order, o.row_rank)  # rows: line index y, entries x
    MY = _prefix_max(o.col_order, o.col_rank)  # columns: line index x, entries y
    nbytes = (V + 7) // 8
    for start in range(0, V, block):
        ws = np.arange(start, min(V, start + block))
        # Phi_X(w) within row y_v is ranked below k_v exactly when the prefix max is
        cx = MX[ys[ws], k[ws]][:, ys] < k[None, :]
        cy = MY[xs[ws], l[ws]][:, xs] < l[None, :]
        raw = b"".join(reach[int(w)].to_bytes(nbytes, "little") for w in ws)
        rb = np.unpackbits(np.frombuffer(raw, dtype=np.uint8).reshape(len(ws), nbytes), axis=1, bitorder="little")
        bad = ~(cx | cy | rb[:, :V].astype(bool))
        if bad.any():
            wi, vi = np.argwhere(bad)[0]
            w, v = int(ws[wi]), int(vi)
            return LemmaResult(
                "c", False, V * V, f"w=({w % a},{w // a}) v=({v % a},{v // a}): neither outmap side contains w's"
            )
    return LemmaResult("c", True, V * V)


def check_lemmas(o: GridOrientation, chain: MilestoneChain, order=None, reach=None) -> LemmaReport:
    cyc = check_acyclic(o)
    if not cyc.acyclic:
        cx = " -> ".join(f"({v.x},{v.y})" for v in cyc.cycle)
        fail = LemmaResult("e", False, 1, f"cycle {cx}")
        return LemmaReport(tuple(LemmaResult(n, False, 0, "orientation is cyclic") for n in "abcd") + (fail,))
    if order is None:
        order = require_acyclic(o)
    if reach is None:
        reach = reach_closure(o, order)
    results = []

    checked, bad = 0, None
    for i in range(1, chain.L + 1):
        px, py = _phi_sets(o, chain.w[i])
        for y in sorted(py):
            for x in sorted(px):
                checked += 1
                if bad is None and Vertex(x, y) not in chain.W[i]:
                    bad = f"i={i} v=({x},{y}) spans Phi(w^i) but is not in W^i"
    results.append(LemmaResult("a", bad is None, checked, bad))

    checked, bad = 0, None
    for i in range(1, chain.L + 1):
        px, py = _phi_sets(o, chain.w[i])
        for v in sorted(chain.W[i], key=lambda u: (u.y, u.x)):
            checked += 1
            if bad is None and v.x not in px and v.y not in py:
                bad = f"i={i} v=({v.x},{v.y}) in W^i misses Phi(w^i)"
    results.append(LemmaResult("b", bad is None, checked, bad))

    results.append(_lemma_pivot_containment(o, reach))

    checked, bad = 0, None
    for i in range(0, chain.L):
        hx, hy = _phi_sets(o, chain.w[i + 1])
        lx, ly = _phi_sets(o, chain.w[i])
        size = len(hx | lx) + len(hy | ly)
        checked += 1
        if bad is None and 2 * size > 5 * (1 << i):  # size <= 5 * 2**(i-1)
            bad = f"i={i} |Phi(w^(i+1)) u Phi(w^i)| = {size} > {Fraction(5 * (1 << i), 2)}"
    results.append(LemmaResult("d", bad is None, checked, bad))

    results.append(LemmaResult("e", True, 1))
    return LemmaReport(tuple(results))


@dataclass(frozen=True)
class TransitionBound:
    index: int
    max_hitting: object
    argmax_hitting: Vertex | None
    max_sigma: object
    argmax_sigma: Vertex | None


@dataclass(frozen=True)
class BoundReport:
    n: int
    L: int
    transitions: tuple  # TransitionBound, index L-1 down to 0
    hitting_bound: Fraction
    sigma_bound: Fraction
    max_expected_steps: object
    argmax_expected_steps: Vertex
    max_first_milestone: object
    exact: bool = True
    demoted: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def max_transition(self):
        return max((t.max_hitting for t in self.transitions), default=0)

    @property
    def max_sigma(self):
        return max((t.max_sigma for t in self.transitions), default=0)

    @property
    def transitions_ok(self) -> bool:
        return all(t.max_hitting <= self.hitting_bound for t in self.transitions)

    @property
    def sigma_ok(self) -> bool:
        return all(t.max_sigma <= self.sigma_bound for t in self.transitions)

    @property
    def ok(self) -> bool:
        return self.transitions_ok and self.sigma_ok


def _argmax(values: list, members) -> tuple:
    best, arg = None, None
    for v in members:
        if best is None or values[v] > best:
            best, arg = values[v], v
    return best, arg


def verify_bounds(o: GridOrientation, chain: MilestoneChain, exact: bool = True, order=None) -> BoundReport:
    a = o.shape.a
    if order is None:
        order = require_acyclic(o)
    zero = Fraction(0) if exact else 0.0
    masks = [_as_mask(o, W) for W in chain.W]
    transitions = []
    for i in range(chain.L - 1, -1, -1):
        hit = hitting_time_flat(o, masks[i], exact, order)
        upper = [v for v in range(a * o.shape.b) if masks[i + 1][v] and not masks[i][v]]
        h_max, h_arg = _argmax(hit, upper)
        sig = sigma_flat(o, chain, i, exact, order)
        s_max, s_arg = _argmax(sig, [v for v in range(len(sig)) if masks[i + 1][v]])
        transitions.append(
            TransitionBound(
                i,
                h_max if h_max is not None else zero,
                Vertex(h_arg % a, h_arg // a) if h_arg is not None else None,
                s_max if s_max is not None else zero,
                Vertex(s_arg % a, s_arg // a) if s_arg is not None else None,
            )
        )
    steps = expected_steps_flat(o, exact, order)
    e_max, e_arg = _argmax(steps, range(len(steps)))
    first = hitting_time_flat(o, masks[chain.L], exact, order)
    return BoundReport(
        n=o.shape.n,
        L=chain.L,
        transitions=tuple(transitions),
        hitting_bound=hitting_bound(o.shape.n),
        sigma_bound=sigma_bound(o.shape.n),
        max_expected_steps=e_max,
        argmax_expected_steps=Vertex(e_arg % a, e_arg // a),
        max_first_milestone=max(first),
        exact=exact,
        demoted=chain.demoted,
    )


def format_value(val) -> str:
    """Rationals as ``numerator/denominator``; floats with repr precision."""
    if isinstance(val, Fraction):
        return f"{val.numerator}/{val.denominator}"
    return repr(val)
