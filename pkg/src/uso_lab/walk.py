"""Random-Edge walks in pivot form, with stopping-time instrumentation.

At a non-sink vertex ``v`` the walk draws a pivot uniformly from the outmap
``Phi(v)`` and swaps the matching coordinate of ``v``.  At the global sink the
pivot is the terminal marker :data:`DIAMOND`.  A :class:`WalkTrace` stores
only real moves; instrumentation extends it with terminal pivots (the
position stays at the sink) as far as the stopping times require.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

from .analyze import MilestoneChain
from .errors import CyclicityError, InputError, ParseError, PivotError, TerminalError
from .grid import GridOrientation, Vertex, facet_id
from .rng import derive_seed, make_rng, trial_rng


class Pivot(NamedTuple):
    side: str  # "X", "Y", or "D" for the terminal marker
    index: int

    @property
    def terminal(self) -> bool:
        return self.side == "D"


DIAMOND = Pivot("D", -1)


@dataclass(frozen=True)
class WalkTrace:
    start: Vertex
    positions: tuple  # v_0 .. v_T
    pivots: tuple  # h_1 .. h_T
    seed: int
    terminated: bool

    @property
    def length(self) -> int:
        return len(self.pivots)

    def pivot_at(self, k: int) -> Pivot:
        """``h_k`` for ``k >= 1``; terminal once the walk has stopped."""
        if k <= len(self.pivots):
            return self.pivots[k - 1]
        if not self.terminated:
            raise InputError("trace was cut before reaching the sink")
        return DIAMOND

    def position_at(self, k: int) -> Vertex:
        return self.positions[min(k, len(self.pivots))]


@dataclass(frozen=True)
class StoppingTimes:
    milestone_index: int
    sigma: int
    taus: tuple  # tau_1, tau_2, ... (at least up to tau_3 and tau_N)
    n_hits: int
    e1: bool
    e2: bool
    e3: bool
    xi: str | None
    adjacency_ok: bool
    hit_time: int


@dataclass(frozen=True)
class WalkStats:
    trials: int
    mean: float
    variance: float
    min: int
    max: int
    histogram: dict

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.trials)

    def records(self) -> dict:
        return {
            "trials": self.trials,
            "mean": self.mean,
            "variance": self.variance,
            "stderr": self.stderr,
            "min": self.min,
            "max": self.max,
            "histogram": " ".join(f"{k}:{v}" for k, v in sorted(self.histogram.items())),
        }


def pick_pivot(o: GridOrientation, v: Vertex, rng) -> Pivot:
    x, y = v
    i, j = o.rows[y][x], o.cols[x][y]
    m = i + j
    if m == 0:
        return DIAMOND
    r = rng.randrange(m)
    if r < i:
        return Pivot("X", o.row_order[y][r])
    return Pivot("Y", o.col_order[x][r - i])


def in_outmap(o: GridOrientation, v: Vertex, h: Pivot) -> bool:
    x, y = v
    if h.side == "X":
        return 0 <= h.index < o.shape.a and o.rows[y][h.index] < o.rows[y][x]
    if h.side == "Y":
        return 0 <= h.index < o.shape.b and o.cols[x][h.index] < o.cols[x][y]
    return False


def step(o: GridOrientation, v: Vertex, h: Pivot) -> Vertex:
    if h.terminal:
        raise TerminalError("the terminal pivot does not move the walk")
    if not in_outmap(o, v, h):
        raise PivotError(f"pivot {h.side}{h.index} is not in the outmap of ({v.x},{v.y})")
    return Vertex(h.index, v.y) if h.side == "X" else Vertex(v.x, h.index)


def _walk(o: GridOrientation, v0: Vertex, rng):
    a, b = o.shape.a, o.shape.b
    R, C = o.rows, o.cols
    row_order, col_order = o.row_order, o.col_order
    cap = a * b - 1
    x, y = v0
    positions = [Vertex(x, y)]
    pivots = []
    while True:
        i, j = R[y][x], C[x][y]
        m = i + j
        if m == 0:
            return positions, pivots
        if len(pivots) >= cap:
            raise CyclicityError(f"walk from ({v0.x},{v0.y}) exceeded {cap} steps; orientation is not a USO")
        r = rng.randrange(m)
        if r < i:
            x = row_order[y][r]
            pivots.append(Pivot("X", x))
        else:
            y = col_order[x][r - i]
            pivots.append(Pivot("Y", y))
        positions.append(Vertex(x, y))


def _walk_length(o: GridOrientation, v0: Vertex, rng) -> int:
    R, C = o.rows, o.cols
    row_order, col_order = o.row_order, o.col_order
    cap = o.shape.a * o.shape.b - 1
    randrange = rng.randrange
    x, y = v0
    steps = 0
    while True:
        i = R[y][x]
        m = i + C[x][y]
        if m == 0:
            return steps
        if steps >= cap:
            raise CyclicityError(f"walk from ({v0.x},{v0.y}) exceeded {cap} steps; orientation is not a USO")
        r = randrange(m)
        if r < i:
            x = row_order[y][r]
        else:
            y = col_order[x][r - i]
        steps += 1


def run_walk(o: GridOrientation, v0: Vertex, seed: int) -> WalkTrace:
    o.shape.check(v0)
    positions, pivots = _walk(o, Vertex(*v0), make_rng(seed))
    return WalkTrace(Vertex(*v0), tuple(positions), tuple(pivots), seed, True)


def summarize(lengths: list) -> WalkStats:
    if not lengths:
        raise InputError("need at least one trial")
    n = len(lengths)
    mean = sum(lengths) / n
    var = sum((t - mean) ** 2 for t in lengths) / (n - 1) if n > 1 else 0.0
    return WalkStats(n, mean, var, min(lengths), max(lengths), dict(sorted(Counter(lengths).items())))


def walk_lengths(o: GridOrientation, v0: Vertex, trials: int, seed: int) -> list[int]:
    """Length of trial ``t`` uses the stream ``derive_seed(seed, t)``, so any subset is reproducible."""
    o.shape.check(v0)
    v0 = Vertex(*v0)
    return [_walk_length(o, v0, trial_rng(seed, t)) for t in range(trials)]


def monte_carlo(o: GridOrientation, v0: Vertex, trials: int, seed: int) -> WalkStats:
    if trials < 1:
        raise InputError("trials must be at least 1")
    return summarize(walk_lengths(o, v0, trials, seed))


def _pivot_sets(o: GridOrientation, w: Vertex) -> frozenset:
    x, y = w
    px = [Pivot("X", x2) for x2 in range(o.shape.a) if o.rows[y][x2] < o.rows[y][x]]
    py = [Pivot("Y", y2) for y2 in range(o.shape.b) if o.cols[x][y2] < o.cols[x][y]]
    return frozenset(px + py)


def instrument_trace(o: GridOrientation, trace: WalkTrace, chain: MilestoneChain, i: int) -> StoppingTimes:
    """Stopping times and events for the transition from ``W^{i+1}`` to ``W^i``."""
    if not 0 <= i <= chain.L - 1:
        raise InputError(f"milestone index {i} outside 0..{chain.L - 1}")
    upper, lower = chain.W[i + 1], chain.W[i]
    if trace.start not in upper:
        raise InputError(f"trace start ({trace.start.x},{trace.start.y}) is not in W^{i + 1}")
    phi_up = _pivot_sets(o, chain.w[i + 1])
    phi_low = _pivot_sets(o, chain.w[i])
    watched = phi_up | phi_low

    sigma = 1
    while True:
        h = trace.pivot_at(sigma)
        if h.terminal or h in phi_up:
            break
        sigma += 1
    sides = {trace.pivots[k].side for k in range(sigma - 1)}
    adjacency_ok = len(sides) <= 1

    hit_time = 0
    while trace.position_at(hit_time) not in lower:
        hit_time += 1

    # tau_0 = 0; N may be 0 when the walk starts inside W^i
    taus = []
    n_hits = 0 if trace.position_at(0) in lower else None
    k = 0
    while n_hits is None or len(taus) < 3:
        k += 1
        h = trace.pivot_at(k)
        if h.terminal or h in watched:
            taus.append(k)
            if n_hits is None and trace.position_at(k) in lower:
                n_hits = len(taus)

    def hit(j: int) -> bool:
        return trace.position_at(taus[j - 1]) in lower

    h1, h2 = trace.pivot_at(taus[0]), trace.pivot_at(taus[1])
    e1 = hit(1) or h1 in phi_low
    xi = None if h1.terminal else ("Y" if h1.side == "X" else "X")
    e2 = hit(2) or (xi is not None and h2.side == xi and h2 in phi_low)
    e3 = hit(3)
    return StoppingTimes(i, sigma, tuple(taus), n_hits, e1, e2, e3, xi, adjacency_ok, hit_time)


def format_trace(o: GridOrientation, trace: WalkTrace) -> str:
    """One line per pivot: ``k x y side facet``; the terminal pivot is ``D -``."""
    lines = []
    for k, h in enumerate(trace.pivots, start=1):
        v = trace.positions[k - 1]
        lines.append(f"{k} {v.x} {v.y} {h.side} {facet_id(o.shape, h.side, h.index)}")
    if trace.terminated:
        v = trace.positions[-1]
        lines.append(f"{len(trace.pivots) + 1} {v.x} {v.y} D -")
    return "\n".join(lines) + "\n"


def parse_trace(o: GridOrientation, text: str, seed: int = 0) -> WalkTrace:
    """Inverse of :func:`format_trace`; every move is re-checked against ``o``."""
    a = o.shape.a
    positions, pivots = [], []
    terminated = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if terminated:
            raise ParseError("data after the terminal pivot", lineno)
        parts = s.split()
        if len(parts) != 5:
            raise ParseError("expected 'k x y side facet'", lineno)
        try:
            k, x, y = (int(t) for t in parts[:3])
        except ValueError:
            raise ParseError("non-integer step or coordinate", lineno) from None
        if k != len(pivots) + 1:
            raise ParseError(f"step {k} out of sequence", lineno, "k")
        v = Vertex(x, y)
        if positions and v != positions[-1]:
            raise ParseError("position does not follow from the previous pivot", lineno)
        if not positions:
            o.shape.check(v)
            positions.append(v)
        side, fid = parts[3], parts[4]
        if side == "D":
            if fid != "-":
                raise ParseError("terminal pivot must be 'D -'", lineno)
            if o.rows[y][x] + o.cols[x][y] != 0:
                raise ParseError("terminal pivot away from a sink", lineno)
            terminated = True
            continue
        if side not in ("X", "Y"):
            raise ParseError(f"unknown pivot side {side!r}", lineno, "side")
        try:
            idx = int(fid) - (a if side == "Y" else 0)
        except ValueError:
            raise ParseError("non-integer facet", lineno, "facet") from None
        h = Pivot(side, idx)
        try:
            positions.append(step(o, v, h))
        except PivotError as exc:
            raise ParseError(str(exc), lineno) from None
        pivots.append(h)
    if not positions:
        raise ParseError("empty trace")
    return WalkTrace(positions[0], tuple(positions), tuple(pivots), seed, terminated)


@dataclass
class ClaimCounts:
    """Pooled event counts for one milestone transition."""

    index: int
    starts: int = 0
    traces: int = 0
    e1: int = 0
    e1e2: int = 0
    e1e2e3: int = 0
    n_total: int = 0
    sigma_total: int = 0
    adjacency_violations: int = 0
    e3_mismatch: int = 0

    @staticmethod
    def _freq(hits: int, trials: int) -> tuple[float, float]:
        if trials == 0:
            return float("nan"), float("nan")
        p = hits / trials
        return p, math.sqrt(p * (1 - p) / trials)

    @property
    def pr_e1(self):
        return self._freq(self.e1, self.traces)

    @property
    def pr_e2_given_e1(self):
        return self._freq(self.e1e2, self.e1)

    @property
    def pr_e3_given_e1e2(self):
        return self._freq(self.e1e2e3, self.e1e2)

    @property
    def mean_n(self) -> float:
        return self.n_total / self.traces if self.traces else float("nan")

    def frequencies(self) -> list[tuple[str, float, float, int]]:
        return [
            ("Pr[E1]", *self.pr_e1, self.traces),
            ("Pr[E2|E1]", *self.pr_e2_given_e1, self.e1),
            ("Pr[E3|E1,E2]", *self.pr_e3_given_e1e2, self.e1e2),
        ]

    def claims_hold(self, threshold: float = 0.2, z: float = 3.0) -> bool:
        """Each frequency with data is at least ``threshold - z * stderr``."""
        for _, p, se, trials in self.frequencies():
            if trials and p < threshold - z * se:
                return False
        return True

    def records(self) -> dict:
        out = {"index": self.index, "starts": self.starts, "traces": self.traces}
        for name, p, se, trials in self.frequencies():
            out[name] = f"{p:.6f} +- {se:.6f} (n={trials})"
        out["mean_N"] = self.mean_n
        out["adjacency_violations"] = self.adjacency_violations
        return out


def sample_starts(candidates: list, cap: int, seed: int) -> list:
    """All candidates if at most ``cap``, else a seeded sample kept in sorted order."""
    candidates = sorted(candidates, key=lambda v: (v.y, v.x))
    if len(candidates) <= cap:
        return candidates
    picked = make_rng(seed).sample(range(len(candidates)), cap)
    return [candidates[k] for k in sorted(picked)]


def claim_statistics(
    o: GridOrientation,
    chain: MilestoneChain,
    trials_per_start: int,
    seed: int,
    max_starts: int = 4096,
    min_traces: int = 0,
) -> list[ClaimCounts]:
    """Instrumented walks from every start in ``W^{i+1} - W^i``, pooled per index ``i``.

    ``min_traces`` raises the per-start count for an index so that it gets at
    least that many traces in total.
    """
    if trials_per_start < 1:
        raise InputError("trials must be at least 1")
    out = []
    stream = 0
    for i in range(chain.L - 1, -1, -1):
        counts = ClaimCounts(i)
        starts = sample_starts(list(chain.W[i + 1] - chain.W[i]), max_starts, derive_seed(seed, i))
        counts.starts = len(starts)
        per_start = max(trials_per_start, -(-min_traces // max(len(starts), 1)))
        for v0 in starts:
            for _ in range(per_start):
                trace = run_walk(o, v0, derive_seed(seed, (1 << 32) + stream))
                stream += 1
                st = instrument_trace(o, trace, chain, i)
                counts.traces += 1
                counts.n_total += st.n_hits
                counts.sigma_total += st.sigma
                counts.adjacency_violations += not st.adjacency_ok
                counts.e3_mismatch += st.e3 != (st.n_hits <= 3)
                if st.e1:
                    counts.e1 += 1
                    if st.e2:
                        counts.e1e2 += 1
                        if st.e3:
                            counts.e1e2e3 += 1
        out.append(counts)
    return out


def bernoulli_hitting_samples(p: float, k: int, runs: int, seed: int):
    """Trials needed for ``k`` successes in a row, ``runs`` independent times.

    Vectorised over runs; returns a numpy int64 array.  The mean estimates
    :func:`uso_lab.analyze.bernoulli_hitting_expectation`.
    """
    import numpy as np

    if not 0 < p <= 1 or k < 1 or runs < 1:
        raise InputError("need 0 < p <= 1, k >= 1 and runs >= 1")
    rng = np.random.default_rng(seed)
    steps = np.zeros(runs, dtype=np.int64)
    streak = np.zeros(runs, dtype=np.int64)
    active = np.arange(runs)
    while len(active):
        hit = rng.random(len(active)) < p
        steps[active] += 1
        s = np.where(hit, streak[active] + 1, 0)
        streak[active] = s
        active = active[s < k]
    return steps
