"""Scaling experiment: max expected walk length against log^2 n.

Rows are computed independently (one orientation and seed each) and may run
in worker processes; the CSV is always assembled in ``(n, a, b, seed)`` order.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .analyze import HITTING_CONSTANT, harmonic, milestones, verify_bounds
from .errors import InputError, UsoLabError
from .generate import GenConfig, generate
from .grid import GridShape
from .validate import require_acyclic, validate_uso

CSV_HEADER = "# uso-lab scaling v1"
CSV_COLUMNS = ["n", "a", "b", "seed", "kind", "maxET", "refBound", "L", "maxSigma", "maxTransition"]


@dataclass(frozen=True)
class ExperimentConfig:
    shapes: tuple
    kind: str = "linear"
    seeds: tuple = tuple(range(20))
    steps: int = 1000
    exact: bool = True
    csv_path: str | None = None
    svg_path: str | None = None
    report_path: str | None = None

    def __post_init__(self):
        if not self.shapes:
            raise InputError("experiment needs at least one shape")
        if not self.seeds:
            raise InputError("experiment needs at least one seed")
        for s in self.shapes:
            if not isinstance(s, GridShape):
                raise InputError(f"not a grid shape: {s!r}")


@dataclass(frozen=True)
class ScalingRow:
    n: int
    a: int
    b: int
    seed: int
    kind: str
    max_et: float
    ref_bound: float
    L: int
    max_sigma: float
    max_transition: float
    transitions: tuple = ()
    transition_bound: float = 0.0
    transitions_ok: bool = True
    sigma_ok: bool = True
    error: str | None = None

    @property
    def fitted_c(self) -> float:
        return self.max_et / math.log(self.n) ** 2

    @property
    def within_reference(self) -> bool:
        return self.error is None and self.max_et <= self.ref_bound

    def csv_values(self) -> list:
        return [self.n, self.a, self.b, self.seed, self.kind, self.max_et, self.ref_bound, self.L,
                self.max_sigma, self.max_transition]


def reference_bound(n: int, L: int) -> float:
    """``155 (H_n + 1) (L + 2)``: L transitions, the first milestone, and slack for it."""
    return float(HITTING_CONSTANT * (harmonic(n) + 1) * (L + 2))


def compute_row(shape: GridShape, seed: int, kind: str = "linear", steps: int = 1000, exact: bool = True) -> ScalingRow:
    try:
        o = generate(shape, GenConfig(kind=kind, seed=seed, steps=steps))
        rep = validate_uso(o)
        if not rep.is_uso:
            raise UsoLabError(f"generator produced a non-USO: {rep.witness}")
        order = require_acyclic(o)
        chain = milestones(o)
        br = verify_bounds(o, chain, exact=exact, order=order)
    except UsoLabError as exc:
        return ScalingRow(shape.n, shape.a, shape.b, seed, kind, math.nan, math.nan, 0, math.nan, math.nan,
                          error=f"{type(exc).__name__}: {exc}")
    return ScalingRow(
        n=shape.n,
        a=shape.a,
        b=shape.b,
        seed=seed,
        kind=kind,
        max_et=float(br.max_expected_steps),
        ref_bound=reference_bound(shape.n, chain.L),
        L=chain.L,
        max_sigma=float(br.max_sigma),
        max_transition=float(br.max_transition),
        transitions=tuple(float(t.max_hitting) for t in br.transitions),
        transition_bound=float(br.hitting_bound),
        transitions_ok=br.transitions_ok,
        sigma_ok=br.sigma_ok,
    )


def _row_job(args):
    return compute_row(*args)


def worker_count() -> int:
    raw = os.environ.get("USO_LAB_THREADS", "0")
    try:
        k = int(raw)
    except ValueError:
        raise InputError(f"USO_LAB_THREADS must be an integer, got {raw!r}") from None
    if k < 0:
        raise InputError("USO_LAB_THREADS must be non-negative")
    return k or (os.cpu_count() or 1)


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> list[ScalingRow]:
    jobs = [(s, seed, config.kind, config.steps, config.exact) for s in config.shapes for seed in config.seeds]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row_job, jobs))
    else:
        rows = [_row_job(j) for j in jobs]
    return sorted(rows, key=lambda r: (r.n, r.a, r.b, r.seed))


def fit_constant(rows) -> float:
    """Least-squares ``c`` in ``maxET ~ c * ln(n)**2`` (no intercept)."""
    good = [r for r in rows if r.error is None]
    if not good:
        return math.nan
    sxx = sum(math.log(r.n) ** 4 for r in good)
    sxy = sum(r.max_et * math.log(r.n) ** 2 for r in good)
    return sxy / sxx


def fits_by_size(rows) -> dict:
    by_n = {}
    for r in rows:
        by_n.setdefault(r.n, []).append(r)
    return {n: fit_constant(rs) for n, rs in sorted(by_n.items())}


def fit_ratios(fits: dict, top: int = 3) -> list[float]:
    """Ratios of successive per-size fits among the ``top`` largest sizes."""
    vals = [fits[n] for n in sorted(fits)][-top:]
    return [q / p for p, q in zip(vals, vals[1:])]


def to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_values())
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def to_svg(rows, c: float, width: int = 640, height: int = 400) -> str:
    """Line chart of mean max-E[T] per n next to ``c * ln(n)**2``."""
    by_n = {}
    for r in rows:
        if r.error is None:
            by_n.setdefault(r.n, []).append(r.max_et)
    ns = sorted(by_n)
    pad = 50
    if not ns:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"></svg>\n'
    measured = [sum(by_n[n]) / len(by_n[n]) for n in ns]
    model = [c * math.log(n) ** 2 for n in ns]
    lo_x, hi_x = math.log2(ns[0]), math.log2(ns[-1])
    hi_y = max(measured + model) * 1.1 or 1.0
    span_x = (hi_x - lo_x) or 1.0

    def px(n):
        return pad + (math.log2(n) - lo_x) / span_x * (width - 2 * pad)

    def py(v):
        return height - pad - v / hi_y * (height - 2 * pad)

    def poly(vals, colour, dash=""):
        pts = " ".join(f"{px(n):.1f},{py(v):.1f}" for n, v in zip(ns, vals))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline fill="none" stroke="{colour}" stroke-width="2"{extra} points="{pts}"/>'

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        poly(measured, "#1f77b4"),
        poly(model, "#d62728", "6,4"),
    ]
    for n, v in zip(ns, measured):
        parts.append(f'<circle cx="{px(n):.1f}" cy="{py(v):.1f}" r="3" fill="#1f77b4"/>')
        parts.append(f'<text x="{px(n):.1f}" y="{height - pad + 16}" text-anchor="middle">{n}</text>')
    for k in range(5):
        v = hi_y * k / 4
        parts.append(f'<text x="{pad - 6}" y="{py(v) + 4:.1f}" text-anchor="end">{v:.1f}</text>')
    parts += [
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle">n (facets, log scale)</text>',
        f'<text x="{pad + 10}" y="{pad - 20}" fill="#1f77b4">mean over seeds of max E[T]</text>',
        f'<text x="{pad + 10}" y="{pad - 6}" fill="#d62728">{c:.4f} * ln(n)^2</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


@dataclass
class ScalingSummary:
    rows: list
    global_c: float
    fits: dict
    ratios: list = field(default_factory=list)

    @property
    def failed_rows(self) -> list:
        return [r for r in self.rows if r.error is not None]

    @property
    def bound_violations(self) -> list:
        return [r for r in self.rows if r.error is None and not (r.within_reference and r.transitions_ok and r.sigma_ok)]

    @property
    def stable(self) -> bool:
        return all(0.5 <= q <= 2.0 for q in self.ratios)


def summarize(rows) -> ScalingSummary:
    fits = fits_by_size(rows)
    return ScalingSummary(list(rows), fit_constant(rows), fits, fit_ratios(fits))
