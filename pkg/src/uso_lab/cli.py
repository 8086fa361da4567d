"""``uso-lab`` command line.

Every subcommand prints ``key: value`` records (or one JSON document with
``--json``) and exits with 0 on success, 1 on a property violation, 2 on bad
input and 3 on an internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from . import __version__
from .analyze import check_lemmas, format_value, harmonic, milestones, topo_order, verify_bounds
from .errors import InputError, UsoLabError
from .generate import GenConfig, dumps, generate, load
from .grid import GridShape, Vertex
from .scaling import ExperimentConfig, run_experiment, summarize, to_csv, to_svg
from .validate import check_acyclic, require_acyclic, validate_uso, validate_uso_bruteforce
from .walk import claim_statistics, format_trace, monte_carlo, run_walk


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _jsonable(val):
    if isinstance(val, Fraction):
        return format_value(val)
    if isinstance(val, Vertex):
        return [val.x, val.y]
    if isinstance(val, float) and not math.isfinite(val):
        return str(val)
    return val


class Output:
    """Collects records and renders them as text or JSON."""

    def __init__(self, as_json: bool, stream=None):
        self.as_json = as_json
        self.stream = stream or sys.stdout
        self.sections = []

    def add(self, name: str, record: dict) -> None:
        self.sections.append((name, record))

    def flush(self) -> None:
        if self.as_json:
            doc = {}
            for name, rec in self.sections:
                doc.setdefault(name, []).append({k: _jsonable(v) for k, v in rec.items()})
            json.dump(doc, self.stream, indent=2, sort_keys=False)
            self.stream.write("\n")
            return
        for name, rec in self.sections:
            self.stream.write(f"[{name}]\n")
            for k, v in rec.items():
                if isinstance(v, Fraction):
                    v = format_value(v)
                elif isinstance(v, bool):
                    v = str(v).lower()
                elif isinstance(v, Vertex):
                    v = f"{v.x},{v.y}"
                self.stream.write(f"{k}: {v}\n")
        self.stream.flush()


def _parse_vertex(text: str) -> Vertex:
    try:
        x, y = (int(t) for t in text.split(","))
    except ValueError:
        raise InputError(f"vertex must look like x,y, got {text!r}") from None
    return Vertex(x, y)


def _value(v, exact: bool):
    return format_value(v) if exact else float(v)


# -- subcommands ------------------------------------------------------------


def cmd_generate(args, out: Output) -> int:
    shape = GridShape.parse(args.shape)
    cfg = GenConfig(kind=args.kind, seed=args.seed, max_tries=args.max_tries, steps=args.steps)
    o = generate(shape, cfg)
    text = dumps(o, comment=f"kind={args.kind} seed={args.seed} shape={shape}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    out.add("generate", {"shape": str(shape), "kind": args.kind, "seed": args.seed,
                         "sink": o.sink if validate_uso(o).is_uso else "none", "out": args.out or "-"})
    if not args.out:
        out.stream = sys.stderr
    return 0


def cmd_validate(args, out: Output) -> int:
    o = load(args.path)
    rep = validate_uso_bruteforce(o) if args.brute_force else validate_uso(o)
    rec = {"shape": str(o.shape), **rep.records()}
    if rep.is_uso or args.acyclic:
        cyc = check_acyclic(o)
        rec["acyclic"] = cyc.acyclic
        rec["cycle"] = " ".join(f"({v.x},{v.y})" for v in cyc.cycle) if cyc.cycle else "none"
        if not cyc.acyclic and rep.is_uso:
            out.add("validate", rec)
            return 1
    out.add("validate", rec)
    return 0 if rep.is_uso else 1


def _require_uso(o):
    rep = validate_uso(o)
    if not rep.is_uso:
        from .errors import InvalidUsoError

        raise InvalidUsoError(f"not a USO: {rep.witness}")
    return require_acyclic(o)


def cmd_walk(args, out: Output) -> int:
    o = load(args.path)
    order = _require_uso(o)
    if args.start is None:
        v0 = topo_order(o)[-1]
    else:
        v0 = _parse_vertex(args.start)
        o.shape.check(v0)
    stats = monte_carlo(o, v0, args.trials, args.seed)
    out.add("walk", {"shape": str(o.shape), "start": v0, "seed": args.seed, **stats.records()})
    if args.exact:
        from .analyze import expected_steps_flat

        e = expected_steps_flat(o, True, order)[o.shape.index(v0)]
        z = (stats.mean - float(e)) / stats.stderr if stats.stderr > 0 else 0.0
        out.add("exact", {"expected_steps": e, "expected_steps_float": float(e), "z_score": z})
    if args.trace:
        trace = run_walk(o, v0, args.seed)
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(format_trace(o, trace))
    return 0


def cmd_exact(args, out: Output) -> int:
    o = load(args.path)
    order = _require_uso(o)
    chain = milestones(o)
    exact = not args.float
    show_all = not (args.milestones or args.lemmas or args.bounds)
    code = 0
    if args.milestones or show_all:
        rec = {"shape": str(o.shape), "n": o.shape.n, "L": chain.L, "demoted": chain.demoted}
        for i, w in enumerate(chain.w):
            rec[f"w{i}"] = w
            rec[f"W{i}_size"] = len(chain.W[i])
        out.add("milestones", rec)
    if args.lemmas or show_all:
        rep = check_lemmas(o, chain, order=order)
        for r in rep.records():
            out.add("lemma", r)
        if not rep.all_passed:
            code = 1
    if args.bounds or show_all:
        br = verify_bounds(o, chain, exact=exact, order=order)
        out.add("bounds", {
            "n": br.n,
            "L": br.L,
            "hitting_bound": _value(br.hitting_bound, exact),
            "sigma_bound": _value(br.sigma_bound, exact),
            "max_expected_steps": _value(br.max_expected_steps, exact),
            "max_expected_steps_float": float(br.max_expected_steps),
            "argmax_expected_steps": br.argmax_expected_steps,
            "max_first_milestone": _value(br.max_first_milestone, exact),
            "transitions_ok": br.transitions_ok,
            "sigma_ok": br.sigma_ok,
        })
        for t in br.transitions:
            out.add("transition", {
                "index": t.index,
                "max_hitting": _value(t.max_hitting, exact),
                "max_hitting_float": float(t.max_hitting),
                "argmax_hitting": t.argmax_hitting if t.argmax_hitting else "none",
                "max_sigma": _value(t.max_sigma, exact),
                "argmax_sigma": t.argmax_sigma if t.argmax_sigma else "none",
            })
        if not br.ok:
            code = 1
    return code


def cmd_claims(args, out: Output) -> int:
    o = load(args.path)
    _require_uso(o)
    chain = milestones(o)
    counts = claim_statistics(o, chain, args.trials, args.seed, max_starts=args.max_starts)
    code = 0
    for c in counts:
        rec = c.records()
        rec["N_reference"] = 155
        rec["claims_hold"] = c.claims_hold()
        out.add("claims", rec)
        if c.adjacency_violations or not c.claims_hold() or c.mean_n > 155:
            code = 1
    if not counts:
        out.add("claims", {"L": chain.L, "note": "no milestone transitions on this shape"})
    return code


def _shapes(args) -> list[GridShape]:
    shapes = [GridShape.parse(s) for s in args.shapes.split(",")] if args.shapes else []
    if args.sizes:
        for tok in args.sizes.split(","):
            n = int(tok)
            if n % 2:
                raise InputError(f"square size n={n} must be even (n = a + b)")
            shapes.append(GridShape(n // 2, n // 2))
    if not shapes:
        raise InputError("give --shapes or --sizes")
    return shapes


def cmd_scaling(args, out: Output) -> int:
    if args.seeds < 1:
        raise InputError("--seeds must be positive")
    cfg = ExperimentConfig(
        shapes=tuple(_shapes(args)),
        kind=args.kind,
        seeds=tuple(range(args.seed, args.seed + args.seeds)),
        steps=args.steps,
        exact=not args.float,
        csv_path=args.csv,
        svg_path=args.svg,
    )
    rows = run_experiment(cfg)
    summary = summarize(rows)
    if cfg.csv_path:
        with open(cfg.csv_path, "w", encoding="utf-8") as fh:
            fh.write(to_csv(rows))
    else:
        out.stream.write(to_csv(rows))
    if cfg.svg_path:
        with open(cfg.svg_path, "w", encoding="utf-8") as fh:
            fh.write(to_svg(rows, summary.global_c))
    out.add("scaling", {
        "rows": len(rows),
        "failed_rows": len(summary.failed_rows),
        "bound_violations": len(summary.bound_violations),
        "fitted_c": summary.global_c,
        "fit_ratios": " ".join(f"{q:.4f}" for q in summary.ratios),
        "stable": summary.stable,
    })
    for n, c in summary.fits.items():
        out.add("fit", {"n": n, "c": c, "H_n": float(harmonic(n))})
    for r in summary.failed_rows:
        out.add("row_error", {"n": r.n, "seed": r.seed, "error": r.error})
    return 1 if summary.failed_rows or summary.bound_violations else 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uso-lab", description="Grid unique sink orientations and the Random-Edge walk.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON document instead of key: value lines")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="generate a USO")
    g.add_argument("--shape", required=True, help="AxB, both at least 2")
    g.add_argument("--kind", choices=["linear", "rejection", "flip"], default="linear")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--steps", type=int, default=1000, help="flip-chain steps")
    g.add_argument("--max-tries", type=int, default=1_000_000, help="rejection sampling budget")
    g.add_argument("--out", help="output file (default: stdout)")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", parents=[common], help="check that a file holds a USO")
    v.add_argument("path")
    v.add_argument("--brute-force", action="store_true", help="enumerate every face (small grids only)")
    v.add_argument("--acyclic", action="store_true", help="also check acyclicity when the USO test fails")
    v.set_defaults(func=cmd_validate)

    w = sub.add_parser("walk", parents=[common], help="Monte Carlo Random-Edge walks")
    w.add_argument("path")
    w.add_argument("--start", help="x,y (default: the vertex furthest from the sink in topological order)")
    w.add_argument("--trials", type=int, default=1000)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--exact", action="store_true", help="compare against the exact expectation")
    w.add_argument("--trace", help="write the trace of one walk (seeded with --seed) here")
    w.set_defaults(func=cmd_walk)

    e = sub.add_parser("exact", parents=[common], help="milestones, lemma checks and exact bounds")
    e.add_argument("path")
    e.add_argument("--milestones", action="store_true")
    e.add_argument("--lemmas", action="store_true")
    e.add_argument("--bounds", action="store_true")
    e.add_argument("--float", action="store_true", help="floating point instead of exact rationals")
    e.set_defaults(func=cmd_exact)

    c = sub.add_parser("claims", parents=[common], help="empirical frequencies of the walk events")
    c.add_argument("path")
    c.add_argument("--trials", type=int, default=100, help="instrumented walks per start")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--max-starts", type=int, default=4096)
    c.set_defaults(func=cmd_claims)

    s = sub.add_parser("scaling", parents=[common], help="max E[T] against log^2 n")
    s.add_argument("--shapes", help="comma separated AxB list")
    s.add_argument("--sizes", help="comma separated even n; each gives an (n/2)x(n/2) grid")
    s.add_argument("--kind", choices=["linear", "rejection", "flip"], default="linear")
    s.add_argument("--seeds", type=int, default=20, help="number of seeds per shape")
    s.add_argument("--seed", type=int, default=0, help="first seed")
    s.add_argument("--steps", type=int, default=1000)
    s.add_argument("--float", action="store_true")
    s.add_argument("--csv", help="CSV path (default: stdout)")
    s.add_argument("--svg", help="SVG chart path")
    s.set_defaults(func=cmd_scaling)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    out = Output(False)
    try:
        args = parser.parse_args(argv)
        out.as_json = getattr(args, "json", False)
        code = args.func(args, out)
    except UsoLabError as exc:
        print(f"uso-lab: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"uso-lab: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal exit code
        print(f"uso-lab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
