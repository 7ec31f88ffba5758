"""Command-line entry point.

Exit codes: 0 success, 1 domain failure, 2 unreadable input,
3 orbit hit a 2-cycle (condition (i) fails), 4 step budget exhausted.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

from . import __version__, reproduce
from .contractivity import GKANNAN_BOUND, classify, grid_report
from .formats import (
    FormatError, RunManifest, digest, fmt_q, map_from_dict, read_space_doc, render_report,
    read_json, render_trace, report_to_dict, space_from_dict, trace_rows, write_witness,
)
from .maps import Outcome, discretize
from .metric import MetricError, Provenance, StructureError, sample_interval_space, validate_metric
from .search import GeneratorConfig, WitnessKind, falsify_theorem1, hunt_independence
from .solver import solve, solve_all_starts

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT, EXIT_CONDITION_I, EXIT_BUDGET = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _emit(out, args, doc: dict, human: str):
    if args.format == "structured":
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        out.write(human)


def _load_space(path):
    try:
        return space_from_dict(read_json(path))
    except (FormatError, StructureError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    except MetricError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_inputs(files: list[str], grid: int | None):
    """Resolve ``[SPACE] MAP`` into (space or None, map, piecewise map or None)."""
    if not 1 <= len(files) <= 2:
        raise InputError("expected SPACE MAP, or MAP --grid N for a piecewise map")
    try:
        map_doc = read_json(files[-1])
    except FormatError as exc:
        raise InputError(f"{files[-1]}: {exc}") from exc
    space = _load_space(files[0]) if len(files) == 2 else None
    if isinstance(map_doc, dict) and "piecewise" in map_doc:
        try:
            pw = map_from_dict(map_doc)
        except (FormatError, ValueError) as exc:
            raise InputError(f"{files[-1]}: {exc}") from exc
        if grid is not None:
            space = sample_interval_space(pw.lo, pw.hi, grid)
        elif space is None or space.provenance is not Provenance.GRID_SAMPLE or space.coords is None:
            raise InputError("piecewise maps require --grid N (or a grid-sample space file)")
        return space, None, pw
    if space is None:
        raise InputError("a table map needs a space file")
    try:
        return space, map_from_dict(map_doc, space), None
    except FormatError as exc:
        raise InputError(f"{files[-1]}: {exc}") from exc


def cmd_validate(args, out) -> int:
    try:
        doc = read_space_doc(args.space)
        report = validate_metric(doc["dist"])
        labels = [str(x) for x in doc["labels"]]
        if len(labels) != len(doc["dist"]) or len(set(labels)) != len(labels):
            raise StructureError("labels must be distinct, one per row")
    except (FormatError, StructureError) as exc:
        raise InputError(f"{args.space}: {exc}") from exc
    rows = [{"axiom": v.axiom, "points": [labels[i] for i in v.indices],
             "lhs": fmt_q(v.lhs), "rhs": fmt_q(v.rhs)} for v in report.violations]
    human = "ok\n" if report.ok else "".join(
        f"{r['axiom']}  ({', '.join(r['points'])})  {r['lhs']} vs {r['rhs']}\n" for r in rows)
    _emit(out, args, {"ok": report.ok, "violations": rows}, human)
    return EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_classify(args, out) -> int:
    space, table, pw = _load_inputs(args.files, args.grid)
    if len(space) < 3:
        sys.stderr.write("classification needs |X| >= 3 points\n")
        return EXIT_DOMAIN
    rep = grid_report(pw, space, args.workers) if pw is not None else classify(table, args.workers)
    _emit(out, args, report_to_dict(rep), render_report(rep))
    return EXIT_OK


def cmd_solve(args, out) -> int:
    space, table, pw = _load_inputs(args.files, args.grid)
    if pw is not None:
        table = discretize(pw, space)
    rep = classify(table) if len(space) >= 3 else None
    lam = rep.lambda_gkannan if rep is not None and rep.lambda_gkannan < GKANNAN_BOUND else None
    budget = args.budget or len(space)
    if args.start is not None:
        if args.start not in space.index:
            raise InputError(f"unknown start point {args.start!r}")
        results = [solve(table, space.index[args.start], budget, lam)]
    else:
        results = solve_all_starts(table, budget, lam)
    labels = space.labels
    docs, human = [], []
    for r in results:
        entry = {
            "start": labels[r.start], "outcome": r.trace.outcome.value, "steps": r.trace.steps,
            "fixed_point": None if r.fixed_point is None else labels[r.fixed_point],
            "rows": trace_rows(r, labels),
        }
        if r.certificate is not None:
            c = r.certificate
            entry["certificate"] = {"lambda": fmt_q(c.lam), "alpha": fmt_q(c.alpha), "a": fmt_q(c.a),
                                    "rate_check": r.rate_check, "tail_check": r.tail_check}
        docs.append(entry)
        head = f"start {labels[r.start]}: {r.trace.outcome.value}"
        if r.fixed_point is not None:
            head += f", fixed point {labels[r.fixed_point]} after {r.trace.steps} step(s)"
        if r.trace.outcome is Outcome.TWO_CYCLE:
            a, b = sorted(labels[i] for i in r.trace.points[-2:])
            head += f", condition (i) fails on the 2-cycle ({a}, {b})"
        human.append(head + "\n" + render_trace(r, labels))
        if r.certificate is not None:
            c = r.certificate
            human.append(f"certificate lambda={fmt_q(c.lam)} alpha={fmt_q(c.alpha)} a={fmt_q(c.a)} "
                         f"rate_check={r.rate_check} tail_check={r.tail_check}\n")
    worst = max(r.trace.steps for r in results)
    human.append(f"worst-case steps: {worst}\n")
    doc = {"results": docs, "worst_steps": worst,
           "report": None if rep is None else report_to_dict(rep)}
    if pw is not None:
        doc["discretization_delta"] = fmt_q(table.delta)
    _emit(out, args, doc, "".join(human))
    outcomes = {r.trace.outcome for r in results}
    if Outcome.TWO_CYCLE in outcomes:
        return EXIT_CONDITION_I
    if Outcome.BUDGET in outcomes:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_reproduce(args, out) -> int:
    checks = reproduce.run(args.example)
    doc = {"checks": [c.__dict__ for c in checks], "ok": all(c.ok for c in checks)}
    human = reproduce.render(checks)
    failed = [c for c in checks if not c.ok]
    if failed:
        human += "failed: " + "; ".join(f"example {c.example} {c.name}" for c in failed) + "\n"
    _emit(out, args, doc, human)
    return EXIT_OK if not failed else EXIT_DOMAIN


def cmd_hunt(args, out) -> int:
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else None
    cfg = GeneratorConfig(args.seed, args.size, args.method, args.dim, args.policy, args.k)
    outdir = Path(args.out) if args.out else None
    if args.kind == "falsify-theorem1":
        res = falsify_theorem1(cfg, args.budget, sizes or list(range(3, 11)), args.workers, outdir)
        doc = {"kind": "falsify-theorem1", "examined": res.examined, "qualifying": res.qualifying,
               "counterexamples": 0 if res.counterexample is None else 1, "reason": res.reason}
        human = (f"examined {res.examined}, meeting hypotheses {res.qualifying}, "
                 f"counterexamples {doc['counterexamples']}\n")
        _emit(out, args, doc, human)
        return EXIT_OK if res.counterexample is None else EXIT_DOMAIN
    kinds = None if args.kind == "all" else [args.kind]
    res = hunt_independence(cfg, args.budget, sizes, kinds, args.per_kind, workers=args.workers)
    written = []
    if outdir is not None:
        for rec in res.records:
            written.append(write_witness(outdir, rec).name)
    totals = {}
    for rec in res.records:
        totals[rec.kind.value] = totals.get(rec.kind.value, 0) + 1
    doc = {"examined": res.examined, "random_hits": res.counts, "records": totals, "files": written}
    human = f"examined {res.examined}\n" + "".join(
        f"{k:<40} random hits {res.counts.get(k, 0):>6}  records {totals.get(k, 0)}\n"
        for k in sorted(res.counts))
    _emit(out, args, doc, human)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gkannan", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["human", "structured"], default="human")
    common.add_argument("--manifest", help="write a run manifest to this path")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="check a space file against the metric axioms")
    v.add_argument("space")
    v.set_defaults(fn=cmd_validate)

    c = sub.add_parser("classify", parents=[common], help="contraction coefficients of a map")
    c.add_argument("files", nargs="+", metavar="[SPACE] MAP")
    c.add_argument("--grid", type=int, help="grid points for piecewise maps")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(fn=cmd_classify)

    s = sub.add_parser("solve", parents=[common], help="Picard iteration with certificates")
    s.add_argument("files", nargs="+", metavar="[SPACE] MAP")
    s.add_argument("--start", help="start label (default: every point)")
    s.add_argument("--budget", type=int, help="step budget (default |X|)")
    s.add_argument("--grid", type=int)
    s.set_defaults(fn=cmd_solve)

    r = sub.add_parser("reproduce", parents=[common], help="rerun the worked examples")
    r.add_argument("example", choices=["1", "2", "3", "4", "all"])
    r.set_defaults(fn=cmd_reproduce)

    h = sub.add_parser("hunt", parents=[common], help="random witness search")
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--size", type=int, default=4)
    h.add_argument("--sizes", help="comma-separated sizes to cycle through")
    h.add_argument("--budget", type=int, default=1000)
    h.add_argument("--kind", default="all",
                   choices=["all", "falsify-theorem1"] + [k.value for k in WitnessKind])
    h.add_argument("--method", default="euclidean-embedding",
                   choices=["euclidean-embedding", "repaired-random-matrix"])
    h.add_argument("--dim", type=int, default=2)
    h.add_argument("--policy", default="uniform-random",
                   choices=["uniform-random", "fixed-point-biased", "descent"])
    h.add_argument("--k", type=int, default=1)
    h.add_argument("--per-kind", type=int, default=5)
    h.add_argument("--workers", type=int, default=1)
    h.add_argument("--out", help="witness store directory")
    h.set_defaults(fn=cmd_hunt)
    return p


def _input_paths(args) -> list[str]:
    paths = []
    for name in ("space", "files"):
        val = getattr(args, name, None)
        if isinstance(val, str):
            paths.append(val)
        elif val:
            paths.extend(val)
    return paths


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    buf = io.StringIO()
    try:
        code = args.fn(args, buf)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        code = EXIT_INPUT
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        code = EXIT_DOMAIN
    text = buf.getvalue()
    sys.stdout.write(text)
    manifest_path = args.manifest
    if manifest_path is None and args.command == "hunt" and args.out:
        manifest_path = Path(args.out) / "manifest.json"
    if manifest_path:
        params = {k: v for k, v in vars(args).items() if k not in ("fn", "manifest")}
        m = RunManifest.for_inputs(args.command, _input_paths(args), params, getattr(args, "seed", None))
        m.output_digest = digest(text)
        m.parameters["exit_code"] = code
        m.write(manifest_path)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
