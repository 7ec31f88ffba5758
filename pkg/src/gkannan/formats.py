"""Space/map file formats, report rendering and run manifests.

Files are JSON documents. Numbers may be JSON numbers or strings such as
``"7/2"`` and ``"0.25"``; either way they are read as exact rationals.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import __version__
from .contractivity import ContractionReport
from .maps import PiecewiseLinearMap, Segment, TableMap
from .metric import FiniteMetricSpace, Provenance, StructureError, build_finite_space, to_fraction


class FormatError(ValueError):
    """A file could not be parsed into a space or map."""


def fmt_q(value) -> str:
    if value is None:
        return "-"
    if value == math.inf:
        return "inf"
    q = Fraction(value)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_extended(text: str):
    return math.inf if text == "inf" else to_fraction(text)


def decimal_up(q: Fraction, digits: int = 12) -> str:
    """Decimal string not smaller than ``q``."""
    scaled = -((-q.numerator * 10 ** digits) // q.denominator)
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled), 10 ** digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def loads(text: str) -> Any:
    try:
        return json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc


def read_json(path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(str(exc)) from exc
    return loads(text)


# -- spaces ------------------------------------------------------------------

def space_from_dict(doc: dict) -> FiniteMetricSpace:
    if not isinstance(doc, dict) or "labels" not in doc or "dist" not in doc:
        raise FormatError("space document needs 'labels' and 'dist'")
    prov = doc.get("provenance", "explicit")
    try:
        prov = Provenance(prov)
    except ValueError as exc:
        raise FormatError(f"unknown provenance {prov!r}") from exc
    try:
        space = build_finite_space(doc["labels"], doc["dist"], prov)
    except StructureError as exc:
        raise FormatError(str(exc)) from exc
    if "coords" in doc:
        coords = tuple(to_fraction(c) for c in doc["coords"])
        space = dataclasses.replace(space, coords=coords)
    return space


def space_to_dict(space: FiniteMetricSpace) -> dict:
    doc = {
        "labels": list(space.labels),
        "dist": [[fmt_q(v) for v in row] for row in space.dist],
        "provenance": space.provenance.value,
    }
    if space.coords is not None:
        doc["coords"] = [fmt_q(c) for c in space.coords]
    return doc


def read_space_doc(path) -> dict:
    """Parse a space file without validating the metric axioms."""
    doc = read_json(path)
    if not isinstance(doc, dict) or "labels" not in doc or "dist" not in doc:
        raise FormatError("space document needs 'labels' and 'dist'")
    return doc


def read_space(path) -> FiniteMetricSpace:
    return space_from_dict(read_json(path))


# -- maps --------------------------------------------------------------------

def map_from_dict(doc: dict, space: FiniteMetricSpace | None = None):
    """A :class:`TableMap` (needs ``space``) or a :class:`PiecewiseLinearMap`."""
    if not isinstance(doc, dict):
        raise FormatError("map document must be an object")
    if "table" in doc:
        if space is None:
            raise FormatError("a table map needs a space")
        table = doc["table"]
        if not isinstance(table, dict):
            raise FormatError("'table' must map labels to labels")
        try:
            return TableMap.from_labels(space, {str(k): str(v) for k, v in table.items()})
        except StructureError as exc:
            raise FormatError(str(exc)) from exc
    if "piecewise" in doc:
        pw = doc["piecewise"]
        try:
            lo, hi = pw["domain"]
            segs = tuple(Segment(to_fraction(s["upto"]), to_fraction(s["slope"]),
                                 to_fraction(s.get("intercept", 0))) for s in pw["segments"])
            return PiecewiseLinearMap(to_fraction(lo), to_fraction(hi), segs)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad piecewise map: {exc}") from exc
    raise FormatError("map document needs 'table' or 'piecewise'")


def map_to_dict(m) -> dict:
    if isinstance(m, TableMap):
        return {"table": m.as_labels()}
    return {"piecewise": {
        "domain": [fmt_q(m.lo), fmt_q(m.hi)],
        "segments": [{"upto": fmt_q(s.upto), "slope": fmt_q(s.slope),
                      "intercept": fmt_q(s.intercept)} for s in m.segments],
    }}


def read_map(path, space: FiniteMetricSpace | None = None):
    return map_from_dict(read_json(path), space)


# -- reports -----------------------------------------------------------------

def _labels_of(witness, labels):
    if witness is None:
        return None
    return [labels[i] for i in witness] if labels else list(witness)


def report_to_dict(r: ContractionReport) -> dict:
    doc = {
        "bounds": r.bounds,
        "lambda_kannan": fmt_q(r.lambda_kannan),
        "lambda_gkannan": fmt_q(r.lambda_gkannan),
        "lipschitz": fmt_q(r.lipschitz),
        "is_kannan": r.is_kannan,
        "is_gkannan": r.is_gkannan,
        "kind": r.kind,
        "witness_pair": _labels_of(r.witness_pair, r.labels),
        "witness_triple": _labels_of(r.witness_triple, r.labels),
    }
    if r.bounds != "exact":
        doc["kannan_upper"] = fmt_q(r.kannan_upper)
        doc["gkannan_upper"] = fmt_q(r.gkannan_upper)
    notes = []
    if r.lambda_kannan == math.inf:
        notes.append("kannan: positive image distance between two fixed points, no finite lambda")
    if r.lambda_gkannan == math.inf:
        notes.append("gkannan: three fixed points with distinct images, no finite lambda")
    if r.bounds == "grid-lower":
        notes.append("grid sample: lambdas are lower bounds, flags use the upper band")
    if notes:
        doc["notes"] = notes
    return doc


def render_report(r: ContractionReport) -> str:
    doc = report_to_dict(r)
    width = max(len(k) for k in doc)
    lines = []
    for key, val in doc.items():
        if isinstance(val, list):
            val = ", ".join(map(str, val)) if key == "notes" else "(" + ", ".join(val) + ")"
        lines.append(f"{key:<{width}}  {val}")
    return "\n".join(lines) + "\n"


def trace_rows(result, labels) -> list[dict]:
    tr, cert = result.trace, result.certificate
    rows = []
    for n, p in enumerate(tr.points):
        last = n == len(tr.points) - 1
        rows.append({
            "n": n,
            "x_n": labels[p],
            "a_n": fmt_q(tr.step_distances[n - 1]) if n else "-",
            "tail_bound": decimal_up(cert.tail_bound(n)) if cert and n >= 3 else "-",
            "outcome": tr.outcome.value if last else "running",
        })
    return rows


def render_trace(result, labels) -> str:
    rows = trace_rows(result, labels)
    cols = ["n", "x_n", "a_n", "tail_bound", "outcome"]
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    out = ["  ".join(f"{c:<{widths[c]}}" for c in cols)]
    for r in rows:
        out.append("  ".join(f"{str(r[c]):<{widths[c]}}" for c in cols))
    return "\n".join(out) + "\n"


# -- witness store -----------------------------------------------------------

def witness_to_dict(rec) -> dict:
    return {
        "kind": rec.kind.value,
        "seed": rec.seed,
        "config": None if rec.config is None else {
            k: getattr(v, "value", v) for k, v in asdict(rec.config).items()
        },
        "space": space_to_dict(rec.space),
        "map": map_to_dict(rec.map),
        "report": report_to_dict(rec.report),
    }


def write_witness(directory: Path, rec, name: str | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{name or rec.name}.json"
    path.write_text(json.dumps(witness_to_dict(rec), indent=2, sort_keys=True) + "\n")
    return path


def read_witness_doc(path) -> dict:
    doc = read_json(path)
    space = space_from_dict(doc["space"])
    doc["map_obj"] = map_from_dict(doc["map"], space)
    return doc


# -- manifests ---------------------------------------------------------------

def digest(text: str | bytes) -> str:
    data = text.encode() if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunManifest:
    command: str
    inputs: dict = field(default_factory=dict)  # path -> sha256 of contents
    parameters: dict = field(default_factory=dict)
    seed: int | None = None
    version: str = __version__
    output_digest: str = ""

    @classmethod
    def for_inputs(cls, command: str, paths, parameters: dict, seed=None) -> "RunManifest":
        inputs = {}
        for p in paths:
            try:
                inputs[str(p)] = digest(Path(p).read_bytes())
            except OSError:
                inputs[str(p)] = None
        return cls(command, inputs, parameters, seed)

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path
