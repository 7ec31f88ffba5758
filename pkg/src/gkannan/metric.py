"""Finite metric spaces with exact rational distances.

A space stores its distance matrix as an integer array of *units* together
with one positive rational ``scale``: ``d(i, j) == units[i, j] * scale``.
Every contraction coefficient in this package is invariant under rescaling
the metric, so the kernels work directly on the integer units.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

# Above this magnitude unit arrays switch to dtype=object (Python ints) so
# that products formed by the ratio kernels cannot overflow int64.
INT64_SAFE = 1 << 28


class StructureError(ValueError):
    """The input is not even shaped like a distance matrix / point set."""


class MetricError(ValueError):
    """A matrix failed one of the metric axioms."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        first = report.violations[0]
        super().__init__(
            f"not a metric: {len(report.violations)} violation(s), first {first}"
        )


class Provenance(str, enum.Enum):
    EXPLICIT = "explicit"
    GRID_SAMPLE = "grid-sample"
    RANDOM_EMBEDDING = "random-embedding"
    REPAIRED = "repaired"


@dataclass(frozen=True)
class Violation:
    axiom: str  # diagonal | nonnegativity | positivity | symmetry | triangle
    indices: tuple[int, ...]
    lhs: Fraction
    rhs: Fraction


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def to_fraction(value) -> Fraction:
    """Exact conversion; decimal strings such as ``"0.25"`` become ``1/4``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise StructureError(f"not a number: {value!r}")
    if isinstance(value, float):
        if not math.isfinite(value):
            raise StructureError(f"non-finite entry: {value!r}")
        # go through repr so 0.1 means 1/10, not the binary double
        return Fraction(repr(value))
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise StructureError(f"not an exact number: {value!r}") from exc


def integerize(values: Iterable[Fraction]) -> tuple[list[int], Fraction]:
    """Write rationals as ``ints * scale`` with the ints sharing no common factor."""
    values = list(values)
    den = 1
    for v in values:
        den = math.lcm(den, v.denominator)
    ints = [v.numerator * (den // v.denominator) for v in values]
    g = 0
    for k in ints:
        g = math.gcd(g, k)
    g = g or 1
    return [k // g for k in ints], Fraction(g, den)


def as_unit_array(ints, n: int | None = None) -> np.ndarray:
    arr_obj = np.array(ints, dtype=object)
    if n is not None:
        arr_obj = arr_obj.reshape(n, n)
    peak = max((abs(int(v)) for v in arr_obj.flat), default=0)
    if peak < INT64_SAFE:
        return arr_obj.astype(np.int64)
    return arr_obj


def _square(dist) -> list[list[Fraction]]:
    try:
        rows = [list(r) for r in dist]
    except TypeError as exc:
        raise StructureError("distance matrix must be a sequence of rows") from exc
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise StructureError("distance matrix is not square")
    return [[to_fraction(v) for v in r] for r in rows]


def _validate_units(units: np.ndarray, scale: Fraction) -> ValidationReport:
    n = units.shape[0]
    out: list[Violation] = []

    def q(v) -> Fraction:
        return int(v) * scale

    for i in range(n):
        if units[i, i] != 0:
            out.append(Violation("diagonal", (i,), q(units[i, i]), Fraction(0)))
    for i, j in np.argwhere(units < 0):
        out.append(Violation("nonnegativity", (int(i), int(j)), q(units[i, j]), Fraction(0)))
    off = ~np.eye(n, dtype=bool)
    for i, j in np.argwhere((units == 0) & off):
        if i < j:
            out.append(Violation("positivity", (int(i), int(j)), Fraction(0), Fraction(0)))
    asym = units != units.T
    for i, j in np.argwhere(asym):
        if i < j:
            out.append(Violation("symmetry", (int(i), int(j)), q(units[i, j]), q(units[j, i])))
    symmetric = not asym.any()
    # d(i,k) <= d(i,j) + d(j,k); with a symmetric matrix (k,j,i) repeats (i,j,k)
    tri = []
    for j in range(n):
        via = units[:, j][:, None] + units[j, :][None, :]
        bad = units > via
        bad[j, :] = False
        bad[:, j] = False
        for i, k in np.argwhere(bad):
            if i == k or (symmetric and i > k):
                continue
            tri.append((int(i), j, int(k)))
    for i, j, k in sorted(tri):
        out.append(
            Violation("triangle", (i, j, k), q(units[i, k]), q(units[i, j] + units[j, k]))
        )
    return ValidationReport(tuple(out))


def validate_metric(dist) -> ValidationReport:
    """Check a square matrix against the metric axioms.

    Returns every violation with the indices that witness it. A non-square
    or non-numeric input raises :class:`StructureError` instead, since that
    is not an axiom failure.
    """
    rows = _square(dist)
    n = len(rows)
    ints, scale = integerize(v for r in rows for v in r)
    return _validate_units(as_unit_array(ints, n) if n else np.zeros((0, 0), np.int64), scale)


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    labels: tuple[str, ...]
    units: np.ndarray = field(repr=False)
    scale: Fraction = Fraction(1)
    provenance: Provenance = Provenance.EXPLICIT
    # grid-sample spaces remember their coordinates
    coords: tuple[Fraction, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.units.setflags(write=False)

    def __len__(self) -> int:
        return len(self.labels)

    def d(self, i: int, j: int) -> Fraction:
        return int(self.units[i, j]) * self.scale

    @cached_property
    def dist(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(tuple(int(v) * self.scale for v in row) for row in self.units)

    @cached_property
    def index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def __eq__(self, other):
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.scale == other.scale
            and self.provenance == other.provenance
            and self.coords == other.coords
            and np.array_equal(self.units, other.units)
        )

    __hash__ = None  # type: ignore[assignment]

    def subspace(self, indices: Sequence[int]) -> "FiniteMetricSpace":
        idx = list(indices)
        sub = self.units[np.ix_(idx, idx)].copy()
        coords = tuple(self.coords[i] for i in idx) if self.coords else None
        return FiniteMetricSpace(
            tuple(self.labels[i] for i in idx), sub, self.scale, self.provenance, coords
        )

    def scaled(self, c: Fraction) -> "FiniteMetricSpace":
        c = to_fraction(c)
        if c <= 0:
            raise ValueError("scale factor must be positive")
        coords = tuple(c * x for x in self.coords) if self.coords else None
        return FiniteMetricSpace(
            self.labels, self.units.copy(), self.scale * c, self.provenance, coords
        )


def _check_labels(labels, n: int) -> tuple[str, ...]:
    labels = tuple(str(lab) for lab in labels)
    if len(labels) != n:
        raise StructureError(f"{len(labels)} labels for a {n}x{n} matrix")
    if len(set(labels)) != len(labels):
        raise StructureError("labels are not pairwise distinct")
    return labels


def _from_units(labels, units, scale, provenance, coords=None) -> FiniteMetricSpace:
    report = _validate_units(units, scale)
    if not report.ok:
        raise MetricError(report)
    return FiniteMetricSpace(labels, units, scale, provenance, coords)


def build_finite_space(
    labels: Sequence, dist, provenance: Provenance | str = Provenance.EXPLICIT
) -> FiniteMetricSpace:
    rows = _square(dist)
    n = len(rows)
    labels = _check_labels(labels, n)
    if n == 0:
        raise StructureError("a space needs at least one point")
    ints, scale = integerize(v for r in rows for v in r)
    return _from_units(labels, as_unit_array(ints, n), scale, Provenance(provenance))


def sample_interval_space(lo, hi, n: int) -> FiniteMetricSpace:
    """``n`` equally spaced points on ``[lo, hi]`` with the Euclidean metric."""
    lo, hi = to_fraction(lo), to_fraction(hi)
    if n < 2:
        raise ValueError("need at least 2 grid points")
    if not lo < hi:
        raise ValueError("need lo < hi")
    h = (hi - lo) / (n - 1)
    coords = tuple(lo + k * h for k in range(n))
    k = np.arange(n, dtype=np.int64)
    units = np.abs(k[:, None] - k[None, :])
    if n >= INT64_SAFE:
        units = units.astype(object)
    labels = tuple(str(c) for c in coords)
    return FiniteMetricSpace(labels, units, h, Provenance.GRID_SAMPLE, coords)


def shortest_path_closure(units: np.ndarray) -> np.ndarray:
    out = units.copy()
    for k in range(out.shape[0]):
        out = np.minimum(out, out[:, k][:, None] + out[k, :][None, :])
    return out


def repair_to_metric(dist, labels: Sequence | None = None) -> FiniteMetricSpace:
    """Replace ``dist`` by its all-pairs shortest-path closure.

    Entries never increase, and a matrix that is already a metric comes back
    unchanged. The input must be symmetric with a zero diagonal and positive
    off-diagonal entries; zero distances between distinct points are refused.
    """
    rows = _square(dist)
    n = len(rows)
    labels = _check_labels(labels if labels is not None else range(n), n)
    ints, scale = integerize(v for r in rows for v in r)
    units = as_unit_array(ints, n)
    return _repair_units(labels, units, scale)


def _repair_units(labels, units, scale, provenance=Provenance.REPAIRED) -> FiniteMetricSpace:
    n = units.shape[0]
    if any(units[i, i] != 0 for i in range(n)):
        raise StructureError("diagonal must be zero")
    if (units != units.T).any():
        raise StructureError("matrix must be symmetric")
    off = ~np.eye(n, dtype=bool)
    if (units[off] <= 0).any():
        raise StructureError("off-diagonal entries must be positive")
    return _from_units(labels, shortest_path_closure(units), scale, provenance)
