"""Self-maps of finite spaces and piecewise-linear maps of an interval."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .metric import FiniteMetricSpace, Provenance, StructureError, to_fraction


class ClosureError(ValueError):
    """A map sends some point outside its own domain."""


@dataclass(frozen=True, eq=False)
class TableMap:
    """``T(p_i) = p_{image[i]}`` on a finite space.

    ``delta`` is the largest displacement introduced when the table was
    obtained by rounding a continuum map to a grid (zero otherwise).
    """

    space: FiniteMetricSpace
    image: tuple[int, ...]
    delta: Fraction = Fraction(0)

    def __post_init__(self):
        n = len(self.space)
        image = tuple(int(i) for i in self.image)
        if len(image) != n:
            raise StructureError(f"map has {len(image)} images for {n} points")
        if any(not 0 <= i < n for i in image):
            raise StructureError("image index out of range")
        object.__setattr__(self, "image", image)

    @classmethod
    def from_labels(cls, space: FiniteMetricSpace, table: Mapping[str, str]) -> "TableMap":
        missing = [lab for lab in space.labels if lab not in table]
        if missing:
            raise StructureError(f"map is not total, no image for {missing}")
        extra = set(table) - set(space.labels)
        if extra:
            raise StructureError(f"map mentions unknown points {sorted(extra)}")
        try:
            image = [space.index[str(table[lab])] for lab in space.labels]
        except KeyError as exc:
            raise StructureError(f"image {exc.args[0]!r} is not a point of the space") from exc
        return cls(space, tuple(image))

    @classmethod
    def identity(cls, space: FiniteMetricSpace) -> "TableMap":
        return cls(space, tuple(range(len(space))))

    def __call__(self, i: int) -> int:
        return self.image[i]

    def __len__(self) -> int:
        return len(self.image)

    def __eq__(self, other):
        if not isinstance(other, TableMap):
            return NotImplemented
        return self.image == other.image and self.space == other.space

    __hash__ = None  # type: ignore[assignment]

    def as_labels(self) -> dict[str, str]:
        labs = self.space.labels
        return {labs[i]: labs[j] for i, j in enumerate(self.image)}

    def restrict(self, indices: Sequence[int]) -> "TableMap":
        """Restriction to a T-invariant subset."""
        idx = list(indices)
        pos = {old: new for new, old in enumerate(idx)}
        if any(self.image[i] not in pos for i in idx):
            raise ClosureError("subset is not invariant under the map")
        return TableMap(self.space.subspace(idx), tuple(pos[self.image[i]] for i in idx))

    @cached_property
    def img_array(self) -> np.ndarray:
        return np.array(self.image, dtype=np.intp)


def fixed_points(m: TableMap) -> frozenset[int]:
    return frozenset(i for i, j in enumerate(m.image) if i == j)


def check_condition_i(m: TableMap) -> int | None:
    """Return ``None`` when no non-fixed point has ``T(T(x)) == x``.

    Otherwise return the smallest such index.
    """
    for i, j in enumerate(m.image):
        if j != i and m.image[j] == i:
            return i
    return None


@dataclass(frozen=True)
class Segment:
    upto: Fraction
    slope: Fraction
    intercept: Fraction

    def __call__(self, x: Fraction) -> Fraction:
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class PiecewiseLinearMap:
    """Segment ``k`` owns ``(upto_{k-1}, upto_k]``; the first owns ``[lo, upto_0]``."""

    lo: Fraction
    hi: Fraction
    segments: tuple[Segment, ...]

    def __post_init__(self):
        lo, hi = to_fraction(self.lo), to_fraction(self.hi)
        segs = tuple(
            s if isinstance(s, Segment)
            else Segment(*(to_fraction(v) for v in s))
            for s in self.segments
        )
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "segments", segs)
        if not lo < hi:
            raise StructureError("domain needs lo < hi")
        if not segs:
            raise StructureError("at least one segment required")
        cuts = [lo] + [s.upto for s in segs]
        if any(a >= b for a, b in zip(cuts, cuts[1:])):
            raise StructureError("breakpoints must increase strictly")
        if segs[-1].upto != hi:
            raise StructureError("last breakpoint must equal the domain end")
        # linear pieces attain their extremes at segment ends (or the open
        # left end, reached only in the limit, which still must stay inside)
        for left, s in zip(cuts, segs):
            for end in (left, s.upto):
                v = s(end)
                if not lo <= v <= hi:
                    raise ClosureError(f"T({end}) = {v} leaves [{lo}, {hi}]")

    @classmethod
    def linear(cls, slope, intercept=0, lo=0, hi=1) -> "PiecewiseLinearMap":
        return cls(lo, hi, (Segment(to_fraction(hi), to_fraction(slope), to_fraction(intercept)),))

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        return tuple(s.upto for s in self.segments[:-1])

    def segment_of(self, x) -> int:
        x = to_fraction(x)
        if not self.lo <= x <= self.hi:
            raise ValueError(f"{x} is outside [{self.lo}, {self.hi}]")
        for k, s in enumerate(self.segments):
            if x <= s.upto:
                return k
        raise AssertionError("unreachable")

    def __call__(self, x) -> Fraction:
        return evaluate(self, x)


def evaluate(m: PiecewiseLinearMap, x) -> Fraction:
    x = to_fraction(x)
    return m.segments[m.segment_of(x)](x)


def _nearest_index(v: Fraction, lo: Fraction, h: Fraction) -> int:
    pos = (v - lo) / h
    k = math.floor(pos)
    return k + 1 if pos - k > Fraction(1, 2) else k


def discretize(m: PiecewiseLinearMap, space: FiniteMetricSpace) -> TableMap:
    """Round each image to the nearest grid point, ties toward the smaller one."""
    if space.provenance is not Provenance.GRID_SAMPLE or space.coords is None:
        raise ValueError("discretize needs a grid-sample space")
    coords = space.coords
    if coords[0] != m.lo or coords[-1] != m.hi:
        raise ValueError("grid does not cover the map's domain")
    h = coords[1] - coords[0]
    image, delta = [], Fraction(0)
    for p in coords:
        v = evaluate(m, p)
        if not m.lo <= v <= m.hi:
            raise ClosureError(f"T({p}) = {v} leaves the domain")
        k = _nearest_index(v, m.lo, h)
        image.append(k)
        delta = max(delta, abs(v - coords[k]))
    return TableMap(space, tuple(image), delta)


class Outcome(str, enum.Enum):
    FIXED = "reached-fixed-point"
    TWO_CYCLE = "two-cycle-detected"
    BUDGET = "budget-exhausted"


@dataclass(frozen=True)
class OrbitTrace:
    points: tuple[int, ...]
    step_distances: tuple[Fraction, ...]
    outcome: Outcome

    @property
    def steps(self) -> int:
        return len(self.points) - 1

    def a(self, n: int) -> Fraction:
        """Step distance ``a_n = d(x_{n-1}, x_n)``; zero past a reached fixed point."""
        if n < 1:
            raise ValueError("a_n is defined for n >= 1")
        if n <= len(self.step_distances):
            return self.step_distances[n - 1]
        if self.outcome is Outcome.FIXED:
            return Fraction(0)
        raise IndexError(f"a_{n} lies beyond the recorded trace")

    @property
    def terminal(self) -> int:
        return self.points[-1]


def orbit(m: TableMap, x0: int, budget: int) -> OrbitTrace:
    if budget < 1:
        raise ValueError("budget must be at least 1")
    space = m.space
    pts = [x0]
    dists: list[Fraction] = []
    outcome = Outcome.BUDGET
    while True:
        cur = pts[-1]
        nxt = m.image[cur]
        if nxt == cur:
            outcome = Outcome.FIXED
            break
        if len(dists) >= budget:
            break
        pts.append(nxt)
        dists.append(space.d(cur, nxt))
        if len(pts) >= 3 and pts[-1] == pts[-3]:
            outcome = Outcome.TWO_CYCLE
            break
    return OrbitTrace(tuple(pts), tuple(dists), outcome)
