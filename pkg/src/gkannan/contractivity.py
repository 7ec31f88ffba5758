"""Minimal Kannan, generalized-Kannan and Lipschitz coefficients.

For a map ``T`` the Kannan coefficient is the smallest ``lam`` with

    d(Tx, Ty) <= lam * (d(x, Tx) + d(y, Ty))            for all pairs,

and the generalized (three-point) coefficient the smallest ``lam`` with

    d(Tx,Ty) + d(Ty,Tz) + d(Tx,Tz) <= lam * (d(x,Tx) + d(y,Ty) + d(z,Tz))

over all triples of pairwise distinct points. A tuple with zero on both
sides constrains nothing; a positive left side over a zero right side makes
the coefficient infinite. ``T`` is Kannan when the first coefficient is
below 1/2 and generalized Kannan when the second is below 2/3.

Enumeration runs over unordered tuples (both inequalities are symmetric),
row by row on the first index, so rows can be scanned by several workers;
the reduction keeps the largest ratio and, among equal ratios, the
lexicographically smallest tuple, which makes the result independent of
the schedule.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Union

import numpy as np

from .maps import PiecewiseLinearMap, TableMap, evaluate
from .metric import FiniteMetricSpace, as_unit_array, integerize, to_fraction

INF = math.inf
ZERO = Fraction(0)
KANNAN_BOUND = Fraction(1, 2)
GKANNAN_BOUND = Fraction(2, 3)
BAND = 4  # grid-report widening, in relative grid steps

Extended = Union[Fraction, float]  # a Fraction, or math.inf


@dataclass(frozen=True, eq=False)
class SampledMap:
    """A piecewise-linear map evaluated exactly at the points of a grid.

    Images need not be grid points, so this is not a self-map of the grid;
    distances are taken on the real line. Coefficients computed from it are
    lower bounds for the continuum suprema.
    """

    pwmap: PiecewiseLinearMap
    space: FiniteMetricSpace

    def __post_init__(self):
        if self.space.coords is None:
            raise ValueError("sampling needs a space with coordinates")

    @cached_property
    def images(self) -> tuple[Fraction, ...]:
        return tuple(evaluate(self.pwmap, p) for p in self.space.coords)

    @property
    def resolution(self) -> Fraction:
        """Grid step relative to the interval length."""
        c = self.space.coords
        return (c[1] - c[0]) / (c[-1] - c[0])


@dataclass(frozen=True)
class Kernel:
    """Integer views of one map: image distances, displacements, base metric."""

    img: np.ndarray  # img[i, j] = d(T p_i, T p_j)
    disp: np.ndarray  # disp[i] = d(p_i, T p_i)
    base: np.ndarray  # base[i, j] = d(p_i, p_j)
    scale: Fraction
    labels: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.disp)


def kernel(m: TableMap | SampledMap) -> Kernel:
    if isinstance(m, TableMap):
        u = m.space.units
        img = m.img_array
        return Kernel(
            u[np.ix_(img, img)], u[np.arange(len(img)), img], u, m.space.scale,
            m.space.labels,
        )
    coords, images = m.space.coords, m.images
    n = len(coords)
    ints, scale = integerize(list(coords) + list(images))
    arr = as_unit_array(ints)
    p, t = arr[:n], arr[n:]
    return Kernel(
        np.abs(t[:, None] - t[None, :]), np.abs(p - t), np.abs(p[:, None] - p[None, :]),
        scale, m.space.labels,
    )


def _better(a, b):
    """Reduction: larger value wins, ties go to the smaller witness."""
    (va, wa), (vb, wb) = a, b
    if va != vb:
        return a if va > vb else b
    if wa is None:
        return b
    if wb is None:
        return a
    return a if wa <= wb else b


def _block_best(P: np.ndarray, D: np.ndarray) -> tuple[Extended, int | None]:
    """Exact max of P/D over a flat block, with the first maximizing position."""
    inf = (D == 0) & (P > 0)
    if inf.any():
        return INF, int(np.argmax(inf))
    idx = np.flatnonzero(P > 0)
    if idx.size == 0:
        return ZERO, None
    p, d = P[idx], D[idx]
    r = p.astype(float) / d.astype(float)
    k = int(np.argmax(r))
    best = Fraction(int(p[k]), int(d[k]))
    # the float argmax is only a guess; repeat until no ratio beats it exactly
    while True:
        excess = p * best.denominator - d * best.numerator
        over = np.flatnonzero(excess > 0)
        if over.size == 0:
            break
        k = int(over[np.argmax(r[over])])
        best = Fraction(int(p[k]), int(d[k]))
    first = int(np.flatnonzero(excess == 0)[0])
    return best, int(idx[first])


def _pair_rows(num: np.ndarray, den_fn, rows) -> tuple[Extended, tuple | None]:
    n = num.shape[0]
    best = (ZERO, None)
    for i in rows:
        if i + 1 >= n:
            continue
        val, k = _block_best(num[i, i + 1:], den_fn(i))
        best = _better(best, (val, None if k is None else (i, i + 1 + k)))
    return best


def _triple_rows(K: Kernel, rows) -> tuple[Extended, tuple | None]:
    E, disp, n = K.img, K.disp, K.n
    best = (ZERO, None)
    for i in rows:
        m = n - i - 1
        if m < 2:
            continue
        jj, kk = np.triu_indices(m, 1)
        row = E[i, i + 1:]
        P = row[jj] + row[kk] + E[i + 1:, i + 1:][jj, kk]
        tail = disp[i + 1:]
        D = disp[i] + tail[jj] + tail[kk]
        val, k = _block_best(P, D)
        w = None if k is None else (i, i + 1 + int(jj[k]), i + 1 + int(kk[k]))
        best = _better(best, (val, w))
    return best


def _reduce(scan, n: int, workers: int):
    if workers <= 1:
        return scan(range(n))
    # interleave rows so early (long) rows are spread over workers
    chunks = [range(w, n, workers) for w in range(workers)]
    best = (ZERO, None)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(scan, chunks):
            best = _better(best, part)
    return best


def _scaled(value: Extended, scale: Fraction = Fraction(1)) -> Extended:
    return value if value == INF else Fraction(value) * scale


def _need(K: Kernel, k: int, what: str):
    if K.n < k:
        raise ValueError(f"{what} needs a space with at least {k} points (|X| >= {k})")


def kannan_coefficient(m: TableMap | SampledMap, workers: int = 1):
    """Return ``(coefficient, witness_pair)``; coefficient may be ``math.inf``."""
    K = kernel(m)
    _need(K, 2, "the Kannan coefficient")
    disp = K.disp
    return _reduce(lambda rows: _pair_rows(K.img, lambda i: disp[i] + disp[i + 1:], rows),
                   K.n, workers)


def gkannan_coefficient(m: TableMap | SampledMap, workers: int = 1):
    """Return ``(coefficient, witness_triple)``; coefficient may be ``math.inf``."""
    K = kernel(m)
    _need(K, 3, "the generalized Kannan coefficient")
    return _reduce(lambda rows: _triple_rows(K, rows), K.n, workers)


def lipschitz_coefficient(m: TableMap | SampledMap, workers: int = 1) -> Extended:
    K = kernel(m)
    _need(K, 2, "the Lipschitz coefficient")
    base = K.base
    val, _ = _reduce(lambda rows: _pair_rows(K.img, lambda i: base[i, i + 1:], rows),
                     K.n, workers)
    return val


@dataclass(frozen=True)
class ContractionReport:
    """Coefficients and class flags for one map.

    ``bounds`` is ``"exact"`` for finite spaces. For grid samples of a
    continuum map it is ``"grid-lower"``: the lambdas are lower bounds, the
    ``*_upper`` fields add the resolution band, and the flags are decided on
    the upper values so that a flag is never claimed on sampling alone.
    """

    lambda_kannan: Extended
    lambda_gkannan: Extended
    lipschitz: Extended
    is_kannan: bool
    is_gkannan: bool
    witness_pair: tuple[int, int] | None
    witness_triple: tuple[int, int, int] | None
    labels: tuple[str, ...] = field(default=(), repr=False)
    bounds: str = "exact"
    kannan_upper: Extended | None = None
    gkannan_upper: Extended | None = None

    @property
    def kind(self) -> str:
        return {
            (True, True): "both",
            (True, False): "kannan-not-gkannan",
            (False, True): "gkannan-not-kannan",
            (False, False): "neither",
        }[(self.is_kannan, self.is_gkannan)]


def classify(m: TableMap, workers: int = 1) -> ContractionReport:
    if len(m) < 3:
        raise ValueError("classification needs |X| >= 3")
    lk, wp = kannan_coefficient(m, workers)
    lg, wt = gkannan_coefficient(m, workers)
    lip = lipschitz_coefficient(m, workers)
    return ContractionReport(
        lk, lg, lip, lk < KANNAN_BOUND, lg < GKANNAN_BOUND, wp, wt, m.space.labels,
        "exact", lk, lg,
    )


def grid_report(pw: PiecewiseLinearMap, grid: FiniteMetricSpace | int = 257,
                workers: int = 1) -> ContractionReport:
    """Coefficients of a continuum map sampled exactly at grid points.

    The lambdas are grid maxima, hence lower bounds. The upper estimates are
    ``lower * (1 + BAND * h)`` with ``h`` the relative grid step. For maps
    ``x -> x/s(x)`` fixing 0 the three-point supremum is approached along
    ``(0, y, x)`` with ``y -> 0``; stopping at ``y = h`` loses a factor
    ``1 + h (1 - 1/s) / (x - Tx)``. That is ``1 + h`` for ``x/a`` (maximum at
    ``x = 1``) and at most ``1 + 4h`` for the two-slope maps with slopes
    ``1/a, 1/b <= 1/2`` (maximum just right of 1/2). Other maps get the same
    band as a heuristic.
    """
    from .metric import sample_interval_space

    if isinstance(grid, int):
        grid = sample_interval_space(pw.lo, pw.hi, grid)
    s = SampledMap(pw, grid)
    if len(grid) < 3:
        raise ValueError("classification needs |X| >= 3")
    lk, wp = kannan_coefficient(s, workers)
    lg, wt = gkannan_coefficient(s, workers)
    lip = lipschitz_coefficient(s, workers)
    widen = 1 + BAND * s.resolution
    ku, gu = _scaled(lk, widen), _scaled(lg, widen)
    return ContractionReport(
        lk, lg, lip, ku < KANNAN_BOUND, gu < GKANNAN_BOUND, wp, wt, grid.labels,
        "grid-lower", ku, gu,
    )


# -- inequality audits -------------------------------------------------------

@dataclass(frozen=True)
class AuditViolation:
    indices: tuple[int, ...]
    lhs: Fraction
    rhs: Fraction


def delta_tolerance(kind: str, lam, delta) -> Fraction:
    """Slack a rounded table can need when the exact map satisfies the inequality.

    Every rounded image moves by at most ``delta``: one image distance grows
    by at most ``2 delta`` and one displacement shrinks by at most ``delta``.
    """
    lam, delta = to_fraction(lam), to_fraction(delta)
    if kind == "kannan":
        return 2 * delta + 2 * lam * delta
    if kind == "gkannan":
        return 6 * delta + 3 * lam * delta
    if kind == "w1":
        return 2 * delta + Fraction(3, 2) * lam * delta
    raise ValueError(f"unknown inequality {kind!r}")


def _exceeds(L: np.ndarray, R: np.ndarray, c: Fraction, t: Fraction) -> np.ndarray:
    """Exact mask of ``L > c*R + t`` for integer arrays and rational c, t."""
    cq, tq = c.denominator, t.denominator
    a, b, k = cq * tq, c.numerator * tq, t.numerator * cq
    bound = max(abs(a), abs(b), abs(k), 1) * (1 << 32)
    if L.dtype == object or R.dtype == object or bound >= (1 << 62):
        L, R = L.astype(object), R.astype(object)
    return L * a > R * b + k


def _violations(mask, L, R, scale, c, idx_fn) -> list[AuditViolation]:
    out = []
    for flat in np.flatnonzero(mask):
        out.append(AuditViolation(idx_fn(int(flat)), int(L[flat]) * scale,
                                  c * int(R[flat]) * scale))
    return out


def _check_lambda(lam) -> Fraction:
    lam = to_fraction(lam)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return lam


def audit_w1(m: TableMap | SampledMap, lam, tol=0) -> list[AuditViolation]:
    """Ordered pairs with ``d(Tx,Ty) > lam*(d(x,Tx) + d(y,Ty)/2) + tol``.

    The inequality is what a continuous map obeys at accumulation points, so
    on grids it is meaningful only for samples of continuum maps.
    """
    lam = _check_lambda(lam)
    K = kernel(m)
    n = K.n
    L = 2 * K.img
    R = 2 * K.disp[:, None] + K.disp[None, :]
    mask = _exceeds(L, R, lam, 2 * to_fraction(tol) / K.scale)
    np.fill_diagonal(mask, False)
    out = []
    for x, y in np.argwhere(mask):
        out.append(AuditViolation((int(x), int(y)), K.img[x, y] * K.scale,
                                  lam * Fraction(int(R[x, y]), 2) * K.scale))
    return out


def audit_kannan(m: TableMap | SampledMap, lam, tol=0) -> list[AuditViolation]:
    lam = _check_lambda(lam)
    K = kernel(m)
    iu, ju = np.triu_indices(K.n, 1)
    L = K.img[iu, ju]
    R = K.disp[iu] + K.disp[ju]
    mask = _exceeds(L, R, lam, to_fraction(tol) / K.scale)
    return _violations(mask, L, R, K.scale, lam, lambda f: (int(iu[f]), int(ju[f])))


def audit_gkannan(m: TableMap | SampledMap, lam, tol=0) -> list[AuditViolation]:
    lam = _check_lambda(lam)
    K = kernel(m)
    t = to_fraction(tol) / K.scale
    out = []
    for i in range(K.n - 2):
        mm = K.n - i - 1
        jj, kk = np.triu_indices(mm, 1)
        row = K.img[i, i + 1:]
        P = row[jj] + row[kk] + K.img[i + 1:, i + 1:][jj, kk]
        tail = K.disp[i + 1:]
        D = K.disp[i] + tail[jj] + tail[kk]
        mask = _exceeds(P, D, lam, t)
        out += _violations(
            mask, P, D, K.scale, lam,
            lambda f, i=i, jj=jj, kk=kk: (i, i + 1 + int(jj[f]), i + 1 + int(kk[f])),
        )
    return out


def jump_profile(m: TableMap) -> list[int]:
    """``|image[k+1] - image[k]|`` for consecutive grid points."""
    return [abs(b - a) for a, b in zip(m.image, m.image[1:])]

