"""Random spaces and maps, witness hunting, and a falsification harness.

Every random draw goes through :class:`random.Random` seeded with a string
built from the config, so a config always reproduces the same instance on
any platform. Seed sweeps can be split across processes: each worker owns a
disjoint seed range and results are merged by seed.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import fixtures
from .contractivity import GKANNAN_BOUND, ContractionReport, classify, gkannan_coefficient
from .maps import TableMap, check_condition_i, fixed_points
from .metric import FiniteMetricSpace, Provenance, _repair_units, to_fraction
from .solver import solve_all_starts

DENOMINATOR = 1 << 16


class Method(str, enum.Enum):
    EUCLIDEAN = "euclidean-embedding"
    REPAIRED = "repaired-random-matrix"


class Policy(str, enum.Enum):
    UNIFORM = "uniform-random"
    FIXED_BIASED = "fixed-point-biased"
    DESCENT = "descent"


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    size: int
    method: Method = Method.EUCLIDEAN
    dim: int = 2
    policy: Policy = Policy.UNIFORM
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "policy", Policy(self.policy))
        if self.size < 3:
            raise ValueError("size must be at least 3")
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        if not 0 <= self.k <= self.size:
            raise ValueError("k must lie in [0, size]")

    def with_seed(self, seed: int, size: int | None = None) -> "GeneratorConfig":
        return dataclasses.replace(self, seed=seed, size=self.size if size is None else size)

    def tag(self, what: str) -> str:
        return f"{what}:{self.seed}:{self.size}:{self.method.value}:{self.dim}:{self.policy.value}:{self.k}"


def _ceil_sqrt(s: int) -> int:
    return 0 if s == 0 else math.isqrt(s - 1) + 1


def random_space(config: GeneratorConfig) -> FiniteMetricSpace:
    rng = random.Random(config.tag("space"))
    n = config.size
    labels = tuple(f"p{i}" for i in range(n))
    units = np.zeros((n, n), dtype=np.int64)
    if config.method is Method.EUCLIDEAN:
        pts: list[tuple[int, ...]] = []
        while len(pts) < n:
            p = tuple(rng.randint(0, DENOMINATOR) for _ in range(config.dim))
            if p not in pts:
                pts.append(p)
        for i in range(n):
            for j in range(i + 1, n):
                s = sum((u - v) ** 2 for u, v in zip(pts[i], pts[j]))
                units[i, j] = units[j, i] = _ceil_sqrt(s)
        provenance = Provenance.RANDOM_EMBEDDING
    else:
        for i in range(n):
            for j in range(i + 1, n):
                units[i, j] = units[j, i] = rng.randint(1, DENOMINATOR)
        provenance = Provenance.REPAIRED
    return _repair_units(labels, units, Fraction(1, DENOMINATOR), provenance)


def random_map(space: FiniteMetricSpace, config: GeneratorConfig) -> TableMap:
    rng = random.Random(config.tag("map"))
    n = len(space)
    if config.policy is Policy.UNIFORM:
        return TableMap(space, tuple(rng.randrange(n) for _ in range(n)))
    pinned = set(rng.sample(range(n), config.k))
    image = []
    if config.policy is Policy.FIXED_BIASED:
        for i in range(n):
            image.append(i if i in pinned else rng.randrange(n))
        return TableMap(space, tuple(image))
    # descent: every free point moves strictly closer to the pinned set
    u = space.units
    if not pinned:
        raise ValueError("descent needs k >= 1")
    reach = [min(int(u[i, p]) for p in pinned) for i in range(n)]
    for i in range(n):
        if i in pinned:
            image.append(i)
        else:
            closer = [j for j in range(n) if reach[j] < reach[i]]
            image.append(rng.choice(closer))
    return TableMap(space, tuple(image))


class WitnessKind(str, enum.Enum):
    KANNAN_NOT_GKANNAN = "kannan-not-gkannan"
    GKANNAN_NOT_KANNAN = "gkannan-not-kannan"
    NO_FIXED_POINT = "no-fixed-point-condition-i-violated"
    TWO_FIXED_POINTS = "two-fixed-points"


@dataclass(frozen=True, eq=False)
class WitnessRecord:
    kind: WitnessKind
    map: TableMap
    report: ContractionReport
    seed: int | str  # an int for generated instances, a fixture name otherwise
    config: GeneratorConfig | None = None

    @property
    def space(self) -> FiniteMetricSpace:
        return self.map.space

    @property
    def name(self) -> str:
        return f"{self.kind.value}_{self.seed}"


def witness_kinds(m: TableMap, report: ContractionReport) -> list[WitnessKind]:
    """All kinds an instance witnesses, re-derived from scratch."""
    out = []
    if report.is_kannan and not report.is_gkannan:
        out.append(WitnessKind.KANNAN_NOT_GKANNAN)
    if report.is_gkannan and not report.is_kannan:
        out.append(WitnessKind.GKANNAN_NOT_KANNAN)
    if report.is_gkannan:
        fix = fixed_points(m)
        if not fix and check_condition_i(m) is not None:
            out.append(WitnessKind.NO_FIXED_POINT)
        if len(fix) == 2:
            out.append(WitnessKind.TWO_FIXED_POINTS)
    return out


def fixture_witnesses() -> list[WitnessRecord]:
    out = []
    for name, m in (
        ("example1", fixtures.example1_map()),
        ("example2", fixtures.example2_map()),
        ("example3-a7_2", fixtures.geometric_orbit_map(Fraction(7, 2))),
    ):
        rep = classify(m)
        for kind in witness_kinds(m, rep):
            out.append(WitnessRecord(kind, m, rep, f"fixture-{name}"))
    return out


@dataclass
class HuntResult:
    records: list[WitnessRecord]
    counts: dict[str, int]  # random hits per kind, fixtures excluded
    examined: int

    def of_kind(self, kind: WitnessKind | str) -> list[WitnessRecord]:
        kind = WitnessKind(kind)
        return [r for r in self.records if r.kind is kind]


def _instance(config: GeneratorConfig) -> TableMap:
    return random_map(random_space(config), config)


def _seed_plan(config: GeneratorConfig, budget: int, sizes: Sequence[int] | None):
    sizes = list(sizes) if sizes else [config.size]
    return [config.with_seed(config.seed + t, sizes[t % len(sizes)]) for t in range(budget)]


def _hunt_chunk(cfgs: list[GeneratorConfig]):
    hits = []
    for cfg in cfgs:
        m = _instance(cfg)
        rep = classify(m)
        for kind in witness_kinds(m, rep):
            hits.append((cfg, kind, m, rep))
    return hits


def _run_chunks(fn, plan: list, workers: int) -> list:
    if workers <= 1:
        return fn(plan)
    chunks = [plan[w::workers] for w in range(workers)]
    out = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(fn, chunks):
            out.extend(part)
    return out


def hunt_independence(config: GeneratorConfig, budget: int, sizes: Sequence[int] | None = None,
                      kinds: Iterable[WitnessKind | str] | None = None, per_kind: int = 5,
                      include_fixtures: bool = True, workers: int = 1) -> HuntResult:
    """Classify ``budget`` random instances and keep witnesses of each kind.

    ``per_kind`` caps how many random witnesses are kept (lowest seeds
    first); the counts still cover every hit.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    wanted = {WitnessKind(k) for k in kinds} if kinds else set(WitnessKind)
    plan = _seed_plan(config, budget, sizes)
    hits = _run_chunks(_hunt_chunk, plan, workers)
    hits.sort(key=lambda h: h[0].seed)
    counts = {k.value: 0 for k in wanted}
    records = []
    if include_fixtures:
        records += [r for r in fixture_witnesses() if r.kind in wanted]
    for cfg, kind, m, rep in hits:
        if kind not in wanted:
            continue
        counts[kind.value] += 1
        if counts[kind.value] <= per_kind:
            records.append(WitnessRecord(kind, m, rep, cfg.seed, cfg))
    return HuntResult(records, counts, budget)


@dataclass
class FalsifyResult:
    counterexample: WitnessRecord | None
    reason: str | None
    examined: int
    qualifying: int  # instances meeting both hypotheses


def check_theorem1(m: TableMap) -> str | None:
    """Why ``m`` contradicts the fixed point theorem, or ``None``.

    Only maps meeting both hypotheses (coefficient below 2/3, no 2-cycle
    points) are judged; others return ``None``.
    """
    if check_condition_i(m) is not None:
        return None
    lam, _ = gkannan_coefficient(m)
    if not lam < GKANNAN_BOUND:
        return None
    fix = fixed_points(m)
    if not fix:
        return "no fixed point"
    if len(fix) > 2:
        return f"{len(fix)} fixed points"
    for res in solve_all_starts(m, len(m)):
        if res.fixed_point is None:
            return f"orbit from {m.space.labels[res.start]} ended {res.trace.outcome.value}"
    return None


def _falsify_chunk(cfgs: list[GeneratorConfig]):
    out = []
    for cfg in cfgs:
        m = _instance(cfg)
        qualifies = check_condition_i(m) is None and gkannan_coefficient(m)[0] < GKANNAN_BOUND
        out.append((cfg, qualifies, check_theorem1(m) if qualifies else None))
    return out


def falsify_theorem1(config: GeneratorConfig, budget: int, sizes: Sequence[int] | None = None,
                     workers: int = 1, store: Path | None = None) -> FalsifyResult:
    """Search for a map meeting the hypotheses of the theorem without a fixed point.

    The expected outcome is no counterexample; one that turns up is written
    to ``store`` (when given) for triage.
    """
    plan = _seed_plan(config, budget, sizes)
    rows = sorted(_run_chunks(_falsify_chunk, plan, workers), key=lambda r: r[0].seed)
    qualifying = sum(1 for _, q, _ in rows if q)
    for cfg, _, reason in rows:
        if reason is not None:
            m = _instance(cfg)
            rec = WitnessRecord(WitnessKind.NO_FIXED_POINT, m, classify(m), cfg.seed, cfg)
            if store is not None:
                from .formats import write_witness

                write_witness(Path(store), rec, name=f"falsify-theorem1_{cfg.seed}")
            return FalsifyResult(rec, reason, budget, qualifying)
    return FalsifyResult(None, None, budget, qualifying)


# -- two-slope parameter search -----------------------------------------------

@dataclass(frozen=True)
class ConstraintAudit:
    name: str
    slack: Fraction  # >= 0 means satisfied

    @property
    def ok(self) -> bool:
        return self.slack >= 0


@dataclass(frozen=True)
class Example4Search:
    found: bool
    a: Fraction | None
    b: Fraction | None
    audit: tuple[ConstraintAudit, ...]
    tightest: ConstraintAudit | None = None  # set when nothing was found
    tried: int = 0


def default_param_grid(step=Fraction(1, 2), top=100) -> list[Fraction]:
    step = to_fraction(step)
    k = 1
    out = []
    while 1 + k * step <= top:
        out.append(1 + k * step)
        k += 1
    return out


def _pair_min(c_hi: Fraction, hi: Sequence[Fraction], c_lo: Fraction,
              lo: Sequence[Fraction], strict_same: bool) -> Fraction:
    """min of ``c_hi*u + c_lo*v`` with u in hi, v in lo and ``v < u``."""
    best = None
    for u in hi:
        for v in lo:
            if strict_same and not v < u:
                continue
            val = c_hi * u + c_lo * v
            if best is None or val < best:
                best = val
    return best


def audit_two_slope(lam, a, b, points: int = 257) -> tuple[ConstraintAudit, ...]:
    """Slack of the four constraints making ``two_slope_map(a, b)`` generalized Kannan.

    The two mixed-case constraints are checked over all grid triples
    ``x > y > z`` with ``y, z <= 1/2 < x`` and with ``z <= 1/2 < y < x``
    respectively; the linear form separates, so the minimum over triples is
    the minimum over the coupled pair plus the minimum over the free point.
    """
    lam, a, b = to_fraction(lam), to_fraction(a), to_fraction(b)
    h = Fraction(1, points - 1)
    grid = [k * h for k in range(points)]
    left = [p for p in grid if p <= Fraction(1, 2)]
    right = [p for p in grid if p > Fraction(1, 2)]
    cx = lam - lam / b - 2 / b
    cz = lam - lam / a + 2 / a
    # x ranges over the right piece in both mixed cases
    mixed_left = (min(cx * x for x in right)
                  + _pair_min(lam - lam / a, left, cz, left, strict_same=True))
    mixed_right = (_pair_min(cx, right, lam - lam / b, right, strict_same=True)
                   + min(cz * z for z in left))
    return (
        ConstraintAudit("ex48", lam - 2 / (a - 1)),
        ConstraintAudit("ex49", lam - 2 / (b - 1)),
        ConstraintAudit("ex45", mixed_left),
        ConstraintAudit("ex46", mixed_right),
    )


def find_example4_params(lam, param_grid: Sequence | None = None,
                         points: int = 257) -> Example4Search:
    """Smallest ``(b, a)`` on ``param_grid`` with ``a > b > 1`` passing all four audits."""
    lam = to_fraction(lam)
    if not 0 < lam < GKANNAN_BOUND:
        raise ValueError("lambda target must lie in (0, 2/3)")
    values = sorted({to_fraction(v) for v in (param_grid or default_param_grid())})
    values = [v for v in values if v > 1]
    tightest, tried = None, 0
    for b in values:
        for a in values:
            if not a > b:
                continue
            tried += 1
            # the cheap closed-form constraints first
            quick = (ConstraintAudit("ex48", lam - 2 / (a - 1)),
                     ConstraintAudit("ex49", lam - 2 / (b - 1)))
            if all(c.ok for c in quick):
                audit = audit_two_slope(lam, a, b, points)
            else:
                audit = quick
            if all(c.ok for c in audit):
                return Example4Search(True, a, b, audit_two_slope(lam, a, b, points), None, tried)
            for c in audit:
                if not c.ok and (tightest is None or c.slack > tightest.slack):
                    tightest = c
    return Example4Search(False, None, None, (), tightest, tried)
