"""End-to-end acceptance checks, one test per criterion.

Each test registers itself with the ``criterion`` fixture, and the terminal
summary prints one PASS/FAIL line per criterion.
"""

import itertools
import math
import random
import time
from fractions import Fraction

import pytest

from gkannan import fixtures
from gkannan.contractivity import (
    GKANNAN_BOUND, SampledMap, audit_w1, delta_tolerance, gkannan_coefficient,
    grid_report, jump_profile, kannan_coefficient, lipschitz_coefficient,
)
from gkannan.maps import TableMap, check_condition_i, discretize, fixed_points
from gkannan.metric import sample_interval_space
from gkannan.search import (
    GeneratorConfig, Method, Policy, find_example4_params, random_map, random_space,
)
from gkannan.solver import (
    ConditionIViolation, SolveFailure, picard_solve, solve_all_starts,
)

from . import oracles

HALF = Fraction(1, 2)
GRID = 257
INSTANCES = 12_000


def test_example1_exact(criterion):
    criterion("1", "Example 1 exact reproduction")
    m = fixtures.example1_map()
    assert gkannan_coefficient(m)[0] == HALF
    assert kannan_coefficient(m)[0] == math.inf
    assert {m.space.labels[i] for i in fixed_points(m)} == {"x", "y"}
    assert check_condition_i(m) is None


def test_example2_exact(criterion):
    criterion("2", "Example 2 exact reproduction")
    m = fixtures.example2_map()
    assert gkannan_coefficient(m)[0] == Fraction(1, 3)
    assert fixed_points(m) == frozenset()
    assert m.space.labels[check_condition_i(m)] == "x"
    with pytest.raises(ConditionIViolation) as info:
        picard_solve(m, m.space.index["z"])
    assert info.value.result.trace.outcome.value == "two-cycle-detected"


def test_example3_thresholds(criterion):
    criterion("3", "Example 3 thresholds on the 257-point grid")
    t0 = time.perf_counter()
    for a in (Fraction(7, 2), Fraction(4), Fraction(9, 2), Fraction(5)):
        rep = grid_report(fixtures.scaling_map(a), GRID)
        kt, gt = 1 / (a - 1), 2 / (a - 1)
        assert abs(rep.lambda_kannan - kt) <= kt / 100
        assert abs(rep.lambda_gkannan - gt) <= gt / 100
        assert rep.kind == ("kannan-not-gkannan" if a <= 4 else "both")
    assert time.perf_counter() - t0 < 30


def test_example4_end_to_end(criterion):
    criterion("4", "Example 4 parameter search and discontinuity")
    t0 = time.perf_counter()
    found = find_example4_params(HALF, points=GRID)
    assert found.found and found.a > found.b
    assert {c.name for c in found.audit} == {"ex48", "ex49", "ex45", "ex46"}
    assert all(c.ok for c in found.audit)
    pw = fixtures.two_slope_map(found.a, found.b)
    rep = grid_report(pw, GRID)
    assert rep.gkannan_upper < GKANNAN_BOUND
    table = discretize(pw, sample_interval_space(0, 1, GRID))
    jumps = jump_profile(table)
    owner = table.space.coords.index(HALF)
    at = jumps.index(max(jumps))
    assert at == owner
    assert jumps.count(jumps[at]) == 1
    assert time.perf_counter() - t0 < 60


# -- random Theorem 1 corpus, shared by criteria 5 to 7 ---------------------------

def _configs():
    # descent maps meet the hypotheses far more often than uniform ones
    policies = [(Policy.DESCENT, 1), (Policy.DESCENT, 2), (Policy.DESCENT, 1),
                (Policy.UNIFORM, 1), (Policy.FIXED_BIASED, 2)]
    methods = [Method.EUCLIDEAN, Method.REPAIRED]
    for t in range(INSTANCES):
        policy, k = policies[t % len(policies)]
        yield GeneratorConfig(seed=t, size=3 + t % 8, method=methods[(t // 5) % 2],
                              dim=1 + (t // 10) % 3, policy=policy, k=k)


@pytest.fixture(scope="module")
def corpus():
    t0 = time.perf_counter()
    rows = []
    for cfg in _configs():
        m = random_map(random_space(cfg), cfg)
        gk, _ = gkannan_coefficient(m)
        k, _ = kannan_coefficient(m)
        qualifies = gk < GKANNAN_BOUND and check_condition_i(m) is None
        results = solve_all_starts(m, len(m), lam=gk) if qualifies else None
        rows.append((cfg, m, gk, k, qualifies, results))
    return rows, time.perf_counter() - t0


def test_theorem1_property_suite(criterion, corpus):
    criterion("5", "Theorem 1 over seeded random instances")
    rows, elapsed = corpus
    assert len(rows) >= 10_000
    assert {len(m) for _, m, *_ in rows} == set(range(3, 11))
    bad = []
    qualifying = 0
    for cfg, m, gk, k, qualifies, results in rows:
        if not qualifies:
            continue
        qualifying += 1
        if not 1 <= len(fixed_points(m)) <= 2:
            bad.append((cfg, "fixed point count"))
        for x in range(len(m)):
            try:
                res = picard_solve(m, x, len(m))
            except SolveFailure:
                bad.append((cfg, f"start {x}"))
                continue
            if res.fixed_point not in fixed_points(m) or res.trace.steps > len(m):
                bad.append((cfg, f"start {x}"))
    print(f"instances {len(rows)}, meeting hypotheses {qualifying}, {elapsed:.1f}s")
    assert qualifying >= 1000
    assert not bad, bad[:5]
    assert elapsed < 300


def test_rate_bounds(criterion, corpus):
    criterion("6", "Rate and tail bounds on every qualifying trace")
    rows, _ = corpus
    traces, bad = 0, []
    for cfg, m, gk, k, qualifies, results in rows:
        if not qualifies:
            continue
        for res in results:
            traces += 1
            if not (res.rate_check and res.tail_check):
                bad.append((cfg, res.start))
    assert traces > 0
    assert not bad, bad[:5]


def test_gkannan_bounded_by_twice_kannan(criterion, corpus):
    criterion("7", "gkannan <= 2 kannan where kannan is finite")
    rows, _ = corpus
    finite = [(cfg, gk, k) for cfg, _, gk, k, *_ in rows if k != math.inf]
    assert finite
    bad = [cfg for cfg, gk, k in finite if not gk <= 2 * k]
    assert not bad, bad[:5]


def test_oracle_equivalence(criterion):
    criterion("8", "Parallel coefficients equal brute-force oracles")
    rng = random.Random("oracle-equivalence")
    checked = 0
    for size, spaces in ((3, 20), (4, 5)):
        for s in range(spaces):
            method = rng.choice(list(Method))
            space = random_space(GeneratorConfig(seed=rng.randrange(10 ** 6), size=size,
                                                 method=method))
            for image in itertools.product(range(size), repeat=size):
                m = TableMap(space, image)
                kv, kw = kannan_coefficient(m, workers=3)
                gv, gw = gkannan_coefficient(m, workers=3)
                ok, okw = oracles.kannan(m)
                og, ogw = oracles.gkannan(m)
                assert (kv, kw) == (ok, okw), image
                assert (gv, gw) == (og, ogw), image
                assert gv == oracles.gkannan_ordered(m)
                assert lipschitz_coefficient(m, workers=3) == oracles.lipschitz(m)
                checked += 1
    assert checked == 20 * 27 + 5 * 256


def test_w1_audit(criterion):
    criterion("9", "(w1) audit on the Example 3 and Example 4 grids")
    grid = sample_interval_space(0, 1, GRID)
    pw3 = fixtures.scaling_map(5)
    t3 = discretize(pw3, grid)
    assert audit_w1(t3, HALF, delta_tolerance("w1", HALF, t3.delta)) == []
    assert audit_w1(SampledMap(pw3, grid), HALF) == []

    found = find_example4_params(HALF, points=GRID)
    pw4 = fixtures.two_slope_map(found.a, found.b)
    t4 = discretize(pw4, grid)
    owner = grid.coords.index(HALF)
    near = {owner - 1, owner, owner + 1}
    for table in (t4, SampledMap(pw4, grid)):
        tol = delta_tolerance("w1", HALF, getattr(table, "delta", 0))
        for v in audit_w1(table, HALF, tol):
            assert near & set(v.indices), v
