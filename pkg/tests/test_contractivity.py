import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from gkannan import fixtures
from gkannan.contractivity import (
    SampledMap, audit_gkannan, audit_kannan, audit_w1, classify, delta_tolerance,
    gkannan_coefficient, grid_report, kannan_coefficient, lipschitz_coefficient,
)
from gkannan.maps import PiecewiseLinearMap, Segment, TableMap, discretize, fixed_points
from gkannan.metric import build_finite_space, sample_interval_space
from gkannan.search import GeneratorConfig, Method, random_space

from . import oracles

GRID = sample_interval_space(0, 1, 257)
HALF = Fraction(1, 2)


def test_example1_coefficients():
    m = fixtures.example1_map()
    assert kannan_coefficient(m) == (math.inf, (0, 1))
    assert gkannan_coefficient(m) == (HALF, (0, 1, 2))
    assert lipschitz_coefficient(m) == 1


def test_example2_coefficients():
    m = fixtures.example2_map()
    assert gkannan_coefficient(m)[0] == Fraction(1, 3)
    assert lipschitz_coefficient(m) == 1


def test_identity_coefficients():
    # zero displacements against positive image distances: no finite lambda
    m = TableMap.identity(fixtures.three_point_space())
    assert kannan_coefficient(m)[0] == math.inf
    assert gkannan_coefficient(m)[0] == math.inf
    assert lipschitz_coefficient(m) == 1
    rep = classify(m)
    assert not rep.is_kannan and not rep.is_gkannan


def test_constant_map_coefficients():
    m = TableMap(fixtures.three_point_space(), (0, 0, 0))
    assert kannan_coefficient(m)[0] == 0 and gkannan_coefficient(m)[0] == 0
    rep = classify(m)
    assert rep.is_kannan and rep.is_gkannan and rep.kind == "both"


def test_scaling_map_on_grid():
    t = discretize(fixtures.scaling_map(5), GRID)
    k, _ = kannan_coefficient(t)
    g, _ = gkannan_coefficient(t)
    assert audit_kannan(t, Fraction(1, 4), delta_tolerance("kannan", Fraction(1, 4), t.delta)) == []
    assert audit_gkannan(t, HALF, delta_tolerance("gkannan", HALF, t.delta)) == []
    assert k >= Fraction(1, 4) - Fraction(1, 50) and g >= HALF - Fraction(1, 50)
    s = SampledMap(fixtures.scaling_map(5), GRID)
    assert lipschitz_coefficient(s) == Fraction(1, 5)
    assert kannan_coefficient(s)[0] == Fraction(1, 4)


def test_too_small_for_triples():
    s = build_finite_space("pq", [[0, 1], [1, 0]])
    m = TableMap(s, (0, 0))
    assert kannan_coefficient(m)[0] == 0
    with pytest.raises(ValueError, match=r"\|X\| >= 3"):
        gkannan_coefficient(m)
    with pytest.raises(ValueError):
        classify(m)


def test_classification_flags():
    rep = classify(fixtures.example1_map())
    assert (rep.is_gkannan, rep.is_kannan, rep.kind) == (True, False, "gkannan-not-kannan")
    rep = grid_report(fixtures.scaling_map(Fraction(7, 2)), GRID)
    assert rep.is_kannan and not rep.is_gkannan
    assert rep.bounds == "grid-lower"
    assert rep.lambda_gkannan <= rep.gkannan_upper


def test_w1_audits():
    t = discretize(fixtures.scaling_map(5), GRID)
    assert audit_w1(t, HALF, delta_tolerance("w1", HALF, t.delta)) == []
    const = TableMap(fixtures.three_point_space(), (1, 1, 1))
    assert audit_w1(const, 0) == []
    assert audit_w1(TableMap.identity(const.space), 0)


def test_example4_violations_sit_at_the_jump():
    pw = fixtures.two_slope_map(20, 10)
    assert audit_w1(SampledMap(pw, GRID), HALF) == []
    # lifting the right branch breaks (w1) only for pairs across the jump
    lifted = PiecewiseLinearMap(0, 1, (Segment(HALF, Fraction(1, 20), 0),
                                       Segment(1, Fraction(1, 10), Fraction(3, 10))))
    bad = audit_w1(SampledMap(lifted, GRID), HALF)
    assert bad
    assert all(min(v.indices) <= 128 < max(v.indices) for v in bad)


def test_three_fixed_points_force_infinity():
    s = build_finite_space("abcd", [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]])
    m = TableMap(s, (0, 1, 2, 0))
    assert gkannan_coefficient(m)[0] == math.inf


# -- properties against the brute-force oracles -------------------------------

@st.composite
def table_maps(draw, min_n=3, max_n=6):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 10 ** 6))
    method = draw(st.sampled_from(list(Method)))
    space = random_space(GeneratorConfig(seed=seed, size=n, method=method))
    image = tuple(draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n)))
    return TableMap(space, image)


@given(table_maps(), st.integers(1, 4))
def test_coefficients_match_oracles(m, workers):
    assert kannan_coefficient(m, workers) == oracles.kannan(m)
    assert gkannan_coefficient(m, workers) == oracles.gkannan(m)
    assert lipschitz_coefficient(m, workers) == oracles.lipschitz(m)


@given(table_maps())
def test_gkannan_at_most_twice_kannan(m):
    k, _ = kannan_coefficient(m)
    assume(k != math.inf)
    assert gkannan_coefficient(m)[0] <= 2 * k


@given(table_maps(), st.fractions(min_value=Fraction(1, 100), max_value=100))
def test_scale_invariance(m, c):
    scaled = TableMap(m.space.scaled(c), m.image)
    assert kannan_coefficient(scaled) == kannan_coefficient(m)
    assert gkannan_coefficient(scaled) == gkannan_coefficient(m)


@given(table_maps(min_n=4))
def test_invariant_subspace_is_no_worse(m):
    keep = sorted(set(m.image) | {m.image[i] for i in m.image})
    orbit_closed = set(keep)
    while True:
        grown = orbit_closed | {m.image[i] for i in orbit_closed}
        if grown == orbit_closed:
            break
        orbit_closed = grown
    idx = sorted(orbit_closed)
    assume(len(idx) >= 3)
    sub = m.restrict(idx)
    assert kannan_coefficient(sub)[0] <= kannan_coefficient(m)[0]
    assert gkannan_coefficient(sub)[0] <= gkannan_coefficient(m)[0]


@given(table_maps())
def test_audit_agrees_with_coefficient(m):
    g, _ = gkannan_coefficient(m)
    assume(g != math.inf)
    assert audit_gkannan(m, g) == []
    if g > 0:
        assert audit_gkannan(m, g * Fraction(99, 100))


@pytest.mark.parametrize("pw", [
    fixtures.scaling_map(Fraction(9, 2)),
    fixtures.scaling_map(5),
    fixtures.scaling_map(8),
    fixtures.two_slope_map(20, 10),
])
def test_w1_gives_three_quarter_kannan_bound(pw):
    # lambda is the continuum coefficient, bounded above by the report band
    lam = grid_report(pw, GRID).gkannan_upper
    assert lam < Fraction(2, 3)
    for m in (SampledMap(pw, GRID), discretize(pw, GRID)):
        delta = getattr(m, "delta", 0)
        assert audit_w1(m, lam, delta_tolerance("w1", lam, delta)) == []
        k = Fraction(3, 4) * lam
        assert audit_kannan(m, k, delta_tolerance("kannan", k, delta)) == []


def test_grid_report_band_covers_the_continuum():
    pw = PiecewiseLinearMap.linear(Fraction(1, 5))
    rep = grid_report(pw, 65)
    assert rep.lambda_gkannan < HALF <= rep.gkannan_upper
