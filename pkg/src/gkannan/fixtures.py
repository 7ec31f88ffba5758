"""Built-in instances: the three-point examples and the interval maps x/a."""

from __future__ import annotations

from fractions import Fraction

from .maps import PiecewiseLinearMap, Segment, TableMap
from .metric import FiniteMetricSpace, build_finite_space, to_fraction


def three_point_space() -> FiniteMetricSpace:
    """``{x, y, z}`` with d(x,y)=1, d(y,z)=4, d(x,z)=4."""
    return build_finite_space(("x", "y", "z"), [[0, 1, 4], [1, 0, 4], [4, 4, 0]])


def example1_map() -> TableMap:
    """Two fixed points ``x, y``; ``z -> x``."""
    return TableMap.from_labels(three_point_space(), {"x": "x", "y": "y", "z": "x"})


def example2_map() -> TableMap:
    """``x <-> y`` swap with ``z -> x``: no fixed point."""
    return TableMap.from_labels(three_point_space(), {"x": "y", "y": "x", "z": "x"})


def scaling_map(a) -> PiecewiseLinearMap:
    """``T(x) = x / a`` on ``[0, 1]``."""
    return PiecewiseLinearMap.linear(1 / to_fraction(a))


def two_slope_map(a, b) -> PiecewiseLinearMap:
    """``x/a`` on ``[0, 1/2]`` and ``x/b`` on ``(1/2, 1]``; jumps at 1/2 when a != b."""
    a, b = to_fraction(a), to_fraction(b)
    half = Fraction(1, 2)
    return PiecewiseLinearMap(
        Fraction(0), Fraction(1), (Segment(half, 1 / a, Fraction(0)), Segment(Fraction(1), 1 / b, Fraction(0)))
    )


def geometric_orbit_map(a, depth: int = 6) -> TableMap:
    """``x -> x/a`` on the finite set ``{1, 1/a, ..., a**-depth, 0}``.

    The last nonzero point is sent to 0 so the set is invariant. The pair
    ratio ``d(Tx,Ty)/(d(x,Tx)+d(y,Ty))`` then peaks at exactly ``1/(a-1)``
    (pairs with 0), while the three-point ratio at ``(1, a**-depth, 0)`` is
    ``2/((a-1) + a**(1-depth))``, close to ``2/(a-1)``.
    """
    a = to_fraction(a)
    if a <= 1:
        raise ValueError("need a > 1")
    pts = [a ** -k for k in range(depth + 1)] + [Fraction(0)]
    n = len(pts)
    dist = [[abs(p - q) for q in pts] for p in pts]
    labels = [f"a^-{k}" for k in range(depth + 1)] + ["0"]
    space = build_finite_space(labels, dist)
    image = [min(k + 1, n - 1) for k in range(depth)] + [n - 1, n - 1]
    return TableMap(space, tuple(image))
