"""Picard iteration with convergence certificates.

For a generalized Kannan map with coefficient ``lam < 2/3`` whose orbit
avoids 2-cycles, the step distances ``a_n = d(x_{n-1}, x_n)`` obey

    a_{n+2} <= alpha * max(a_n, a_{n+1}),      alpha = 2 lam / (2 - lam),
    a_n     <= alpha**(n/2 - 1) * a            (n >= 3, a = max(a_1, a_2)),

and the distance from ``x_n`` to the limit is at most
``a * alpha**((n-1)/2) / (1 - sqrt(alpha))``. On a finite space the orbit
becomes constant, so iteration stops at exact fixation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from mpmath import iv
from mpmath.libmp import to_rational

from .contractivity import GKANNAN_BOUND
from .maps import OrbitTrace, Outcome, TableMap, check_condition_i, fixed_points, orbit
from .metric import to_fraction

iv.dps = 40


class SolveFailure(RuntimeError):
    def __init__(self, message: str, result: "SolveResult"):
        super().__init__(message)
        self.result = result


class ConditionIViolation(SolveFailure):
    """The orbit fell into a 2-cycle, so T(T(x)) = x for a non-fixed x."""


class BudgetExhausted(SolveFailure):
    pass


def _upper(x) -> Fraction:
    p, q = to_rational(x._mpi_[1])
    return Fraction(int(p), int(q))


@dataclass(frozen=True)
class ConvergenceCertificate:
    lam: Fraction
    alpha: Fraction
    a: Fraction

    def tail_bound(self, n: int) -> Fraction:
        """Upward-rounded ``a * alpha**((n-1)/2) / (1 - sqrt(alpha))`` for n >= 3."""
        if n < 3:
            raise ValueError("the tail bound is stated for n >= 3")
        if self.a == 0 or self.alpha == 0:
            return Fraction(0)
        al = iv.mpf(self.alpha.numerator) / self.alpha.denominator
        r = iv.sqrt(al)
        val = (iv.mpf(self.a.numerator) / self.a.denominator) * r ** (n - 1) / (1 - r)
        return _upper(val)

    def step_bound_holds(self, n: int, a_n: Fraction) -> bool:
        """Exact test of ``a_n <= alpha**(n/2 - 1) * a``."""
        if n % 2 == 0:
            return a_n <= self.alpha ** (n // 2 - 1) * self.a
        # odd n: compare squares, both sides are nonnegative
        return a_n * a_n <= self.alpha ** (n - 2) * self.a * self.a


def make_certificate(lam, trace: OrbitTrace) -> ConvergenceCertificate:
    lam = to_fraction(lam)
    if not 0 <= lam < GKANNAN_BOUND:
        raise ValueError("lambda must lie in [0, 2/3); alpha would reach 1")
    if trace.outcome is not Outcome.FIXED and trace.steps < 2:
        raise ValueError("certificate needs a trace with at least 2 steps")
    return ConvergenceCertificate(lam, 2 * lam / (2 - lam), max(trace.a(1), trace.a(2)))


def verify_rate(trace: OrbitTrace, cert: ConvergenceCertificate) -> int | None:
    """First ``n`` breaking either step inequality, or ``None`` if all hold.

    Steps after a reached fixed point are zero and pass trivially.
    """
    for n in range(3, trace.steps + 1):
        a_n = trace.a(n)
        if a_n > cert.alpha * max(trace.a(n - 2), trace.a(n - 1)):
            return n
        if not cert.step_bound_holds(n, a_n):
            return n
    return None


def verify_tail(trace: OrbitTrace, cert: ConvergenceCertificate, space) -> int | None:
    """First ``n >= 3`` with ``d(x_n, x_final) > tail_bound(n)``, else ``None``."""
    end = trace.terminal
    for n in range(3, len(trace.points)):
        if space.d(trace.points[n], end) > cert.tail_bound(n):
            return n
    return None


@dataclass(frozen=True)
class UniquenessDiagnostic:
    values: tuple[tuple[int, Fraction], ...]  # (n, R_n)
    skipped: tuple[int, ...]  # n with d(x_n, x_{n+1}) = 0

    @property
    def peak(self) -> Fraction | None:
        return max((v for _, v in self.values), default=None)


def uniqueness_ratio(m: TableMap, xstar: int, xstarstar: int,
                     trace: OrbitTrace) -> UniquenessDiagnostic:
    """``R_n = (d(x*,x**) + d(x*,x_{n+1}) + d(x**,x_{n+1})) / d(x_n, x_{n+1})``.

    A diagnostic: at two distinct fixed points this ratio blows up along
    orbits that never land on either of them. Finite orbits land exactly, so
    the steps after fixation have zero denominators and are listed in
    ``skipped``.
    """
    fix = fixed_points(m)
    if xstar not in fix or xstarstar not in fix or xstar == xstarstar:
        raise ValueError("x* and x** must be two distinct fixed points")
    d = m.space.d
    pts = list(trace.points)
    if trace.outcome is Outcome.FIXED:
        pts.append(pts[-1])
    vals, skipped = [], []
    for n in range(len(pts) - 1):
        step = d(pts[n], pts[n + 1])
        if step == 0:
            skipped.append(n)
            continue
        top = d(xstar, xstarstar) + d(xstar, pts[n + 1]) + d(xstarstar, pts[n + 1])
        vals.append((n, top / step))
    return UniquenessDiagnostic(tuple(vals), tuple(skipped))


@dataclass(frozen=True)
class SolveResult:
    trace: OrbitTrace
    fixed_point: int | None
    certificate: ConvergenceCertificate | None = None
    rate_check: bool | None = None
    tail_check: bool | None = None

    @property
    def start(self) -> int:
        return self.trace.points[0]


def solve(m: TableMap, x0: int, budget: int | None = None, lam=None) -> SolveResult:
    """Iterate from ``x0`` and record the outcome without raising."""
    if budget is None:
        budget = len(m)
    tr = orbit(m, x0, budget)
    fp = tr.terminal if tr.outcome is Outcome.FIXED else None
    cert = rate = tail = None
    if lam is not None and (tr.outcome is Outcome.FIXED or tr.steps >= 2):
        cert = make_certificate(lam, tr)
        rate = verify_rate(tr, cert) is None
        if fp is not None:
            tail = verify_tail(tr, cert, m.space) is None
    return SolveResult(tr, fp, cert, rate, tail)


def picard_solve(m: TableMap, x0: int, budget: int | None = None, lam=None) -> SolveResult:
    """Run the orbit of ``x0`` to a fixed point.

    ``budget`` defaults to ``|X|`` steps. A 2-cycle raises
    :class:`ConditionIViolation` and running out of steps raises
    :class:`BudgetExhausted`; both carry the partial result.
    """
    res = solve(m, x0, budget, lam)
    labs = m.space.labels
    if res.trace.outcome is Outcome.TWO_CYCLE:
        a, b = sorted(res.trace.points[-2:])
        raise ConditionIViolation(
            f"condition (i) fails: 2-cycle ({labs[a]}, {labs[b]}) from {labs[x0]}", res
        )
    if res.trace.outcome is Outcome.BUDGET:
        raise BudgetExhausted(f"no fixed point within {res.trace.steps} steps", res)
    return res


def solve_all_starts(m: TableMap, budget: int | None = None, lam=None) -> list[SolveResult]:
    return [solve(m, x, budget, lam) for x in range(len(m))]


def theorem_preconditions(m: TableMap, lam_gk) -> bool:
    return lam_gk < GKANNAN_BOUND and check_condition_i(m) is None
