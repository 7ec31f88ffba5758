"""Self-contained checks for the four worked examples, shared by CLI and tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import fixtures
from .contractivity import GKANNAN_BOUND, classify, grid_report, jump_profile
from .formats import fmt_q
from .maps import check_condition_i, discretize, fixed_points
from .metric import sample_interval_space
from .search import find_example4_params
from .solver import ConditionIViolation, picard_solve

GRID = 257
REL_TOL = Fraction(1, 100)
EXAMPLE3_A = (Fraction(7, 2), Fraction(4), Fraction(9, 2), Fraction(5))


@dataclass(frozen=True)
class Check:
    example: str
    name: str
    expected: str
    computed: str
    ok: bool


def _rel_close(value, target, tol=REL_TOL) -> bool:
    return value != math.inf and abs(value - target) <= tol * abs(target)


def example1() -> list[Check]:
    m = fixtures.example1_map()
    rep = classify(m)
    labs = m.space.labels
    fix = sorted(labs[i] for i in fixed_points(m))
    res = picard_solve(m, m.space.index["z"])
    return [
        Check("1", "lambda_gkannan", "1/2", fmt_q(rep.lambda_gkannan), rep.lambda_gkannan == Fraction(1, 2)),
        Check("1", "lambda_kannan", "inf", fmt_q(rep.lambda_kannan), rep.lambda_kannan == math.inf),
        Check("1", "fixed points", "x, y", ", ".join(fix), fix == ["x", "y"]),
        Check("1", "condition (i)", "pass", "pass" if check_condition_i(m) is None else "fail",
              check_condition_i(m) is None),
        Check("1", "solve from z", "x in 1 step", f"{labs[res.fixed_point]} in {res.trace.steps} step",
              res.fixed_point == m.space.index["x"] and res.trace.steps == 1),
    ]


def example2() -> list[Check]:
    m = fixtures.example2_map()
    rep = classify(m)
    labs = m.space.labels
    wit = check_condition_i(m)
    try:
        picard_solve(m, m.space.index["z"])
        solved = "reached a fixed point"
    except ConditionIViolation as exc:
        solved = "condition (i) failure" if exc.result.trace.outcome.value == "two-cycle-detected" else str(exc)
    return [
        Check("2", "lambda_gkannan", "1/3", fmt_q(rep.lambda_gkannan), rep.lambda_gkannan == Fraction(1, 3)),
        Check("2", "fixed points", "none", ", ".join(sorted(labs[i] for i in fixed_points(m))) or "none",
              not fixed_points(m)),
        Check("2", "condition (i) witness", "x", "-" if wit is None else labs[wit], wit == 0),
        Check("2", "solve from z", "condition (i) failure", solved, solved == "condition (i) failure"),
    ]


def example3(grid: int = GRID) -> list[Check]:
    out = []
    for a in EXAMPLE3_A:
        rep = grid_report(fixtures.scaling_map(a), grid)
        kt, gt = 1 / (a - 1), 2 / (a - 1)
        tag = f"a={fmt_q(a)}"
        out.append(Check("3", f"{tag} kannan ~ 1/(a-1)", f"{fmt_q(kt)} (1%)",
                         f"{float(rep.lambda_kannan):.6f}", _rel_close(rep.lambda_kannan, kt)))
        out.append(Check("3", f"{tag} gkannan ~ 2/(a-1)", f"{fmt_q(gt)} (1%)",
                         f"{float(rep.lambda_gkannan):.6f}", _rel_close(rep.lambda_gkannan, gt)))
        want = "kannan-not-gkannan" if a <= 4 else "both"
        out.append(Check("3", f"{tag} class", want, rep.kind, rep.kind == want))
    m = fixtures.geometric_orbit_map(Fraction(7, 2))
    rep = classify(m)
    out.append(Check("3", "a=7/2 finite orbit sample class", "kannan-not-gkannan", rep.kind,
                     rep.kind == "kannan-not-gkannan" and rep.lambda_kannan == Fraction(2, 5)))
    return out


def example4(lam=Fraction(1, 2), grid: int = GRID) -> list[Check]:
    found = find_example4_params(lam, points=grid)
    if not found.found:
        return [Check("4", "parameter search", "found", f"not found ({found.tightest})", False)]
    a, b = found.a, found.b
    out = [Check("4", "a > b", "a > b", f"a={fmt_q(a)}, b={fmt_q(b)}", a > b)]
    for c in found.audit:
        out.append(Check("4", f"constraint {c.name}", "slack >= 0", fmt_q(c.slack), c.ok))
    pw = fixtures.two_slope_map(a, b)
    rep = grid_report(pw, grid)
    out.append(Check("4", "gkannan upper < 2/3", "< 2/3", f"{float(rep.gkannan_upper):.6f}",
                     rep.gkannan_upper < GKANNAN_BOUND))
    table = discretize(pw, sample_interval_space(0, 1, grid))
    jumps = jump_profile(table)
    owner = table.space.coords.index(Fraction(1, 2))
    at = jumps.index(max(jumps))
    out.append(Check("4", "largest table jump", f"after index {owner}", f"after index {at}",
                     at == owner and jumps[at] > max(jumps[:at] + jumps[at + 1:])))
    return out


EXAMPLES: dict[str, Callable[[], list[Check]]] = {
    "1": example1, "2": example2, "3": example3, "4": example4,
}


def run(which: str = "all") -> list[Check]:
    keys = list(EXAMPLES) if which == "all" else [which]
    out = []
    for k in keys:
        out += EXAMPLES[k]()
    return out


def render(checks: list[Check]) -> str:
    cols = [("ex", lambda c: c.example), ("check", lambda c: c.name),
            ("expected", lambda c: c.expected), ("computed", lambda c: c.computed),
            ("result", lambda c: "PASS" if c.ok else "FAIL")]
    rows = [[f(c) for _, f in cols] for c in checks]
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, (h, _) in enumerate(cols)]
    lines = ["  ".join(h.ljust(w) for (h, _), w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"
