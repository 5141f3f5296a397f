"""Continuous problem data: coefficients, piecewise source, boundary traces.

The model problem is

    -eps^2 (u_xx + u_yy) + a(x,y) u_x + b(x,y) u = f(x,y)   on (0,1)^2,

with Dirichlet data on the boundary, a >= alpha > 0, b >= beta^2 > 0, and a
source f that is two-valued across the interior lines x = d1 and y = d2.
The four open quadrants are

    Q1 = (0,d1) x (0,d2),   Q2 = (d1,1) x (0,d2),
    Q3 = (0,d1) x (d2,1),   Q4 = (d1,1) x (d2,1),

f is smooth up to the closure of each quadrant, so evaluating it on one of
the lines requires an explicit one-sided selector.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import BadN, MalformedSpec, OnDiscontinuityWithoutSide, OutOfDomain

ScalarField = Callable[[float, float], float]
EdgeTrace = Callable[[float], float]


class Side(enum.Enum):
    """One-sided selector for evaluation on a discontinuity line."""
    MINUS = -1
    NOT_ON_LINE = 0
    PLUS = 1


class QuadrantId(enum.Enum):
    Q1 = 1   # (0,d1) x (0,d2)
    Q2 = 2   # (d1,1) x (0,d2)
    Q3 = 3   # (0,d1) x (d2,1)
    Q4 = 4   # (d1,1) x (d2,1)


@dataclass(frozen=True)
class ProblemSpec:
    """Immutable problem data; the field callables must be pure.

    ``f_quadrants`` is ordered (Q1, Q2, Q3, Q4).  ``q_edges`` is ordered
    (west, south, east, north); the west/east traces take y, the
    south/north traces take x.  ``alpha`` is a lower bound for a and
    ``beta**2`` a lower bound for b; the mesh construction uses the stored
    values even when sharper bounds hold.
    """
    epsilon: float
    a_field: ScalarField
    b_field: ScalarField
    f_quadrants: tuple[ScalarField, ScalarField, ScalarField, ScalarField]
    q_edges: tuple[EdgeTrace, EdgeTrace, EdgeTrace, EdgeTrace]
    d1: float
    d2: float
    alpha: float
    beta: float
    name: str = "custom"

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise MalformedSpec(f"epsilon must lie in (0,1), got {self.epsilon}")
        if not (0.0 < self.d1 < 1.0):
            raise MalformedSpec(f"d1 must lie in (0,1), got {self.d1}")
        if not (0.0 < self.d2 < 1.0):
            raise MalformedSpec(f"d2 must lie in (0,1), got {self.d2}")
        if self.alpha <= 0.0:
            raise MalformedSpec(f"alpha must be positive, got {self.alpha}")
        if self.beta <= 0.0:
            raise MalformedSpec(f"beta must be positive, got {self.beta}")

    def with_epsilon(self, epsilon: float) -> "ProblemSpec":
        return replace(self, epsilon=epsilon)


@dataclass
class ValidationReport:
    ok: bool
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def quadrant_of(spec: ProblemSpec, x: float, y: float,
                side_x: Side = Side.NOT_ON_LINE,
                side_y: Side = Side.NOT_ON_LINE) -> QuadrantId:
    """Map a point (with one-sided selectors on the lines) to its quadrant."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise OutOfDomain(f"point ({x}, {y}) outside the unit square")
    if x == spec.d1:
        if side_x is Side.NOT_ON_LINE:
            raise OnDiscontinuityWithoutSide(
                f"x = d1 = {spec.d1} needs an explicit side selector")
        right = side_x is Side.PLUS
    else:
        right = x > spec.d1
    if y == spec.d2:
        if side_y is Side.NOT_ON_LINE:
            raise OnDiscontinuityWithoutSide(
                f"y = d2 = {spec.d2} needs an explicit side selector")
        top = side_y is Side.PLUS
    else:
        top = y > spec.d2
    if top:
        return QuadrantId.Q4 if right else QuadrantId.Q3
    return QuadrantId.Q2 if right else QuadrantId.Q1


def source_at(spec: ProblemSpec, x: float, y: float,
              side_x: Side = Side.NOT_ON_LINE,
              side_y: Side = Side.NOT_ON_LINE) -> float:
    """Evaluate the quadrant-wise source, honoring one-sided limits."""
    quad = quadrant_of(spec, x, y, side_x, side_y)
    return float(spec.f_quadrants[quad.value - 1](x, y))


def jump_f_across_x(spec: ProblemSpec, y: float,
                    side_y: Side = Side.NOT_ON_LINE) -> float:
    """Signed jump f(d1+, y) - f(d1-, y) of the source across x = d1."""
    if not (0.0 < y < 1.0):
        raise OutOfDomain(f"jump is defined for 0 < y < 1, got y = {y}")
    plus = source_at(spec, spec.d1, y, Side.PLUS, side_y)
    minus = source_at(spec, spec.d1, y, Side.MINUS, side_y)
    return plus - minus


def jump_f_across_y(spec: ProblemSpec, x: float,
                    side_x: Side = Side.NOT_ON_LINE) -> float:
    """Signed jump f(x, d2+) - f(x, d2-) of the source across y = d2."""
    if not (0.0 < x < 1.0):
        raise OutOfDomain(f"jump is defined for 0 < x < 1, got x = {x}")
    plus = source_at(spec, x, spec.d2, side_x, Side.PLUS)
    minus = source_at(spec, x, spec.d2, side_x, Side.MINUS)
    return plus - minus


# ---------------------------------------------------------------------------
# Builtin problems.  Field callables are module-level functions (not
# closures) so specs can be pickled into worker processes; they also accept
# numpy arrays unchanged.

def _zero_trace(t):
    return 0.0


def _ex1_a(x, y):
    return 2.0


def _ex1_b(x, y):
    return 25.0


def _ex1_f1(x, y):
    return 0.5


def _ex1_f2(x, y):
    return 0.6


def _ex1_f3(x, y):
    return -0.6


def _ex1_f4(x, y):
    return -0.5


def _ex2_a(x, y):
    return 4.0 + x


def _ex2_b(x, y):
    return 25.0 + x * y / 2.0


def _ex2_f1(x, y):
    return 1.0 + x + y


def _ex2_f2(x, y):
    return -(1.0 + x ** 2 * y ** 2)


def _ex2_f3(x, y):
    return -(1.0 + x * y)


def _ex2_f4(x, y):
    return 1.0 + x + y


def _make_example1() -> ProblemSpec:
    return ProblemSpec(
        epsilon=0.1,
        a_field=_ex1_a,
        b_field=_ex1_b,
        f_quadrants=(_ex1_f1, _ex1_f2, _ex1_f3, _ex1_f4),
        q_edges=(_zero_trace, _zero_trace, _zero_trace, _zero_trace),
        d1=0.5, d2=0.5, alpha=2.0, beta=5.0,
        name="Example1",
    )


def _make_example2() -> ProblemSpec:
    # alpha = 2 is kept although a = 4 + x would allow alpha = 4: the mesh
    # transition points are built from the stored constants.
    return ProblemSpec(
        epsilon=0.1,
        a_field=_ex2_a,
        b_field=_ex2_b,
        f_quadrants=(_ex2_f1, _ex2_f2, _ex2_f3, _ex2_f4),
        q_edges=(_zero_trace, _zero_trace, _zero_trace, _zero_trace),
        d1=0.4, d2=0.6, alpha=2.0, beta=5.0,
        name="Example2",
    )


_REGISTRY: dict[str, Callable[[], ProblemSpec]] = {
    "example1": _make_example1,
    "example2": _make_example2,
}


def register_problem(name: str, factory: Callable[[], ProblemSpec]) -> None:
    """Register a custom problem factory under a lookup name."""
    _REGISTRY[name.lower()] = factory


def builtin_problem(name: str) -> ProblemSpec:
    """Look up a registered problem by name (case-insensitive)."""
    key = name.lower()
    if key not in _REGISTRY:
        known = ", ".join(sorted(_REGISTRY))
        raise MalformedSpec(f"unknown problem {name!r} (known: {known})")
    return _REGISTRY[key]()


def problem_names() -> list[str]:
    return sorted(_REGISTRY)


def check_mesh_parameter(N: int) -> None:
    if N < 8 or N % 8 != 0:
        raise BadN(f"N must be a multiple of 8 and at least 8, got {N}")


def sample_field(fld: ScalarField, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Evaluate a scalar field on the tensor grid, shape (len(ys), len(xs)).

    Tries a single broadcast call first (all builtin fields support it) and
    falls back to pointwise evaluation for callables that do not.
    """
    X, Y = np.meshgrid(xs, ys)
    try:
        vals = np.broadcast_to(np.asarray(fld(X, Y), dtype=float), X.shape)
        return np.array(vals, dtype=float)
    except Exception:
        out = np.empty(X.shape)
        for j in range(X.shape[0]):
            for i in range(X.shape[1]):
                out[j, i] = float(fld(X[j, i], Y[j, i]))
        return out


def validate(spec: ProblemSpec, N: int) -> ValidationReport:
    """Check the problem hypotheses by sampling on the target mesh.

    Coefficient positivity (a >= alpha, b >= beta^2) is checked at every
    mesh point; a violation is an error.  The small-layer condition
    d > 8 (eps/beta) ln N merely separates the fitted regime from the
    classical one, so its failure is reported as a warning.
    """
    check_mesh_parameter(N)
    from . import mesh as mesh_mod
    report = ValidationReport(ok=True)

    tm = mesh_mod.build_tensor_mesh(spec, N)
    xs, ys = tm.x.points, tm.y.points
    beta_sq = spec.beta ** 2
    a_vals = sample_field(spec.a_field, xs, ys)
    b_vals = sample_field(spec.b_field, xs, ys)
    for fname, vals, bound, bname in (("a", a_vals, spec.alpha, "alpha"),
                                      ("b", b_vals, beta_sq, "beta^2")):
        bad = np.argwhere(vals < bound)
        for j, i in bad[:5]:
            report.errors.append(
                f"{fname}({xs[i]:.6g},{ys[j]:.6g}) = {vals[j, i]:.6g} "
                f"< {bname} = {bound:.6g}")
        if len(bad) > 5:
            report.errors.append(
                f"... and {len(bad) - 5} more {fname} positivity violations")

    threshold = 8.0 * (spec.epsilon / spec.beta) * math.log(N)
    for label, d in (("d1", spec.d1), ("d2", spec.d2)):
        if d <= threshold:
            report.warnings.append(
                f"{label} = {d:.6g} <= 8 (eps/beta) ln N = {threshold:.6g}: "
                "layer width is not small against the subdomain (classical regime)")

    corners = [
        (spec.q_edges[0](0.0), spec.q_edges[1](0.0), "southwest"),
        (spec.q_edges[2](0.0), spec.q_edges[1](1.0), "southeast"),
        (spec.q_edges[0](1.0), spec.q_edges[3](0.0), "northwest"),
        (spec.q_edges[2](1.0), spec.q_edges[3](1.0), "northeast"),
    ]
    for va, vb, where in corners:
        if abs(float(va) - float(vb)) > 1e-14 * max(1.0, abs(float(va))):
            report.warnings.append(
                f"boundary traces disagree at the {where} corner: {va} vs {vb}")

    report.ok = not report.errors
    return report
