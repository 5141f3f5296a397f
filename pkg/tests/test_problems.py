import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cd2d import (
    ProblemSpec,
    Side,
    QuadrantId,
    builtin_problem,
    check_mesh_parameter,
    jump_f_across_x,
    jump_f_across_y,
    problem_names,
    quadrant_of,
    register_problem,
    sample_field,
    source_at,
    validate,
)
from cd2d.errors import BadN, MalformedSpec, OnDiscontinuityWithoutSide, OutOfDomain
from cd2d.problems import _REGISTRY


def test_builtin_names():
    names = problem_names()
    assert "example1" in names
    assert "example2" in names


def test_builtin_lookup_case_insensitive():
    a = builtin_problem("Example1")
    b = builtin_problem("example1")
    assert a.d1 == b.d1 == 0.5


def test_builtin_unknown():
    with pytest.raises(MalformedSpec):
        builtin_problem("nosuch")


def test_example1_data(ex1):
    assert ex1.d1 == 0.5 and ex1.d2 == 0.5
    assert ex1.alpha == 2.0 and ex1.beta == 5.0
    # constant coefficients
    assert ex1.a_field(0.1, 0.9) == 2.0
    assert ex1.b_field(0.7, 0.2) == 25.0
    # piecewise-constant source, one value per quadrant
    vals = [f(0.1, 0.1) for f in ex1.f_quadrants]
    assert vals == [0.5, 0.6, -0.6, -0.5]
    for q in ex1.q_edges:
        assert q(0.3) == 0.0


def test_example2_data(ex2):
    assert ex2.d1 == 0.4 and ex2.d2 == 0.6
    assert ex2.alpha == 2.0 and ex2.beta == 5.0
    assert ex2.a_field(0.25, 0.9) == pytest.approx(4.25)
    assert ex2.b_field(0.5, 0.4) == pytest.approx(25.1)
    for q in ex2.q_edges:
        assert q(0.3) == 0.0


def test_quadrant_of(ex1):
    assert quadrant_of(ex1, 0.25, 0.25) is QuadrantId.Q1
    assert quadrant_of(ex1, 0.75, 0.25) is QuadrantId.Q2
    assert quadrant_of(ex1, 0.25, 0.75) is QuadrantId.Q3
    assert quadrant_of(ex1, 0.75, 0.75) is QuadrantId.Q4


def test_quadrant_of_on_lines(ex1):
    with pytest.raises(OnDiscontinuityWithoutSide):
        quadrant_of(ex1, 0.5, 0.25)
    with pytest.raises(OnDiscontinuityWithoutSide):
        quadrant_of(ex1, 0.25, 0.5)
    assert quadrant_of(ex1, 0.5, 0.25, side_x=Side.MINUS) is QuadrantId.Q1
    assert quadrant_of(ex1, 0.5, 0.25, side_x=Side.PLUS) is QuadrantId.Q2
    assert quadrant_of(ex1, 0.5, 0.5, side_x=Side.PLUS, side_y=Side.PLUS) is QuadrantId.Q4


def test_quadrant_of_out_of_domain(ex1):
    with pytest.raises(OutOfDomain):
        quadrant_of(ex1, -0.1, 0.5)
    with pytest.raises(OutOfDomain):
        quadrant_of(ex1, 0.5, 1.5)


def test_source_at_off_lines(ex1):
    assert source_at(ex1, 0.2, 0.2) == 0.5
    assert source_at(ex1, 0.8, 0.2) == 0.6
    assert source_at(ex1, 0.2, 0.8) == -0.6
    assert source_at(ex1, 0.8, 0.8) == -0.5


def test_source_at_requires_side_on_lines(ex1):
    with pytest.raises(OnDiscontinuityWithoutSide):
        source_at(ex1, 0.5, 0.3)
    with pytest.raises(OnDiscontinuityWithoutSide):
        source_at(ex1, 0.3, 0.5)
    assert source_at(ex1, 0.5, 0.3, side_x=Side.MINUS) == 0.5
    assert source_at(ex1, 0.5, 0.3, side_x=Side.PLUS) == 0.6
    assert source_at(ex1, 0.3, 0.5, side_y=Side.PLUS) == -0.6
    assert source_at(ex1, 0.5, 0.5, side_x=Side.PLUS, side_y=Side.PLUS) == -0.5


def test_jump_example1(ex1):
    # below y = d2 the source steps from 0.5 to 0.6 across x = d1
    assert jump_f_across_x(ex1, 0.2) == pytest.approx(0.1)
    assert jump_f_across_x(ex1, 0.8) == pytest.approx(0.1)
    assert jump_f_across_y(ex1, 0.2) == pytest.approx(-1.1)
    assert jump_f_across_y(ex1, 0.8) == pytest.approx(-1.1)


def test_jump_example2_value(ex2):
    # hand values at y = 0.25: left 1 + 0.4 + 0.25, right -(1 + 0.4^2 0.25^2)
    y = 0.25
    left = source_at(ex2, 0.4, y, side_x=Side.MINUS)
    right = source_at(ex2, 0.4, y, side_x=Side.PLUS)
    assert left == pytest.approx(1.65)
    assert right == pytest.approx(-1.01)
    assert jump_f_across_x(ex2, y) == pytest.approx(-2.66)
    assert jump_f_across_x(ex2, y) == pytest.approx(right - left)


def test_jump_requires_off_line(ex1):
    with pytest.raises(OnDiscontinuityWithoutSide):
        jump_f_across_x(ex1, 0.5)
    with pytest.raises(OnDiscontinuityWithoutSide):
        jump_f_across_y(ex1, 0.5)


@given(x=st.floats(0.0, 1.0), y=st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_quadrant_partition(x, y):
    spec = builtin_problem("example1")
    on_x = x == spec.d1
    on_y = y == spec.d2
    if on_x or on_y:
        with pytest.raises(OnDiscontinuityWithoutSide):
            quadrant_of(spec, x, y)
        q = quadrant_of(spec, x, y, side_x=Side.MINUS if on_x else Side.NOT_ON_LINE,
                        side_y=Side.MINUS if on_y else Side.NOT_ON_LINE)
    else:
        q = quadrant_of(spec, x, y)
    assert q in QuadrantId


def test_spec_validation_errors(ex1):
    with pytest.raises(MalformedSpec):
        ProblemSpec(epsilon=0.0, a_field=ex1.a_field, b_field=ex1.b_field,
                    f_quadrants=ex1.f_quadrants, q_edges=ex1.q_edges,
                    d1=0.5, d2=0.5, alpha=2.0, beta=5.0)
    with pytest.raises(MalformedSpec):
        ProblemSpec(epsilon=1.5, a_field=ex1.a_field, b_field=ex1.b_field,
                    f_quadrants=ex1.f_quadrants, q_edges=ex1.q_edges,
                    d1=0.5, d2=0.5, alpha=2.0, beta=5.0)
    with pytest.raises(MalformedSpec):
        ProblemSpec(epsilon=0.1, a_field=ex1.a_field, b_field=ex1.b_field,
                    f_quadrants=ex1.f_quadrants, q_edges=ex1.q_edges,
                    d1=0.0, d2=0.5, alpha=2.0, beta=5.0)
    with pytest.raises(MalformedSpec):
        ProblemSpec(epsilon=0.1, a_field=ex1.a_field, b_field=ex1.b_field,
                    f_quadrants=ex1.f_quadrants, q_edges=ex1.q_edges,
                    d1=0.5, d2=1.0, alpha=2.0, beta=5.0)
    with pytest.raises(MalformedSpec):
        ProblemSpec(epsilon=0.1, a_field=ex1.a_field, b_field=ex1.b_field,
                    f_quadrants=ex1.f_quadrants, q_edges=ex1.q_edges,
                    d1=0.5, d2=0.5, alpha=0.0, beta=5.0)


def test_with_epsilon(ex1):
    s = ex1.with_epsilon(1e-4)
    assert s.epsilon == 1e-4
    assert s.d1 == ex1.d1 and s.a_field is ex1.a_field
    assert ex1.epsilon == 0.1  # original untouched


def test_check_mesh_parameter():
    check_mesh_parameter(8)
    check_mesh_parameter(64)
    for bad in (0, 4, 12, 20, -8, 7):
        with pytest.raises(BadN):
            check_mesh_parameter(bad)


def test_validate_clean(ex1):
    rep = validate(ex1.with_epsilon(1e-6), 64)
    assert rep.ok
    assert rep.errors == []
    assert rep.warnings == []


def test_validate_wide_layer_warning(ex1):
    # epsilon = 0.5: d2 = 0.5 < 8*(eps/beta)*ln N = 3.327 at N = 64
    rep = validate(ex1.with_epsilon(0.5), 64)
    assert rep.ok
    assert any("d2" in w or "layer" in w.lower() for w in rep.warnings)


def test_validate_coefficient_floor_violation(ex1):
    bad = ProblemSpec(epsilon=0.1, a_field=lambda x, y: 1.0, b_field=ex1.b_field,
                      f_quadrants=ex1.f_quadrants, q_edges=ex1.q_edges,
                      d1=0.5, d2=0.5, alpha=2.0, beta=5.0)
    rep = validate(bad, 16)
    assert not rep.ok
    assert any("a(" in e or "alpha" in e for e in rep.errors)


def test_validate_bad_n(ex1):
    with pytest.raises(BadN):
        validate(ex1, 12)


def test_sample_field_matches_pointwise(ex2):
    xs = np.linspace(0.0, 1.0, 7)
    ys = np.linspace(0.0, 1.0, 5)
    grid = sample_field(ex2.a_field, xs, ys)
    assert grid.shape == (5, 7)
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            assert grid[j, i] == pytest.approx(ex2.a_field(x, y))


def test_sample_field_scalar_only_callable():
    def fussy(x, y):
        if not np.isscalar(x) and not isinstance(x, float):
            raise TypeError("scalars only")
        return float(x) + 2.0 * float(y)

    xs = np.array([0.0, 0.5])
    ys = np.array([0.25])
    grid = sample_field(fussy, xs, ys)
    assert grid[0, 0] == pytest.approx(0.5)
    assert grid[0, 1] == pytest.approx(1.0)


def test_register_problem(ex1):
    name = "unit_register_probe"
    try:
        register_problem(name, lambda: ex1.with_epsilon(1e-2))
        got = builtin_problem(name)
        assert got.epsilon == 1e-2
        assert name in problem_names()
    finally:
        _REGISTRY.pop(name, None)
