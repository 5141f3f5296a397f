import dataclasses
import io
import json
import math

import numpy as np
import pytest

from cd2d import (
    ConvergenceTable,
    DoubleMeshMode,
    GridFunction,
    Variant,
    bisect,
    build_tensor_mesh,
    double_mesh_error,
    double_mesh_error_bilinear,
    manufactured_problem,
    manufactured_solution_study,
    mms_exact,
    order_estimate,
    run_cell,
    run_sweep,
    write_table_csv,
)
from cd2d.analysis import format_table_text, sweep_to_dict
from cd2d.assembly import assemble_system
from cd2d.errors import MeshMismatch, NonPositiveError
from cd2d.mesh import compute_transition_points
from cd2d.solve import solve_direct

REL = 1e-6   # frozen double-mesh regression values


def test_order_estimate_values():
    assert order_estimate(6.807e-3, 3.672e-3) == pytest.approx(0.8905, abs=1e-3)
    assert order_estimate(5e-3, 5e-3) == 0.0
    assert order_estimate(4e-2, 1e-2) == pytest.approx(2.0, rel=1e-12)


def test_order_estimate_rejects_nonpositive():
    with pytest.raises(NonPositiveError):
        order_estimate(0.0, 1e-3)
    with pytest.raises(NonPositiveError):
        order_estimate(1e-3, -1e-3)
    with pytest.raises(NonPositiveError):
        order_estimate(float("nan"), 1e-3)


def test_double_mesh_error_hand_values(ex1):
    tm = build_tensor_mesh(ex1, 8)
    fine_mesh = bisect(tm)
    coarse = GridFunction(mesh=tm, values=np.ones(81))
    fine_vals = np.ones((17, 17))
    assert double_mesh_error(coarse, GridFunction(
        mesh=fine_mesh, values=fine_vals.ravel().copy())) == 0.0
    bumped = fine_vals.copy()
    bumped[6, 4] += 0.25          # coarse point (2, 3)
    assert double_mesh_error(coarse, GridFunction(
        mesh=fine_mesh, values=bumped.ravel())) == 0.25
    odd = fine_vals.copy()
    odd[5, 3] += 9.0              # midpoint, invisible to the estimate
    assert double_mesh_error(coarse, GridFunction(
        mesh=fine_mesh, values=odd.ravel())) == 0.0


def test_double_mesh_error_mismatch(ex1):
    tm8 = build_tensor_mesh(ex1, 8)
    tm32 = build_tensor_mesh(ex1, 32)
    with pytest.raises(MeshMismatch):
        double_mesh_error(GridFunction(mesh=tm8, values=np.zeros(81)),
                          GridFunction(mesh=tm32, values=np.zeros(33 ** 2)))
    # a regenerated 2N mesh has different transition widths, so it does
    # not nest even though the interval count matches
    tm16 = build_tensor_mesh(ex1, 16)
    with pytest.raises(MeshMismatch):
        double_mesh_error(GridFunction(mesh=tm8, values=np.zeros(81)),
                          GridFunction(mesh=tm16, values=np.zeros(17 ** 2)))


def test_bilinear_estimate_matches_on_nested_pair(ex1):
    spec = ex1.with_epsilon(1e-2)
    tm = build_tensor_mesh(spec, 16)
    coarse = solve_direct(assemble_system(spec, tm))
    fine_mesh = bisect(tm)
    fine = solve_direct(assemble_system(spec, fine_mesh))
    exact = double_mesh_error(coarse, fine)
    interpolated = double_mesh_error_bilinear(coarse, fine)
    assert interpolated == pytest.approx(exact, rel=1e-9, abs=1e-14)


def test_run_cell_metadata(ex1):
    cell = run_cell(ex1.with_epsilon(1e-2), 16)
    assert cell.ok and cell.error is None
    assert cell.epsilon == 1e-2 and cell.N == 16
    p = compute_transition_points(ex1.with_epsilon(1e-2), 16)
    assert cell.sigma_x == p.sigma_x and cell.sigma_y == p.sigma_y
    assert 0.0 < cell.d_eps < 1.0
    assert cell.residual_coarse <= 1e-10 and cell.residual_fine <= 1e-10
    assert cell.max_u_coarse <= 0.3 and cell.max_u_fine <= 0.3
    assert cell.wall_time > 0.0
    assert cell.warnings == []


def test_run_cell_warning_passthrough(ex1):
    cell = run_cell(ex1.with_epsilon(0.5), 16)
    assert cell.ok
    assert any("classical regime" in w for w in cell.warnings)


def test_run_cell_infeasible_geometry(ex1):
    spec = dataclasses.replace(ex1, d2=0.9, epsilon=0.5)
    cell = run_cell(spec, 8)
    assert not cell.ok
    assert "GeometryError" in cell.error
    assert math.isnan(cell.d_eps)


def test_run_sweep_missing_cells_not_fatal(ex1):
    spec = dataclasses.replace(ex1, d2=0.9)
    result = run_sweep(spec, [0.5, 1e-3], [8, 16])
    D = result.table.D_eps
    assert np.all(np.isnan(D[0]))
    assert np.all(np.isfinite(D[1]))
    assert not result.table.complete
    # uniform row falls back to the finite entries
    assert np.array_equal(result.table.D_uniform, D[1])
    assert len(result.cells) == 4
    assert result.cells[0].error and result.cells[3].ok


def test_run_sweep_ordering_and_shape(ex1):
    result = run_sweep(ex1, [1e-1, 1e-2], [8, 16], Variant.TRANSFORMED,
                       DoubleMeshMode.BISECT)
    assert result.table.D_eps.shape == (2, 2)
    assert [ (c.epsilon, c.N) for c in result.cells ] == [
        (1e-1, 8), (1e-1, 16), (1e-2, 8), (1e-2, 16)]
    assert result.problem == "Example1"
    # every D entry matches its cell
    for idx, cell in enumerate(result.cells):
        r, c = divmod(idx, 2)
        assert result.table.D_eps[r, c] == cell.d_eps


def test_run_sweep_worker_count_invariant(ex1):
    serial = run_sweep(ex1, [1e-1, 1e-2], [8, 16], workers=1)
    parallel = run_sweep(ex1, [1e-1, 1e-2], [8, 16], workers=2)
    assert np.array_equal(serial.table.D_eps, parallel.table.D_eps)


def test_double_mesh_regression_example1(ex1):
    frozen = [
        (1e-1, 32, Variant.RAW, DoubleMeshMode.BISECT, 1.292687941e-3),
        (1e-2, 32, Variant.RAW, DoubleMeshMode.BISECT, 1.463513679e-3),
        (1e-2, 32, Variant.RAW, DoubleMeshMode.REGENERATE, 1.207273793e-3),
        (1e-4, 64, Variant.TRANSFORMED, DoubleMeshMode.BISECT, 8.896997079e-4),
    ]
    for eps, N, variant, mode, expect in frozen:
        cell = run_cell(ex1.with_epsilon(eps), N, variant, mode)
        assert cell.d_eps == pytest.approx(expect, rel=REL), (eps, N, variant)


def test_double_mesh_regression_example2(ex2):
    frozen = [
        (1e-1, 32, DoubleMeshMode.BISECT, 1.403407836e-2),
        (1e-4, 32, DoubleMeshMode.BISECT, 1.714229588e-2),
        (1e-4, 32, DoubleMeshMode.REGENERATE, 1.637559394e-2),
    ]
    for eps, N, mode, expect in frozen:
        cell = run_cell(ex2.with_epsilon(eps), N, Variant.TRANSFORMED, mode)
        assert cell.d_eps == pytest.approx(expect, rel=REL), (eps, N, mode)


def test_manufactured_exact_solution_boundary():
    for t in np.linspace(0.0, 1.0, 9):
        assert abs(mms_exact(0.0, t)) < 1e-15
        assert abs(mms_exact(1.0, t)) < 1e-15
        assert abs(mms_exact(t, 0.0)) < 1e-15
        assert abs(mms_exact(t, 1.0)) < 1e-15


def test_manufactured_problem_is_continuous_across_lines():
    spec = manufactured_problem()
    for y in (0.2, 0.8):
        left = spec.f_quadrants[0](spec.d1, y)
        right = spec.f_quadrants[1](spec.d1, y)
        assert left == right


def test_manufactured_errors_frozen():
    table = manufactured_solution_study([16, 32, 64], Variant.TRANSFORMED)
    errs = table.D_eps[0]
    assert errs[0] == pytest.approx(4.695255017e-2, rel=REL)
    assert errs[1] == pytest.approx(2.246188275e-2, rel=REL)
    assert errs[2] == pytest.approx(1.076484074e-2, rel=REL)
    assert table.E_uniform[0] == pytest.approx(1.0637, abs=1e-3)
    assert table.E_uniform[1] == pytest.approx(1.0612, abs=1e-3)
    raw = manufactured_solution_study([16, 32], Variant.RAW)
    assert raw.D_eps[0][0] == pytest.approx(4.456034453e-2, rel=REL)
    assert raw.D_eps[0][1] == pytest.approx(2.171497943e-2, rel=REL)


def test_convergence_table_reduction_with_missing():
    D = np.array([[1e-2, np.nan], [2e-2, 1e-2]])
    t = ConvergenceTable.from_errors([1e-1, 1e-2], [8, 16], D)
    assert t.D_uniform[0] == 2e-2 and t.D_uniform[1] == 1e-2
    assert t.E_uniform[0] == pytest.approx(1.0)
    assert not t.complete
    empty = ConvergenceTable.from_errors([1e-1], [8, 16],
                                         np.array([[np.nan, 1e-3]]))
    assert math.isnan(empty.D_uniform[0])
    assert math.isnan(empty.E_uniform[0])


def test_csv_golden():
    D = np.array([[1.234e-2, 6.17e-3], [2e-2, 1e-2]])
    t = ConvergenceTable.from_errors([1e-1, 1e-3], [8, 16], D)
    buf = io.StringIO()
    write_table_csv(t, buf)
    assert buf.getvalue() == (
        "eps,8,16\n"
        "1.0e-01,1.234e-02,6.170e-03\n"
        "1.0e-03,2.000e-02,1.000e-02\n"
        "D,2.000e-02,1.000e-02\n"
        "E,1.000,\n"
    )


def test_text_table_marks_missing():
    D = np.array([[np.nan, 1e-3]])
    t = ConvergenceTable.from_errors([1e-2], [8, 16], D)
    text = format_table_text(t)
    lines = text.splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("eps")
    assert "-" in lines[1]
    assert "-" in lines[3]       # E needs two finite uniform errors


def test_sweep_dict_json_round_trip(ex1):
    spec = dataclasses.replace(ex1, d2=0.9)   # one eps row will fail
    result = run_sweep(spec, [0.5, 1e-2], [8])
    payload = sweep_to_dict(result)
    text = json.dumps(payload)
    back = json.loads(text)
    assert back["problem"] == "Example1"
    assert back["variant"] == "transformed"
    assert back["D_eps"][0][0] is None
    assert back["D_eps"][1][0] == pytest.approx(result.cells[1].d_eps)
    assert back["cells"][0]["error"]
