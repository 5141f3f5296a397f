"""Double-mesh error estimation, convergence sweeps and the smooth oracle.

The double-mesh estimate for a computed solution U on the N-mesh is

    D(N, eps) = max over coarse points |U2(x_i, y_j) - U(x_i, y_j)|

where U2 solves the same problem on a mesh with 2N intervals per axis.
Two conventions for the 2N mesh are supported:

* bisect (default): insert interval midpoints into the N-mesh, keeping the
  transition widths of N.  Coarse points then exist bitwise in the fine
  mesh and no interpolation is involved.
* regenerate: build a fresh fitted mesh with parameter 2N, so the
  transition widths use ln(2N).  Coarse points need not be fine-mesh
  points; the fine solution is read through bilinear interpolation.

The uniform error is D(N) = max over eps of D(N, eps) and the estimated
order E(N) = log2(D(N) / D(2N)).
"""
from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import mesh as mesh_mod
from .assembly import Variant, assemble_system
from .errors import CD2DError, MeshMismatch, NonPositiveError
from .problems import ProblemSpec, validate
from .solve import GridFunction, residual_norm, solve_direct


class DoubleMeshMode(enum.Enum):
    BISECT = "bisect"
    REGENERATE = "regenerate"


def order_estimate(d_n: float, d_2n: float) -> float:
    """log2(D(N) / D(2N)); both inputs must be strictly positive."""
    if not (d_n > 0.0 and d_2n > 0.0):
        raise NonPositiveError(
            f"order estimate needs positive errors, got {d_n} and {d_2n}")
    return math.log2(d_n / d_2n)


def double_mesh_error(coarse: GridFunction, fine: GridFunction) -> float:
    """Max difference at coarse points; fine mesh must be the exact bisection."""
    if fine.n != 2 * coarse.n:
        raise MeshMismatch(f"fine mesh has {fine.n} intervals, expected {2 * coarse.n}")
    if not (np.array_equal(fine.mesh.x.points[::2], coarse.mesh.x.points)
            and np.array_equal(fine.mesh.y.points[::2], coarse.mesh.y.points)):
        raise MeshMismatch("fine mesh points at even indices differ from coarse points")
    diff = fine.grid()[::2, ::2] - coarse.grid()
    return float(np.max(np.abs(diff)))


def double_mesh_error_bilinear(coarse: GridFunction, fine: GridFunction) -> float:
    """Max difference at coarse points, fine solution read bilinearly.

    Used in regenerate mode where the two fitted meshes do not nest.
    """
    interp = RegularGridInterpolator(
        (fine.mesh.y.points, fine.mesh.x.points), fine.grid(), method="linear")
    X, Y = np.meshgrid(coarse.mesh.x.points, coarse.mesh.y.points)
    fine_at_coarse = interp(np.stack([Y.ravel(), X.ravel()], axis=1))
    diff = fine_at_coarse - coarse.values
    return float(np.max(np.abs(diff)))


@dataclass
class CellResult:
    epsilon: float
    N: int
    d_eps: float = float("nan")
    sigma_x: float = float("nan")
    sigma_y: float = float("nan")
    residual_coarse: float = float("nan")
    residual_fine: float = float("nan")
    max_u_coarse: float = float("nan")
    max_u_fine: float = float("nan")
    wall_time: float = 0.0
    warnings: list[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and math.isfinite(self.d_eps)


def run_cell(spec: ProblemSpec, N: int,
             variant: Variant = Variant.TRANSFORMED,
             mode: DoubleMeshMode = DoubleMeshMode.BISECT) -> CellResult:
    """Solve one (eps, N) cell: coarse solve, companion solve, estimate."""
    cell = CellResult(epsilon=spec.epsilon, N=N)
    start = time.perf_counter()
    try:
        report = validate(spec, N)
        cell.warnings = list(report.warnings)
        if not report.ok:
            raise CD2DError("; ".join(report.errors))
        params = mesh_mod.compute_transition_points(spec, N)
        cell.sigma_x, cell.sigma_y = params.sigma_x, params.sigma_y
        coarse_mesh = mesh_mod.TensorMesh(
            x=mesh_mod.build_mesh_x(params, spec.d1),
            y=mesh_mod.build_mesh_y(params, spec.d2))
        coarse_sys = assemble_system(spec, coarse_mesh, variant)
        coarse = solve_direct(coarse_sys)
        cell.residual_coarse = residual_norm(coarse_sys, coarse)
        cell.max_u_coarse = coarse.max_norm()

        if mode is DoubleMeshMode.BISECT:
            fine_mesh = mesh_mod.bisect(coarse_mesh)
        else:
            fine_mesh = mesh_mod.build_tensor_mesh(spec, 2 * N)
        fine_sys = assemble_system(spec, fine_mesh, variant)
        fine = solve_direct(fine_sys)
        cell.residual_fine = residual_norm(fine_sys, fine)
        cell.max_u_fine = fine.max_norm()

        if mode is DoubleMeshMode.BISECT:
            cell.d_eps = double_mesh_error(coarse, fine)
        else:
            cell.d_eps = double_mesh_error_bilinear(coarse, fine)
    except (CD2DError, np.linalg.LinAlgError, MemoryError) as exc:
        cell.error = f"{type(exc).__name__}: {exc}"
    cell.wall_time = time.perf_counter() - start
    return cell


def _cell_worker(args) -> CellResult:
    spec, N, variant_value, mode_value = args
    return run_cell(spec, N, Variant(variant_value), DoubleMeshMode(mode_value))


@dataclass
class ConvergenceTable:
    epsilons: list[float]
    Ns: list[int]
    D_eps: np.ndarray          # shape (len(epsilons), len(Ns)), nan = missing
    D_uniform: np.ndarray      # shape (len(Ns),)
    E_uniform: np.ndarray      # shape (len(Ns) - 1,)

    @classmethod
    def from_errors(cls, epsilons: Sequence[float], Ns: Sequence[int],
                    D_eps: np.ndarray) -> "ConvergenceTable":
        D_eps = np.asarray(D_eps, dtype=float)
        n_cols = len(Ns)
        D_uniform = np.full(n_cols, np.nan)
        for k in range(n_cols):
            col = D_eps[:, k]
            finite = col[np.isfinite(col)]
            if finite.size:
                D_uniform[k] = finite.max()
        E_uniform = np.full(max(n_cols - 1, 0), np.nan)
        for k in range(n_cols - 1):
            if D_uniform[k] > 0.0 and D_uniform[k + 1] > 0.0:
                E_uniform[k] = math.log2(D_uniform[k] / D_uniform[k + 1])
        return cls(epsilons=list(epsilons), Ns=list(Ns), D_eps=D_eps,
                   D_uniform=D_uniform, E_uniform=E_uniform)

    @property
    def complete(self) -> bool:
        return bool(np.all(np.isfinite(self.D_eps)))


@dataclass
class SweepResult:
    table: ConvergenceTable
    cells: list[CellResult]
    variant: Variant
    mode: DoubleMeshMode
    problem: str


def run_sweep(spec: ProblemSpec, epsilons: Sequence[float], Ns: Sequence[int],
              variant: Variant = Variant.TRANSFORMED,
              mode: DoubleMeshMode = DoubleMeshMode.BISECT,
              workers: int = 1) -> SweepResult:
    """Fill the (eps, N) error table; failed cells are missing, not fatal."""
    jobs = [(spec.with_epsilon(eps), N, variant.value, mode.value)
            for eps in epsilons for N in Ns]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_cell_worker, jobs))
    else:
        cells = [_cell_worker(job) for job in jobs]
    D = np.full((len(epsilons), len(Ns)), np.nan)
    for idx, cell in enumerate(cells):
        r, c = divmod(idx, len(Ns))
        if cell.ok:
            D[r, c] = cell.d_eps
    table = ConvergenceTable.from_errors(epsilons, Ns, D)
    return SweepResult(table=table, cells=cells, variant=variant, mode=mode,
                       problem=spec.name)


# ---------------------------------------------------------------------------
# Smooth manufactured oracle: exact solution u*(x,y) = x sin(pi x) sin(pi y)
# with constant a = 2, b = 25, eps = 0.1, d1 = d2 = 1/2 and the same source
# expression on all four quadrants, so the interface rows see a continuous f.

_MMS_EPS = 0.1
_MMS_A = 2.0
_MMS_B = 25.0


def mms_exact(x, y):
    return x * np.sin(np.pi * x) * np.sin(np.pi * y)


def _mms_a(x, y):
    return _MMS_A


def _mms_b(x, y):
    return _MMS_B


def _mms_f(x, y):
    pi = np.pi
    sx, cx, sy = np.sin(pi * x), np.cos(pi * x), np.sin(pi * y)
    lap = 2.0 * pi * cx * sy - 2.0 * pi ** 2 * x * sx * sy
    ux = sx * sy + pi * x * cx * sy
    return -_MMS_EPS ** 2 * lap + _MMS_A * ux + _MMS_B * x * sx * sy


def _zero(t):
    return 0.0


def manufactured_problem() -> ProblemSpec:
    return ProblemSpec(
        epsilon=_MMS_EPS,
        a_field=_mms_a,
        b_field=_mms_b,
        f_quadrants=(_mms_f, _mms_f, _mms_f, _mms_f),
        q_edges=(_zero, _zero, _zero, _zero),
        d1=0.5, d2=0.5, alpha=2.0, beta=5.0,
        name="manufactured",
    )


def manufactured_solution_study(Ns: Sequence[int],
                                variant: Variant = Variant.TRANSFORMED
                                ) -> ConvergenceTable:
    """Exact max-norm errors against u* on the fitted mesh, per N."""
    spec = manufactured_problem()
    errors = np.full((1, len(Ns)), np.nan)
    for k, N in enumerate(Ns):
        tm = mesh_mod.build_tensor_mesh(spec, N)
        system = assemble_system(spec, tm, variant)
        solution = solve_direct(system)
        X, Y = np.meshgrid(tm.x.points, tm.y.points)
        exact = mms_exact(X, Y).ravel()
        errors[0, k] = float(np.max(np.abs(solution.values - exact)))
    return ConvergenceTable.from_errors([spec.epsilon], Ns, errors)


# ---------------------------------------------------------------------------
# Report writers.  The CSV layout mirrors the reference tables: one header
# row of Ns, one row per eps, then the uniform D row and the E row (one
# fewer entry; the last column stays empty).

def _fmt_d(v: float) -> str:
    return f"{v:.3e}" if math.isfinite(v) else ""


def _fmt_e(v: float) -> str:
    return f"{v:.3f}" if math.isfinite(v) else ""


def write_table_csv(table: ConvergenceTable, stream: IO[str]) -> None:
    stream.write("eps," + ",".join(str(n) for n in table.Ns) + "\n")
    for r, eps in enumerate(table.epsilons):
        cells = ",".join(_fmt_d(v) for v in table.D_eps[r])
        stream.write(f"{eps:.1e},{cells}\n")
    stream.write("D," + ",".join(_fmt_d(v) for v in table.D_uniform) + "\n")
    e_cells = [_fmt_e(v) for v in table.E_uniform] + [""]
    stream.write("E," + ",".join(e_cells) + "\n")


def format_table_text(table: ConvergenceTable) -> str:
    """Aligned plain-text rendering for terminal output."""
    width = 11
    lines = []
    header = "eps".ljust(10) + "".join(str(n).rjust(width) for n in table.Ns)
    lines.append(header)
    for r, eps in enumerate(table.epsilons):
        cells = "".join((_fmt_d(v) or "-").rjust(width) for v in table.D_eps[r])
        lines.append(f"{eps:.1e}".ljust(10) + cells)
    lines.append("D".ljust(10)
                 + "".join((_fmt_d(v) or "-").rjust(width) for v in table.D_uniform))
    e_cells = [(_fmt_e(v) or "-").rjust(width) for v in table.E_uniform]
    lines.append("E".ljust(10) + "".join(e_cells))
    return "\n".join(lines)


def sweep_to_dict(result: SweepResult) -> dict:
    def clean(v):
        return v if math.isfinite(v) else None

    return {
        "problem": result.problem,
        "variant": result.variant.value,
        "double_mesh": result.mode.value,
        "epsilons": result.table.epsilons,
        "Ns": result.table.Ns,
        "D_eps": [[clean(v) for v in row] for row in result.table.D_eps],
        "D": [clean(v) for v in result.table.D_uniform],
        "E": [clean(v) for v in result.table.E_uniform],
        "cells": [
            {
                "epsilon": c.epsilon,
                "N": c.N,
                "D_eps": clean(c.d_eps),
                "sigma_x": clean(c.sigma_x),
                "sigma_y": clean(c.sigma_y),
                "residual_coarse": clean(c.residual_coarse),
                "residual_fine": clean(c.residual_fine),
                "max_u_coarse": clean(c.max_u_coarse),
                "max_u_fine": clean(c.max_u_fine),
                "wall_time": c.wall_time,
                "warnings": c.warnings,
                "error": c.error,
            }
            for c in result.cells
        ],
    }
