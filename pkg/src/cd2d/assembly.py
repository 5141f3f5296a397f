"""Sparse assembly of the hybrid upwind scheme.

Row shapes, with n mesh intervals per axis and half = n/2:

* interior points: standard 5-point upwind row from the nonuniform
  second-difference operators plus a backward first difference
  (a > 0 fixes the upwind direction),

    -eps^2 (d2_xx + d2_yy) U + a Dx^- U + b U = f;

* the vertical interface x = d1 (i = half): by default the transformed
  3-point transmission row obtained by eliminating U at i = half -+ 2 from
  the one-sided derivative-matching condition; its coefficients couple only
  (half-1, j), (half, j), (half+1, j) and its right-hand side carries the
  weighted one-sided source values.  The raw variant keeps the 5-point
  derivative-matching row (one-sided three-point first derivatives from
  both sides, equal right-hand sides, so rhs 0);

* the horizontal line y = d2 (j = half): midpoint upwind row whose
  coefficients a, b and source f are averaged over the two y-neighbours
  (f is two-valued on the line itself, the neighbours are off the line);

* the cross point (half, half) takes the interface-x row of the active
  variant, with the two one-sided source values replaced by their
  y-neighbour averages in the transformed case;

* boundary points: Dirichlet identity rows with the edge traces; the four
  points where a discontinuity line meets the boundary use the trace of
  the edge they sit on (west/east win at corners).

Interior, midpoint, raw-interface and Dirichlet rows are oriented with a
positive diagonal coefficient.  The transformed row keeps its derived
orientation; its center coefficient is positive for Example 1 but is not
positive in general (Example 2 drives it negative), which m_matrix_check
reports.  Unknowns are ordered row-major, flat = j*(n+1) + i.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import SingularStructure, WrongKind
from .mesh import PointKind, TensorMesh
from .problems import ProblemSpec, Side, sample_field, source_at


class RowKind(enum.IntEnum):
    INTERIOR_UPWIND = 0
    INTERFACE_X_TRANSFORMED = 1
    INTERFACE_X_RAW = 2
    INTERFACE_Y_MIDPOINT = 3
    DIRICHLET = 4


class Variant(enum.Enum):
    TRANSFORMED = "transformed"
    RAW = "raw"


@dataclass
class StencilRow:
    center: tuple[int, int]
    entries: list[tuple[tuple[int, int], float]]
    rhs: float
    kind: RowKind


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    n: int
    mesh: TensorMesh
    variant: Variant
    row_kinds: np.ndarray   # int8 RowKind codes, flat row-major

    @property
    def dimension(self) -> int:
        return (self.n + 1) ** 2

    def flat_index(self, i: int, j: int) -> int:
        return j * (self.n + 1) + i

    def grid_index(self, k: int) -> tuple[int, int]:
        return k % (self.n + 1), k // (self.n + 1)


def flat_index(i: int, j: int, n: int) -> int:
    return j * (n + 1) + i


# ---------------------------------------------------------------------------
# Coefficient kernels.  Shared by the scalar reference rows and the
# vectorized bulk assembly so both paths do identical floating arithmetic.

def _upwind_coeffs(eps2, hL, hR, kB, kT, a_val, b_val):
    """Center, west, east, south, north coefficients of the 5-point row."""
    hbar = 0.5 * (hL + hR)
    kbar = 0.5 * (kB + kT)
    west = -(eps2 / (hbar * hL) + a_val / hL)
    east = -(eps2 / (hbar * hR))
    south = -(eps2 / (kbar * kB))
    north = -(eps2 / (kbar * kT))
    center = (eps2 * (1.0 / (hbar * hL) + 1.0 / (hbar * hR)
                      + 1.0 / (kbar * kB) + 1.0 / (kbar * kT))
              + a_val / hL + b_val)
    return center, west, east, south, north


def _transformed_coeffs(eps2, h1, H2, a_m, a_p, b_m, b_p):
    """3-point transmission row; returns (center, west, east, E_minus).

    E_minus = eps^2 + h1*a_m is the pivot of the elimination on the fine
    side; the rhs weights are h1/(4 E_minus) and H2/(4 eps^2).
    """
    e_minus = eps2 + h1 * a_m
    center = (3.0 / (2.0 * h1) + 1.0 / H2
              - eps2 / (2.0 * h1 * e_minus) - a_p / (2.0 * eps2))
    west = (-2.0 / h1
            + (h1 / (2.0 * e_minus))
            * (2.0 * eps2 / h1 ** 2 + a_m / h1 + b_m / 2.0))
    east = -1.0 / H2 + a_p / (2.0 * eps2) + H2 * b_p / (4.0 * eps2)
    return center, west, east, e_minus


def _raw_interface_coeffs(h1, H2):
    """5-point derivative-matching row, entries at offsets -2..+2."""
    return (1.0 / (2.0 * h1),
            -2.0 / h1,
            3.0 / (2.0 * h1) + 3.0 / (2.0 * H2),
            -2.0 / H2,
            1.0 / (2.0 * H2))


# ---------------------------------------------------------------------------
# Scalar reference rows.

def assemble_interior_row(spec: ProblemSpec, mesh: TensorMesh,
                          i: int, j: int) -> StencilRow:
    if mesh.kind(i, j) is not PointKind.INTERIOR:
        raise WrongKind(f"({i},{j}) is {mesh.kind(i, j).value}, not interior")
    xs, ys = mesh.x.points, mesh.y.points
    eps2 = spec.epsilon ** 2
    hL, hR = xs[i] - xs[i - 1], xs[i + 1] - xs[i]
    kB, kT = ys[j] - ys[j - 1], ys[j + 1] - ys[j]
    x, y = xs[i], ys[j]
    a_val = float(spec.a_field(x, y))
    b_val = float(spec.b_field(x, y))
    center, west, east, south, north = _upwind_coeffs(
        eps2, hL, hR, kB, kT, a_val, b_val)
    rhs = source_at(spec, x, y)
    entries = [((i, j), center), ((i - 1, j), west), ((i + 1, j), east),
               ((i, j - 1), south), ((i, j + 1), north)]
    return StencilRow(center=(i, j), entries=entries, rhs=rhs,
                      kind=RowKind.INTERIOR_UPWIND)


def assemble_interface_y_row(spec: ProblemSpec, mesh: TensorMesh,
                             i: int) -> StencilRow:
    j = mesh.n // 2
    if mesh.kind(i, j) is not PointKind.INTERFACE_Y:
        raise WrongKind(f"({i},{j}) is {mesh.kind(i, j).value}, not interface-y")
    xs, ys = mesh.x.points, mesh.y.points
    eps2 = spec.epsilon ** 2
    hL, hR = xs[i] - xs[i - 1], xs[i + 1] - xs[i]
    kB, kT = ys[j] - ys[j - 1], ys[j + 1] - ys[j]
    x = xs[i]
    a_hat = 0.5 * (float(spec.a_field(x, ys[j - 1])) + float(spec.a_field(x, ys[j + 1])))
    b_hat = 0.5 * (float(spec.b_field(x, ys[j - 1])) + float(spec.b_field(x, ys[j + 1])))
    f_hat = 0.5 * (source_at(spec, x, ys[j - 1]) + source_at(spec, x, ys[j + 1]))
    center, west, east, south, north = _upwind_coeffs(
        eps2, hL, hR, kB, kT, a_hat, b_hat)
    entries = [((i, j), center), ((i - 1, j), west), ((i + 1, j), east),
               ((i, j - 1), south), ((i, j + 1), north)]
    return StencilRow(center=(i, j), entries=entries, rhs=f_hat,
                      kind=RowKind.INTERFACE_Y_MIDPOINT)


def assemble_interface_x_row(spec: ProblemSpec, mesh: TensorMesh,
                             j: int) -> StencilRow:
    """Transformed 3-point transmission row at i = n/2 (cross point included)."""
    i = mesh.n // 2
    kind = mesh.kind(i, j)
    if kind not in (PointKind.INTERFACE_X, PointKind.CROSS):
        raise WrongKind(f"({i},{j}) is {kind.value}, not on the x-interface")
    xs, ys = mesh.x.points, mesh.y.points
    eps2 = spec.epsilon ** 2
    h1 = xs[i] - xs[i - 1]
    H2 = xs[i + 1] - xs[i]
    y = ys[j]
    a_m = float(spec.a_field(xs[i - 1], y))
    a_p = float(spec.a_field(xs[i + 1], y))
    b_m = float(spec.b_field(xs[i - 1], y))
    b_p = float(spec.b_field(xs[i + 1], y))
    center, west, east, e_minus = _transformed_coeffs(
        eps2, h1, H2, a_m, a_p, b_m, b_p)
    if kind is PointKind.CROSS:
        f_m = 0.5 * (source_at(spec, xs[i - 1], ys[j - 1])
                     + source_at(spec, xs[i - 1], ys[j + 1]))
        f_p = 0.5 * (source_at(spec, xs[i + 1], ys[j - 1])
                     + source_at(spec, xs[i + 1], ys[j + 1]))
    else:
        f_m = source_at(spec, xs[i - 1], y)
        f_p = source_at(spec, xs[i + 1], y)
    rhs = (h1 / (4.0 * e_minus)) * f_m + (H2 / (4.0 * eps2)) * f_p
    entries = [((i - 1, j), west), ((i, j), center), ((i + 1, j), east)]
    return StencilRow(center=(i, j), entries=entries, rhs=rhs,
                      kind=RowKind.INTERFACE_X_TRANSFORMED)


def assemble_interface_x_row_raw(spec: ProblemSpec, mesh: TensorMesh,
                                 j: int) -> StencilRow:
    """Raw 5-point derivative-matching row at i = n/2, rhs 0."""
    i = mesh.n // 2
    kind = mesh.kind(i, j)
    if kind not in (PointKind.INTERFACE_X, PointKind.CROSS):
        raise WrongKind(f"({i},{j}) is {kind.value}, not on the x-interface")
    xs = mesh.x.points
    h1 = xs[i] - xs[i - 1]
    H2 = xs[i + 1] - xs[i]
    c_mm, c_m, c_0, c_p, c_pp = _raw_interface_coeffs(h1, H2)
    entries = [((i - 2, j), c_mm), ((i - 1, j), c_m), ((i, j), c_0),
               ((i + 1, j), c_p), ((i + 2, j), c_pp)]
    return StencilRow(center=(i, j), entries=entries, rhs=0.0,
                      kind=RowKind.INTERFACE_X_RAW)


def assemble_dirichlet_row(spec: ProblemSpec, mesh: TensorMesh,
                           i: int, j: int) -> StencilRow:
    if mesh.kind(i, j) is not PointKind.BOUNDARY:
        raise WrongKind(f"({i},{j}) is {mesh.kind(i, j).value}, not boundary")
    n = mesh.n
    x, y = mesh.x.points[i], mesh.y.points[j]
    if i == 0:
        rhs = float(spec.q_edges[0](y))
    elif i == n:
        rhs = float(spec.q_edges[2](y))
    elif j == 0:
        rhs = float(spec.q_edges[1](x))
    else:
        rhs = float(spec.q_edges[3](x))
    return StencilRow(center=(i, j), entries=[((i, j), 1.0)], rhs=rhs,
                      kind=RowKind.DIRICHLET)


def assemble_row(spec: ProblemSpec, mesh: TensorMesh, i: int, j: int,
                 variant: Variant = Variant.TRANSFORMED) -> StencilRow:
    """Dispatch to the row builder matching the point classification."""
    kind = mesh.kind(i, j)
    if kind is PointKind.BOUNDARY:
        return assemble_dirichlet_row(spec, mesh, i, j)
    if kind is PointKind.INTERIOR:
        return assemble_interior_row(spec, mesh, i, j)
    if kind in (PointKind.INTERFACE_X, PointKind.CROSS):
        if variant is Variant.RAW:
            return assemble_interface_x_row_raw(spec, mesh, j)
        return assemble_interface_x_row(spec, mesh, j)
    return assemble_interface_y_row(spec, mesh, i)


# ---------------------------------------------------------------------------
# Full-system assembly.  Interior rows are laid down in bulk with numpy;
# the O(n) interface and boundary rows reuse the scalar builders, so the
# result is entry-for-entry identical with assembling every row one by one.

def _interior_blocks(spec: ProblemSpec, mesh: TensorMesh):
    n = mesh.n
    half = n // 2
    xs, ys = mesh.x.points, mesh.y.points
    eps2 = spec.epsilon ** 2
    hx = np.diff(xs)
    hy = np.diff(ys)
    idx = np.concatenate([np.arange(1, half), np.arange(half + 1, n)])
    I, J = np.meshgrid(idx, idx)
    X, Y = xs[I], ys[J]
    hL, hR = hx[I - 1], hx[I]
    kB, kT = hy[J - 1], hy[J]
    a_vals = np.broadcast_to(np.asarray(spec.a_field(X, Y), dtype=float), X.shape)
    b_vals = np.broadcast_to(np.asarray(spec.b_field(X, Y), dtype=float), X.shape)
    center, west, east, south, north = _upwind_coeffs(
        eps2, hL, hR, kB, kT, a_vals, b_vals)
    f_vals = np.empty(X.shape)
    left = I < half
    below = J < half
    quads = [(left & below, 0), (~left & below, 1),
             (left & ~below, 2), (~left & ~below, 3)]
    for mask, k in quads:
        xq, yq = X[mask], Y[mask]
        f_vals[mask] = np.broadcast_to(
            np.asarray(spec.f_quadrants[k](xq, yq), dtype=float), xq.shape)
    rows = (J * (n + 1) + I).ravel()
    coo_rows = np.concatenate([rows] * 5)
    coo_cols = np.concatenate([
        rows,
        (J * (n + 1) + (I - 1)).ravel(),
        (J * (n + 1) + (I + 1)).ravel(),
        ((J - 1) * (n + 1) + I).ravel(),
        ((J + 1) * (n + 1) + I).ravel(),
    ])
    coo_vals = np.concatenate([
        center.ravel(), west.ravel(), east.ravel(),
        south.ravel(), north.ravel(),
    ])
    return coo_rows, coo_cols, coo_vals, rows, f_vals.ravel()


def assemble_system(spec: ProblemSpec, mesh: TensorMesh,
                    variant: Variant = Variant.TRANSFORMED) -> LinearSystem:
    n = mesh.n
    half = n // 2
    dim = (n + 1) ** 2
    rhs = np.zeros(dim)
    row_kinds = np.empty(dim, dtype=np.int8)

    coo_rows, coo_cols, coo_vals, int_rows, f_int = _interior_blocks(spec, mesh)
    rhs[int_rows] = f_int
    row_kinds[int_rows] = int(RowKind.INTERIOR_UPWIND)

    extra_rows: list[int] = []
    extra_cols: list[int] = []
    extra_vals: list[float] = []

    def put(row: StencilRow) -> None:
        i, j = row.center
        k = flat_index(i, j, n)
        for (ci, cj), val in row.entries:
            extra_rows.append(k)
            extra_cols.append(flat_index(ci, cj, n))
            extra_vals.append(val)
        rhs[k] = row.rhs
        row_kinds[k] = int(row.kind)

    for j in range(1, n):
        put(assemble_row(spec, mesh, half, j, variant))
    for i in range(1, n):
        if i != half:
            put(assemble_interface_y_row(spec, mesh, i))
    for i in range(n + 1):
        put(assemble_dirichlet_row(spec, mesh, i, 0))
        put(assemble_dirichlet_row(spec, mesh, i, n))
    for j in range(1, n):
        put(assemble_dirichlet_row(spec, mesh, 0, j))
        put(assemble_dirichlet_row(spec, mesh, n, j))

    all_rows = np.concatenate([coo_rows, np.asarray(extra_rows, dtype=coo_rows.dtype)])
    all_cols = np.concatenate([coo_cols, np.asarray(extra_cols, dtype=coo_cols.dtype)])
    all_vals = np.concatenate([coo_vals, np.asarray(extra_vals, dtype=float)])
    matrix = sp.coo_matrix((all_vals, (all_rows, all_cols)),
                           shape=(dim, dim)).tocsr()
    matrix.sort_indices()

    empty = np.flatnonzero(np.diff(matrix.indptr) == 0)
    if empty.size:
        raise SingularStructure(f"empty matrix rows at flat indices {empty[:10]}")
    return LinearSystem(matrix=matrix, rhs=rhs, n=n, mesh=mesh,
                        variant=variant, row_kinds=row_kinds)


# ---------------------------------------------------------------------------
# Diagnostics.

@dataclass
class MMatrixReport:
    dimension: int
    sign_violations: list[tuple[int, int, float]] = field(default_factory=list)
    violating_rows: list[int] = field(default_factory=list)
    nonpositive_diagonal_rows: list[int] = field(default_factory=list)
    min_inverse_entry: Optional[float] = None

    @property
    def n_sign_violations(self) -> int:
        return len(self.sign_violations)

    @property
    def sign_ok(self) -> bool:
        return not self.sign_violations and not self.nonpositive_diagonal_rows

    def summary(self) -> str:
        inv = ("not computed" if self.min_inverse_entry is None
               else f"{self.min_inverse_entry:.3e}")
        return (f"dim {self.dimension}: {self.n_sign_violations} positive "
                f"off-diagonal entries in {len(self.violating_rows)} rows, "
                f"{len(self.nonpositive_diagonal_rows)} nonpositive diagonals, "
                f"min inverse entry {inv}")


_DENSE_INVERSE_LIMIT = 1089   # (32+1)^2


def m_matrix_check(system: LinearSystem,
                   compute_inverse: Optional[bool] = None) -> MMatrixReport:
    """Sign-structure check; optionally dense inverse positivity.

    A monotone (M-matrix) discretization needs positive diagonal entries,
    nonpositive off-diagonal entries and a nonnegative inverse.  The dense
    inverse is only formed when the dimension is small (N <= 32) unless
    explicitly requested.
    """
    report = MMatrixReport(dimension=system.dimension)
    coo = system.matrix.tocoo()
    off = coo.row != coo.col
    bad = off & (coo.data > 0.0)
    order = np.lexsort((coo.col[bad], coo.row[bad]))
    report.sign_violations = [
        (int(r), int(c), float(v))
        for r, c, v in zip(coo.row[bad][order], coo.col[bad][order],
                           coo.data[bad][order])
    ]
    report.violating_rows = sorted({r for r, _, _ in report.sign_violations})
    diag = system.matrix.diagonal()
    report.nonpositive_diagonal_rows = [int(r) for r in np.flatnonzero(diag <= 0.0)]
    if compute_inverse is None:
        compute_inverse = system.dimension <= _DENSE_INVERSE_LIMIT
    if compute_inverse:
        try:
            inv = np.linalg.inv(system.matrix.toarray())
            report.min_inverse_entry = float(inv.min())
        except np.linalg.LinAlgError:
            report.min_inverse_entry = float("nan")
    return report


def write_matrix_dump(system: LinearSystem, stream) -> None:
    """Coordinate text dump, one 'row col value' line per stored entry."""
    csr = system.matrix
    for r in range(csr.shape[0]):
        for p in range(csr.indptr[r], csr.indptr[r + 1]):
            stream.write(f"{r} {csr.indices[p]} {csr.data[p]:.16e}\n")
