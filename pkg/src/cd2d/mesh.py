"""Fitted piecewise-uniform tensor meshes.

The x-axis is split into four pieces

    [0, d1-sigma_x], [d1-sigma_x, d1], [d1, 1-sigma_x], [1-sigma_x, 1]

with N/4 intervals each, so the fine pieces resolve the exponential layers
ahead of x = d1 and x = 1.  The y-axis is split into six pieces

    [0, s], [s, d2-s], [d2-s, d2], [d2, d2+s], [d2+s, 1-s], [1-s, 1],
    s = sigma_y,

with N/8, N/4, N/8, N/8, N/4, N/8 intervals, resolving the characteristic
layers along y = 0, y = 1 and both sides of y = d2.  Transition widths:

    sigma_x = min(d1/2, (2 eps^2 / alpha) ln N)
    sigma_y = min(d2/4, (2 eps / beta) ln N)

Breakpoints (in particular d1 and d2 at index N/2) are assigned exactly,
never accumulated, because row selection in the discretization keys on the
interface indices.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .errors import BadN, DimensionMismatch, GeometryError
from .problems import ProblemSpec, check_mesh_parameter


class Axis(enum.Enum):
    X = "x"
    Y = "y"


class PointKind(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    INTERFACE_X = "interface_x"   # i = N/2, 0 < j < N, j != N/2
    INTERFACE_Y = "interface_y"   # j = N/2, 0 < i < N, i != N/2
    CROSS = "cross"               # i = j = N/2


@dataclass(frozen=True)
class TransitionParams:
    sigma_x: float
    sigma_y: float
    N: int


@dataclass(frozen=True)
class Mesh1D:
    points: np.ndarray
    breakpoints: tuple[float, ...]
    counts: tuple[int, ...]
    axis: Axis

    @property
    def n(self) -> int:
        """Number of mesh intervals."""
        return len(self.points) - 1

    def widths(self) -> np.ndarray:
        return np.diff(self.points)


@dataclass(frozen=True)
class TensorMesh:
    x: Mesh1D
    y: Mesh1D

    def __post_init__(self):
        if self.x.n != self.y.n:
            raise DimensionMismatch(
                f"axes disagree: {self.x.n} x-intervals vs {self.y.n} y-intervals")

    @property
    def n(self) -> int:
        """Mesh intervals per axis (points are (n+1) x (n+1))."""
        return self.x.n

    def kind(self, i: int, j: int) -> PointKind:
        n = self.n
        half = n // 2
        if i == 0 or i == n or j == 0 or j == n:
            return PointKind.BOUNDARY
        if i == half and j == half:
            return PointKind.CROSS
        if i == half:
            return PointKind.INTERFACE_X
        if j == half:
            return PointKind.INTERFACE_Y
        return PointKind.INTERIOR

    def points_of_kind(self, kind: PointKind) -> Iterable[tuple[int, int]]:
        n = self.n
        for j in range(n + 1):
            for i in range(n + 1):
                if self.kind(i, j) is kind:
                    yield i, j


def compute_transition_points(spec: ProblemSpec, N: int) -> TransitionParams:
    """Transition widths from the min-formulas; N must be a multiple of 8."""
    check_mesh_parameter(N)
    log_n = math.log(N)
    sigma_x = min(spec.d1 / 2.0, (2.0 * spec.epsilon ** 2 / spec.alpha) * log_n)
    sigma_y = min(spec.d2 / 4.0, (2.0 * spec.epsilon / spec.beta) * log_n)
    return TransitionParams(sigma_x=sigma_x, sigma_y=sigma_y, N=N)


def _piecewise_uniform(breakpoints: tuple[float, ...], counts: tuple[int, ...],
                       axis: Axis) -> Mesh1D:
    """Uniform points inside each piece; piece endpoints assigned exactly."""
    for left, right in zip(breakpoints[:-1], breakpoints[1:]):
        if not right > left:
            raise GeometryError(
                f"{axis.value}-pieces out of order: {left} >= {right}")
    total = sum(counts)
    pts = np.empty(total + 1)
    pos = 0
    for (left, right), cnt in zip(zip(breakpoints[:-1], breakpoints[1:]), counts):
        width = (right - left) / cnt
        pts[pos:pos + cnt] = left + width * np.arange(cnt)
        pts[pos] = left
        pos += cnt
    pts[total] = breakpoints[-1]
    if not np.all(np.diff(pts) > 0):
        raise GeometryError(f"{axis.value}-mesh is not strictly increasing")
    return Mesh1D(points=pts, breakpoints=tuple(float(b) for b in breakpoints),
                  counts=tuple(counts), axis=axis)


def build_mesh_x(params: TransitionParams, d1: float) -> Mesh1D:
    """Four-piece x-mesh with N/4 intervals per piece."""
    N, sx = params.N, params.sigma_x
    if sx <= 0.0 or sx > d1 / 2.0 + 1e-15:
        raise GeometryError(f"sigma_x = {sx} outside (0, d1/2] for d1 = {d1}")
    if 1.0 - sx <= d1:
        raise GeometryError(
            f"layer piece [1-sigma_x, 1] with sigma_x = {sx} overlaps d1 = {d1}")
    quarter = N // 4
    breakpoints = (0.0, d1 - sx, d1, 1.0 - sx, 1.0)
    return _piecewise_uniform(breakpoints, (quarter,) * 4, Axis.X)


def build_mesh_y(params: TransitionParams, d2: float) -> Mesh1D:
    """Six-piece y-mesh with counts (N/8, N/4, N/8, N/8, N/4, N/8)."""
    N, sy = params.N, params.sigma_y
    if sy <= 0.0 or sy > d2 / 4.0 + 1e-15:
        raise GeometryError(f"sigma_y = {sy} outside (0, d2/4] for d2 = {d2}")
    if 1.0 - sy <= d2 + sy:
        raise GeometryError(
            f"layer pieces around y = {d2} and y = 1 overlap for sigma_y = {sy}")
    eighth, quarter = N // 8, N // 4
    breakpoints = (0.0, sy, d2 - sy, d2, d2 + sy, 1.0 - sy, 1.0)
    counts = (eighth, quarter, eighth, eighth, quarter, eighth)
    return _piecewise_uniform(breakpoints, counts, Axis.Y)


def build_tensor_mesh(spec: ProblemSpec, N: int) -> TensorMesh:
    params = compute_transition_points(spec, N)
    return TensorMesh(x=build_mesh_x(params, spec.d1),
                      y=build_mesh_y(params, spec.d2))


def nominal_widths_x(mesh: Mesh1D) -> tuple[float, float, float]:
    """(H1, h1, H2) of a four-piece x-mesh."""
    b, c = mesh.breakpoints, mesh.counts
    H1 = (b[1] - b[0]) / c[0]
    h1 = (b[2] - b[1]) / c[1]
    H2 = (b[3] - b[2]) / c[2]
    return H1, h1, H2


def nominal_widths_y(mesh: Mesh1D) -> tuple[float, float, float]:
    """(K1, k1, K2) of a six-piece y-mesh."""
    b, c = mesh.breakpoints, mesh.counts
    k1 = (b[1] - b[0]) / c[0]
    K1 = (b[2] - b[1]) / c[1]
    K2 = (b[5] - b[4]) / c[4]
    return K1, k1, K2


def bisect_1d(mesh: Mesh1D) -> Mesh1D:
    """Insert every interval midpoint; old points land at even indices bitwise."""
    pts = mesh.points
    out = np.empty(2 * len(pts) - 1)
    out[0::2] = pts
    out[1::2] = 0.5 * (pts[:-1] + pts[1:])
    return Mesh1D(points=out, breakpoints=mesh.breakpoints,
                  counts=tuple(2 * c for c in mesh.counts), axis=mesh.axis)


def bisect(mesh: TensorMesh) -> TensorMesh:
    return TensorMesh(x=bisect_1d(mesh.x), y=bisect_1d(mesh.y))


def write_mesh_dump(mesh: Mesh1D, stream: IO[str]) -> None:
    """Two-column text dump: index, coordinate."""
    for idx, coord in enumerate(mesh.points):
        stream.write(f"{idx} {coord:.16e}\n")
