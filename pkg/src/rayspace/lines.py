"""Oriented lines in Euclidean 3-space and the symplectic geometry of the
4-manifold they form.

A line is stored canonically as a pair (u, q): the unit direction u and the
foot point q, the point of the line closest to the origin, so q . u = 0.
Identifying a line with the covector w -> q . w on the sphere of directions
makes the space of oriented lines a cotangent bundle, and the canonical
two-form of that bundle is the structure everything else in this package is
measured against.

Charts are stereographic.  The NORTH chart projects from the pole +e3 and is
valid away from it (u3 < 1 - 1e-6); SOUTH projects from -e3 and is valid for
u3 > -1 + 1e-6.  Base coordinates are a = (a1, a2); fiber coordinates are
b_i = q . (du/da_i).  In every chart the two-form has the constant Darboux
matrix returned by chart_symplectic_matrix().

Sign convention, used consistently everywhere in the package:

    omega(v1, v2) = dq1 . du2 - dq2 . du1

which is the exterior derivative of theta = q . du, i.e. of b . da in chart
coordinates.  The value is unchanged if the foot point is replaced by any
other smoothly chosen point on the line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ChartDomainError, ZeroDirectionError

NORTH = "north"
SOUTH = "south"

# Directions closer than this to the projection pole are rejected.
CHART_MARGIN = 1e-6


def _as_vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class OrientedLine:
    """An oriented straight line, canonically represented by (u, q).

    u is a unit vector, q the foot point (q . u = 0).  Reversing the
    orientation gives a distinct line: (u, q) != (-u, q).
    """

    u: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        u = _as_vec3(self.u).copy()
        q = _as_vec3(self.q).copy()
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        if abs(q @ u) > 1e-12 * max(1.0, np.linalg.norm(q)):
            raise ValueError("foot point must satisfy q . u = 0")
        u.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "q", q)

    def point_at(self, t: float) -> np.ndarray:
        return self.q + t * self.u

    def __eq__(self, other):
        if not isinstance(other, OrientedLine):
            return NotImplemented
        return np.array_equal(self.u, other.u) and np.array_equal(self.q, other.q)

    def __repr__(self):
        return f"OrientedLine(u={tuple(self.u)}, q={tuple(self.q)})"


def line_through(point, direction) -> OrientedLine:
    """The oriented line through `point` in the sense of `direction`.

    The direction need not be normalized; a numerically zero direction raises
    ZeroDirectionError.
    """
    p = _as_vec3(point)
    d = _as_vec3(direction)
    n = np.linalg.norm(d)
    if n < 1e-12:
        raise ZeroDirectionError("direction vector is numerically zero")
    u = d / n
    q = p - (p @ u) * u
    q -= (q @ u) * u  # second projection removes the O(eps) residual
    return OrientedLine(u, q)


def reverse(line: OrientedLine) -> OrientedLine:
    """The same support with the opposite orientation."""
    return OrientedLine(-line.u, line.q)


@dataclass(frozen=True)
class LineVariation:
    """A tangent vector (du, dq) to the line manifold at some line.

    At a line (u, q) a valid variation of the canonical representation
    satisfies u . du = 0 and q . du + u . dq = 0.  The pairing below also
    accepts variations of non-foot representatives (same du, dq shifted along
    the line); its value does not depend on that choice.
    """

    du: np.ndarray
    dq: np.ndarray

    def __post_init__(self):
        du = _as_vec3(self.du).copy()
        dq = _as_vec3(self.dq).copy()
        du.flags.writeable = False
        dq.flags.writeable = False
        object.__setattr__(self, "du", du)
        object.__setattr__(self, "dq", dq)

    def is_tangent_at(self, line: OrientedLine, tol: float = 1e-10) -> bool:
        a = abs(line.u @ self.du)
        b = abs(line.q @ self.du + line.u @ self.dq)
        return a <= tol and b <= tol


def tangent_variation(line: OrientedLine, du_raw, dq_raw) -> LineVariation:
    """Project an arbitrary (du, dq) pair onto the tangent space at `line`."""
    du = _as_vec3(du_raw)
    dq = _as_vec3(dq_raw)
    du = du - (line.u @ du) * line.u
    dq = dq - (line.u @ dq + line.q @ du) * line.u
    return LineVariation(du, dq)


def curve_variation(curve: Callable[[float], OrientedLine], h: float = 1e-6) -> LineVariation:
    """Central-difference tangent of a smooth curve of lines at parameter 0."""
    plus = curve(h)
    minus = curve(-h)
    return LineVariation((plus.u - minus.u) / (2.0 * h), (plus.q - minus.q) / (2.0 * h))


def symplectic_pairing(line: OrientedLine, v1: LineVariation, v2: LineVariation) -> float:
    """omega(v1, v2) = dq1 . du2 - dq2 . du1 at the given line."""
    return float(v1.dq @ v2.du - v2.dq @ v1.du)


# ---------------------------------------------------------------------------
# stereographic charts


@dataclass(frozen=True)
class ChartPoint:
    """Coordinates (a, b) of a line in one stereographic chart."""

    chart_id: str
    a: np.ndarray
    b: np.ndarray

    def coords(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])


def chart_for(u) -> str:
    """The chart whose projection pole is farthest from u."""
    return SOUTH if u[2] >= 0.0 else NORTH


def _check_chart(chart_id: str, u3: float) -> None:
    if chart_id == NORTH:
        if u3 >= 1.0 - CHART_MARGIN:
            raise ChartDomainError("direction too close to the north pole for chart NORTH")
    elif chart_id == SOUTH:
        if u3 <= -1.0 + CHART_MARGIN:
            raise ChartDomainError("direction too close to the south pole for chart SOUTH")
    else:
        raise ValueError(f"unknown chart {chart_id!r}")


def _project(chart_id: str, u: np.ndarray) -> np.ndarray:
    denom = (1.0 - u[2]) if chart_id == NORTH else (1.0 + u[2])
    return np.array([u[0] / denom, u[1] / denom])


def _unproject(chart_id: str, a: np.ndarray):
    """Direction u(a) and the analytic 3x2 Jacobian du/da."""
    a1, a2 = float(a[0]), float(a[1])
    r2 = a1 * a1 + a2 * a2
    s = 1.0 + r2
    s2 = s * s
    if chart_id == NORTH:
        u3 = (r2 - 1.0) / s
        g3 = 4.0 / s2
    else:
        u3 = (1.0 - r2) / s
        g3 = -4.0 / s2
    u = np.array([2.0 * a1 / s, 2.0 * a2 / s, u3])
    jac = np.array(
        [
            [2.0 / s - 4.0 * a1 * a1 / s2, -4.0 * a1 * a2 / s2],
            [-4.0 * a1 * a2 / s2, 2.0 / s - 4.0 * a2 * a2 / s2],
            [g3 * a1, g3 * a2],
        ]
    )
    return u, jac


def to_chart(line: OrientedLine, chart_id: str | None = None) -> ChartPoint:
    """Chart coordinates of a line; raises ChartDomainError near the pole."""
    if chart_id is None:
        chart_id = chart_for(line.u)
    _check_chart(chart_id, line.u[2])
    a = _project(chart_id, line.u)
    _, jac = _unproject(chart_id, a)
    b = jac.T @ line.q
    return ChartPoint(chart_id, a, b)


def from_chart(c: ChartPoint) -> OrientedLine:
    """Inverse of to_chart.  Exact up to round-off on the chart domain."""
    u, jac = _unproject(c.chart_id, np.asarray(c.a, dtype=float))
    gram = jac.T @ jac
    coeff = np.linalg.solve(gram, np.asarray(c.b, dtype=float))
    q = jac @ coeff
    q -= (q @ u) * u
    u = u / np.linalg.norm(u)
    return OrientedLine(u, q)


def chart_coords(line: OrientedLine, chart_id: str | None = None):
    """(a1, a2, b1, b2) as a flat array, together with the chart used."""
    c = to_chart(line, chart_id)
    return c.coords(), c.chart_id


def line_from_coords(x, chart_id: str) -> OrientedLine:
    x = np.asarray(x, dtype=float)
    return from_chart(ChartPoint(chart_id, x[:2], x[2:]))


def chart_symplectic_matrix() -> np.ndarray:
    """Constant matrix of omega in chart coordinates (a1, a2, b1, b2)."""
    omega = np.zeros((4, 4))
    omega[:2, 2:] = -np.eye(2)
    omega[2:, :2] = np.eye(2)
    return omega


# ---------------------------------------------------------------------------
# finite-difference verification helpers


def chart_jacobian(
    transform: Callable[[OrientedLine], OrientedLine],
    line: OrientedLine,
    h: float | None = None,
    chart_in: str | None = None,
    chart_out: str | None = None,
):
    """4x4 central-difference Jacobian of a line map in chart coordinates.

    The input chart defaults to the best chart for `line`, the output chart
    to the best chart for its image.  Returns (J, chart_in, chart_out).
    """
    if chart_in is None:
        chart_in = chart_for(line.u)
    image = transform(line)
    if chart_out is None:
        chart_out = chart_for(image.u)
    x0, _ = chart_coords(line, chart_in)
    if h is None:
        h = 1e-5 * max(1.0, float(np.linalg.norm(line.q)))
    jac = np.empty((4, 4))
    for j in range(4):
        step = np.zeros(4)
        step[j] = h
        plus, _ = chart_coords(transform(line_from_coords(x0 + step, chart_in)), chart_out)
        minus, _ = chart_coords(transform(line_from_coords(x0 - step, chart_in)), chart_out)
        jac[:, j] = (plus - minus) / (2.0 * h)
    return jac, chart_in, chart_out


def symplectic_residual(jacobian: np.ndarray, scale: float = 1.0) -> float:
    """max |J^T Omega J - scale * Omega| entrywise."""
    omega = chart_symplectic_matrix()
    return float(np.max(np.abs(jacobian.T @ omega @ jacobian - scale * omega)))
