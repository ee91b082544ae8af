"""Two-parameter ray families: construction, the rectangularity defect,
regular points, wavefront reconstruction, and transport through systems.

A family is a smooth map (k1, k2) -> OrientedLine on a rectangular parameter
domain.  The central quantity is the defect: the symplectic two-form of the
line manifold evaluated on the two coordinate tangent fields,

    defect(k) = dP/dk1 . du/dk2 - dP/dk2 . du/dk1,

computed here with P(k) the foot point (the value does not depend on which
smoothly chosen point of the line is used).  A family admits surfaces crossed
orthogonally by every nearby ray exactly when the defect vanishes
identically; `is_rectangular` tests that numerically on a grid, and
`reconstruct_wavefront` actually builds such a surface by integrating the
one-form u . dP, checking path independence as it goes.

Finite differences are central throughout; the default step is
1e-5 * (parameter domain diameter).  Grids are inset from the domain edges by
the step so every stencil stays inside the domain.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DomainBoundaryError,
    FamilyTraceError,
    ImmersionError,
    NoConvergenceError,
    NonRegularError,
    NotRectangularError,
    RaySpaceError,
)
from .lines import OrientedLine, _as_vec3, chart_coords, chart_for, line_through
from .optics import OpticalSystem, propagate_system
from .surfaces import Plane, Sinusoid, Sphere


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _frame(axis):
    """Unit axis plus an orthonormal pair spanning its orthogonal plane."""
    a = _as_vec3(axis)
    n = np.linalg.norm(a)
    if n < 1e-12:
        raise ValueError("axis must be nonzero")
    a = a / n
    ref = np.zeros(3)
    ref[int(np.argmin(np.abs(a)))] = 1.0
    e1 = np.cross(ref, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    return a, e1, e2


@dataclass(frozen=True)
class RayFamily:
    """A smooth two-parameter family of oriented lines on a rectangle.

    `anchor`, when set, gives the point on each ray where propagation
    physically begins (source apex, emitting surface point, ...); systems
    intersect each ray strictly downstream of it.  None means the foot point.
    """

    eval: Callable[[float, float], OrientedLine]
    domain: tuple
    kind: str = "custom"
    anchor: Callable[[float, float], np.ndarray] | None = None

    def line(self, k1: float, k2: float) -> OrientedLine:
        return self.eval(k1, k2)

    def start_point(self, k1: float, k2: float) -> np.ndarray:
        if self.anchor is None:
            return self.eval(k1, k2).q
        return self.anchor(k1, k2)

    @property
    def diameter(self) -> float:
        (a1, b1), (a2, b2) = self.domain
        return float(np.hypot(b1 - a1, b2 - a2))

    def default_step(self) -> float:
        return 1e-5 * self.diameter

    def contains(self, k1: float, k2: float, pad: float = 0.0) -> bool:
        (a1, b1), (a2, b2) = self.domain
        return (a1 + pad <= k1 <= b1 - pad) and (a2 + pad <= k2 <= b2 - pad)


# ---------------------------------------------------------------------------
# builders


def point_source(apex, axis, domain=((-0.3, 0.3), (-0.3, 0.3))) -> RayFamily:
    """All rays leaving one point, parametrized around a central axis."""
    apex = _as_vec3(apex)
    a, e1, e2 = _frame(axis)

    def _eval(k1, k2):
        return line_through(apex, a + k1 * e1 + k2 * e2)

    return RayFamily(
        _eval, tuple(map(tuple, domain)), kind="point_source", anchor=lambda k1, k2: apex
    )


def collimated(direction, origin=(0.0, 0.0, 0.0), domain=((-0.5, 0.5), (-0.5, 0.5))) -> RayFamily:
    """A parallel beam: fixed direction, foot points on an orthogonal lattice."""
    origin = _as_vec3(origin)
    a, e1, e2 = _frame(direction)

    def _eval(k1, k2):
        return line_through(origin + k1 * e1 + k2 * e2, a)

    return RayFamily(
        _eval,
        tuple(map(tuple, domain)),
        kind="collimated",
        anchor=lambda k1, k2: origin + k1 * e1 + k2 * e2,
    )


def two_skew_lines(point1, dir1, point2, dir2, domain=((-0.25, 0.25), (-0.25, 0.25))) -> RayFamily:
    """Lines meeting two skew lines, oriented from the first to the second.

    eval(k1, k2) joins point1 + k1 * unit(dir1) to point2 + k2 * unit(dir2).
    This family is the classic non-rectangular example.
    """
    p1 = _as_vec3(point1)
    p2 = _as_vec3(point2)
    d1 = _as_vec3(dir1)
    d2 = _as_vec3(dir2)
    d1 = d1 / np.linalg.norm(d1)
    d2 = d2 / np.linalg.norm(d2)

    def _eval(k1, k2):
        a = p1 + k1 * d1
        b = p2 + k2 * d2
        return line_through(a, b - a)

    return RayFamily(
        _eval,
        tuple(map(tuple, domain)),
        kind="two_skew_lines",
        anchor=lambda k1, k2: p1 + k1 * d1,
    )


def normal_congruence(surface, domain, axis=(0.0, 0.0, 1.0), outward: bool = True) -> RayFamily:
    """Rays normal to a surface patch (spheres, planes, sinusoid graphs).

    For a Sphere the patch is parametrized by direction offsets around
    `axis`; `outward` picks the radial sense.  For a Sinusoid the parameters
    are the (x, y) graph coordinates and `outward` means the +z side.  For a
    Plane the family is a collimated beam along the oriented normal.
    """
    if isinstance(surface, Sphere):
        a, e1, e2 = _frame(axis)
        center = surface.center
        radius = surface.radius
        sgn = 1.0 if outward else -1.0

        def _eval(k1, k2):
            s = a + k1 * e1 + k2 * e2
            s = s / np.linalg.norm(s)
            return line_through(center + radius * s, sgn * s)

        def _anchor(k1, k2):
            s = a + k1 * e1 + k2 * e2
            return center + radius * (s / np.linalg.norm(s))

        return RayFamily(
            _eval, tuple(map(tuple, domain)), kind="normal_congruence", anchor=_anchor
        )
    if isinstance(surface, Sinusoid):
        amp = surface.amplitude
        w = surface.wavevector
        sgn = 1.0 if outward else -1.0

        def _eval(k1, k2):
            phase = w[0] * k1 + w[1] * k2
            p = np.array([k1, k2, amp * np.sin(phase)])
            c = amp * np.cos(phase)
            n = np.array([-c * w[0], -c * w[1], 1.0])
            return line_through(p, sgn * n)

        def _anchor(k1, k2):
            return np.array([k1, k2, amp * np.sin(w[0] * k1 + w[1] * k2)])

        return RayFamily(
            _eval, tuple(map(tuple, domain)), kind="normal_congruence", anchor=_anchor
        )
    if isinstance(surface, Plane):
        n = surface.normal if outward else -surface.normal
        origin = surface.offset * surface.normal
        return collimated(n, origin, domain)
    raise ValueError(f"normal congruence not supported for {type(surface).__name__}")


def transform_family(family: RayFamily, system: OpticalSystem) -> RayFamily:
    """The family of output lines of `system` applied ray by ray.

    Evaluation is pure (nothing cached); per-interface failures re-raise as
    FamilyTraceError carrying the parameter value.
    """

    def _trace(k1, k2):
        base = family.eval(k1, k2)
        try:
            return propagate_system(base, system, start=family.start_point(k1, k2))
        except RaySpaceError as exc:
            raise FamilyTraceError((k1, k2), exc) from exc

    def _eval(k1, k2):
        return _trace(k1, k2).line_out

    def _anchor(k1, k2):
        result = _trace(k1, k2)
        if result.hits:
            return result.hits[-1].point
        return family.start_point(k1, k2)

    return RayFamily(
        _eval, family.domain, kind=f"transformed({family.kind})", anchor=_anchor
    )


# ---------------------------------------------------------------------------
# defect and rectangularity


def _require_inside(family: RayFamily, k, h: float) -> None:
    if not family.contains(k[0], k[1], pad=0.0) or not family.contains(
        k[0], k[1], pad=h
    ):
        raise DomainBoundaryError(
            f"stencil of half-width {h:g} at k={tuple(k)} leaves the domain"
        )


def _neighbors(family: RayFamily, k, h: float):
    k1, k2 = float(k[0]), float(k[1])
    return (
        family.eval(k1 + h, k2),
        family.eval(k1 - h, k2),
        family.eval(k1, k2 + h),
        family.eval(k1, k2 - h),
    )


def defect(family: RayFamily, k, h: float | None = None) -> float:
    """The symplectic two-form on the coordinate tangent fields at k."""
    if h is None:
        h = family.default_step()
    _require_inside(family, k, h)
    p1, m1, p2, m2 = _neighbors(family, k, h)
    du1 = (p1.u - m1.u) / (2.0 * h)
    dq1 = (p1.q - m1.q) / (2.0 * h)
    du2 = (p2.u - m2.u) / (2.0 * h)
    dq2 = (p2.q - m2.q) / (2.0 * h)
    return float(dq1 @ du2 - dq2 @ du1)


def defect_refined(family: RayFamily, k, h: float | None = None):
    """Defect at steps h and h/2: a step-halving convergence diagnostic."""
    if h is None:
        h = family.default_step()
    return defect(family, k, h), defect(family, k, 0.5 * h)


def _grid_axes(family: RayFamily, grid, inset: float):
    if isinstance(grid, int):
        n1 = n2 = grid
    else:
        n1, n2 = grid
    if n1 < 3 or n2 < 3:
        raise ValueError("grid must be at least 3x3")
    (a1, b1), (a2, b2) = family.domain
    k1 = np.linspace(a1 + inset, b1 - inset, n1)
    k2 = np.linspace(a2 + inset, b2 - inset, n2)
    return k1, k2


@dataclass(frozen=True)
class DefectGrid:
    """Defect sampled on a parameter grid, k1 varying along rows."""

    k1: np.ndarray
    k2: np.ndarray
    values: np.ndarray
    step: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("k1,k2,value\n")
        for i, k1 in enumerate(self.k1):
            for j, k2 in enumerate(self.k2):
                out.write(f"{_fmt(k1)},{_fmt(k2)},{_fmt(self.values[i, j])}\n")
        return out.getvalue()


def _immersion_ok(center_line: OrientedLine, neighbors, h: float) -> bool:
    chart = chart_for(center_line.u)
    p1, m1, p2, m2 = neighbors
    col1 = (chart_coords(p1, chart)[0] - chart_coords(m1, chart)[0]) / (2.0 * h)
    col2 = (chart_coords(p2, chart)[0] - chart_coords(m2, chart)[0]) / (2.0 * h)
    jac = np.stack([col1, col2], axis=1)
    svals = np.linalg.svd(jac, compute_uv=False)
    return svals[0] > 0.0 and (svals[-1] / svals[0]) > 1e-8


def defect_grid(
    family: RayFamily,
    grid=9,
    h: float | None = None,
    check_immersion: bool = True,
) -> DefectGrid:
    """Defect on a grid inset by h; optionally verifies rank-2 immersion."""
    if h is None:
        h = family.default_step()
    k1s, k2s = _grid_axes(family, grid, inset=h)
    values = np.empty((len(k1s), len(k2s)))
    for i, k1 in enumerate(k1s):
        for j, k2 in enumerate(k2s):
            neigh = _neighbors(family, (k1, k2), h)
            if check_immersion:
                center = family.eval(k1, k2)
                if not _immersion_ok(center, neigh, h):
                    raise ImmersionError(f"family is not an immersion at k=({k1:g}, {k2:g})")
            p1, m1, p2, m2 = neigh
            du1 = (p1.u - m1.u) / (2.0 * h)
            dq1 = (p1.q - m1.q) / (2.0 * h)
            du2 = (p2.u - m2.u) / (2.0 * h)
            dq2 = (p2.q - m2.q) / (2.0 * h)
            values[i, j] = dq1 @ du2 - dq2 @ du1
    return DefectGrid(k1=k1s, k2=k2s, values=values, step=h)


def is_rectangular(family: RayFamily, grid=9, tol: float | None = None, h: float | None = None):
    """(verdict, DefectGrid): verdict is max |defect| < tol on the grid.

    The default tolerance is 1e-6 times the larger domain span.  The verdict
    is invariant under reparametrization (the defect itself rescales by the
    Jacobian determinant of the reparametrization).
    """
    if tol is None:
        (a1, b1), (a2, b2) = family.domain
        tol = 1e-6 * max(b1 - a1, b2 - a2)
    dg = defect_grid(family, grid=grid, h=h)
    return dg.max_abs < tol, dg


def is_regular_point(family: RayFamily, k, t: float, h: float | None = None) -> bool:
    """Whether nearby rays spread out transversally at parameter t on L(k).

    Rays L(k') near L(k) are sliced by the plane through the point at
    parameter t orthogonal to u(k); the point of L(k') nearest the anchor
    gives two in-plane coordinates, and the 2x2 Jacobian of that map must
    have |det| > 1e-8.  False e.g. at the apex of a point source.
    """
    if h is None:
        h = family.default_step()
    _require_inside(family, k, h)
    line0 = family.eval(float(k[0]), float(k[1]))
    anchor = line0.point_at(float(t))
    _, w1, w2 = _frame(line0.u)

    def coords(line: OrientedLine):
        rel = anchor - line.q
        nearest = line.q + (rel @ line.u) * line.u
        d = nearest - anchor
        return np.array([d @ w1, d @ w2])

    p1, m1, p2, m2 = _neighbors(family, k, h)
    col1 = (coords(p1) - coords(m1)) / (2.0 * h)
    col2 = (coords(p2) - coords(m2)) / (2.0 * h)
    det = col1[0] * col2[1] - col1[1] * col2[0]
    return abs(det) > 1e-8


# ---------------------------------------------------------------------------
# wavefront reconstruction


def one_form_integral(
    family: RayFamily, ka, kb, tol: float = 1e-9, max_points: int = 4096
) -> float:
    """Integral of u . dP along the straight parameter segment ka -> kb.

    Trapezoid sums on the polyline of exactly evaluated lines, doubling the
    subdivision until successive refinements agree within tol.
    """
    ka = np.asarray(ka, dtype=float)
    kb = np.asarray(kb, dtype=float)
    prev = None
    m = 4
    while m <= max_points:
        ts = np.linspace(0.0, 1.0, m + 1)
        us = np.empty((m + 1, 3))
        qs = np.empty((m + 1, 3))
        for idx, t in enumerate(ts):
            line = family.eval(*(ka + t * (kb - ka)))
            us[idx] = line.u
            qs[idx] = line.q
        val = 0.5 * float(np.sum((us[:-1] + us[1:]) * (qs[1:] - qs[:-1])))
        if prev is not None and abs(val - prev) <= tol:
            return val
        prev = val
        m *= 2
    raise NoConvergenceError("one-form integral did not converge under refinement")


@dataclass(frozen=True)
class Wavefront:
    """An orthogonal surface of a rectangular family, sampled on a grid.

    values[i, j] is the primitive F of u . dP with F = 0 at the base node;
    points[i, j] = P(k) - (F(k) + c) u(k).
    """

    k1: np.ndarray
    k2: np.ndarray
    values: np.ndarray
    points: np.ndarray
    c: float
    base_index: tuple
    path_discrepancy: float

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("k1,k2,qx,qy,qz,F\n")
        for i, k1 in enumerate(self.k1):
            for j, k2 in enumerate(self.k2):
                p = self.points[i, j]
                out.write(
                    f"{_fmt(k1)},{_fmt(k2)},{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])},"
                    f"{_fmt(self.values[i, j])}\n"
                )
        return out.getvalue()


def reconstruct_wavefront(
    family: RayFamily,
    k0,
    c: float = 0.0,
    grid=9,
    h: float | None = None,
    path_tol: float = 1e-7,
    integral_tol: float = 1e-9,
    check_regular: bool = True,
) -> Wavefront:
    """Integrate u . dP from k0 and drop the points P - (F + c) u.

    F is accumulated along grid-aligned paths; for every node the row-first
    and column-first L-paths must agree within path_tol, otherwise the family
    is not rectangular and NotRectangularError is raised.  k0 snaps to the
    nearest grid node (F is only defined up to a constant anyway; c selects
    the member of the orthogonal-surface pencil).
    """
    if h is None:
        h = family.default_step()
    k1s, k2s = _grid_axes(family, grid, inset=h)
    k0 = np.asarray(k0, dtype=float)
    i0 = int(np.argmin(np.abs(k1s - k0[0])))
    j0 = int(np.argmin(np.abs(k2s - k0[1])))

    n1, n2 = len(k1s), len(k2s)
    lines = [[family.eval(k1s[i], k2s[j]) for j in range(n2)] for i in range(n1)]

    # adjacent-node segment integrals, horizontal (along k1) and vertical
    horiz = np.zeros((n1 - 1, n2))
    vert = np.zeros((n1, n2 - 1))
    for j in range(n2):
        for i in range(n1 - 1):
            horiz[i, j] = one_form_integral(
                family, (k1s[i], k2s[j]), (k1s[i + 1], k2s[j]), tol=integral_tol
            )
    for i in range(n1):
        for j in range(n2 - 1):
            vert[i, j] = one_form_integral(
                family, (k1s[i], k2s[j]), (k1s[i], k2s[j + 1]), tol=integral_tol
            )

    def cum(segments, start, stop):
        # signed sum of consecutive segments from index start to stop
        if stop >= start:
            return float(np.sum(segments[start:stop]))
        return -float(np.sum(segments[stop:start]))

    f_rc = np.zeros((n1, n2))  # along row j0 first, then up/down the column
    f_cr = np.zeros((n1, n2))  # along column i0 first, then across the row
    for i in range(n1):
        row_leg = cum(horiz[:, j0], i0, i)
        for j in range(n2):
            f_rc[i, j] = row_leg + cum(vert[i, :], j0, j)
    for j in range(n2):
        col_leg = cum(vert[i0, :], j0, j)
        for i in range(n1):
            f_cr[i, j] = col_leg + cum(horiz[:, j], i0, i)

    discrepancy = float(np.max(np.abs(f_rc - f_cr)))
    if discrepancy > path_tol:
        raise NotRectangularError(
            f"path-dependent primitive: L-path discrepancy {discrepancy:.3e} > {path_tol:g}"
        )

    values = f_rc
    points = np.empty((n1, n2, 3))
    for i in range(n1):
        for j in range(n2):
            line = lines[i][j]
            points[i, j] = line.q - (values[i, j] + c) * line.u

    if check_regular:
        for i in range(n1):
            for j in range(n2):
                t_q = -(values[i, j] + c)
                if not is_regular_point(family, (k1s[i], k2s[j]), t_q, h=h):
                    raise NonRegularError(
                        f"wavefront point at k=({k1s[i]:g}, {k2s[j]:g}) is not regular"
                    )

    return Wavefront(
        k1=k1s,
        k2=k2s,
        values=values,
        points=points,
        c=c,
        base_index=(i0, j0),
        path_discrepancy=discrepancy,
    )


def orthogonality_residual(family: RayFamily, wavefront: Wavefront, h: float | None = None) -> float:
    """max over nodes and directions of |u . dQ| / |dQ|, dQ by small steps.

    Uses the family's default step (not the grid spacing), continuing F to
    the probe parameters by short one-form integrals, so the residual
    measures genuine non-orthogonality rather than grid truncation.
    """
    if h is None:
        h = family.default_step()
    worst = 0.0
    for i, k1 in enumerate(wavefront.k1):
        for j, k2 in enumerate(wavefront.k2):
            base = np.array([k1, k2])
            line0 = family.eval(k1, k2)
            f0 = wavefront.values[i, j]
            for axis in range(2):
                step = np.zeros(2)
                step[axis] = h
                q_side = []
                for sgn in (+1.0, -1.0):
                    kk = base + sgn * step
                    f_side = f0 + one_form_integral(family, base, kk, tol=1e-12)
                    side = family.eval(*kk)
                    q_side.append(side.q - (f_side + wavefront.c) * side.u)
                d = q_side[0] - q_side[1]
                norm = float(np.linalg.norm(d))
                if norm > 0.0:
                    worst = max(worst, abs(float(line0.u @ d)) / norm)
    return worst
