"""Reflection and refraction of directions and oriented lines, and ordered
multi-surface optical systems with optical-length accounting.

Conventions: at a hit the unit normal n points toward the incoming side, so
u . n < 0 for the incident direction u.  Reflection keeps the medium;
refraction uses the vector form of Snell's law and fails with
TotalInternalReflectionError when (n1/n2) sin(angle_in) >= 1, i.e. when the
usual condition sin(angle_in) < n2/n1 is violated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMediaChainError,
    GrazingError,
    RaySpaceError,
    TotalInternalReflectionError,
    TraceError,
)
from .lines import OrientedLine, _as_vec3, line_through
from .surfaces import TRANSVERSE_TOL, Intersection, intersect

REFLECT = "reflect"
REFRACT = "refract"


def reflect_direction(u, n) -> np.ndarray:
    u = _as_vec3(u)
    n = _as_vec3(n)
    c = float(u @ n)
    if abs(c) < TRANSVERSE_TOL:
        raise GrazingError("incidence too close to grazing")
    v = u - 2.0 * c * n
    return v / np.linalg.norm(v)


def refract_direction(u, n, n_in: float, n_out: float) -> np.ndarray:
    if n_in <= 0.0 or n_out <= 0.0:
        raise ValueError("refractive indices must be positive")
    u = _as_vec3(u)
    n = _as_vec3(n)
    c = float(u @ n)
    if abs(c) < TRANSVERSE_TOL:
        raise GrazingError("incidence too close to grazing")
    mu = n_in / n_out
    tangential = u - c * n
    s = mu * float(np.linalg.norm(tangential))  # (n_in/n_out) sin(angle_in)
    if s >= 1.0:
        raise TotalInternalReflectionError(
            f"total internal reflection: (n1/n2) sin(a1) = {s:.6g} >= 1"
        )
    v = mu * tangential + np.copysign(np.sqrt(1.0 - s * s), c) * n
    return v / np.linalg.norm(v)


def reflect_line(line: OrientedLine, surface, t_min: float = 0.0):
    """Reflect a line off a surface; returns (reflected line, Intersection)."""
    hit = intersect(line, surface, t_min=t_min)
    u2 = reflect_direction(line.u, hit.normal)
    return line_through(hit.point, u2), hit


def refract_line(line: OrientedLine, surface, n_in: float, n_out: float, t_min: float = 0.0):
    """Refract a line through a surface; returns (refracted line, Intersection)."""
    hit = intersect(line, surface, t_min=t_min)
    u2 = refract_direction(line.u, hit.normal, n_in, n_out)
    return line_through(hit.point, u2), hit


@dataclass(frozen=True)
class Interface:
    """One surface together with its action and the media on either side.

    For REFLECT, n_out is ignored and the medium n_in is kept.  For REFRACT,
    n_out must be given and differ from n_in.
    """

    surface: object
    action: str
    n_in: float
    n_out: float | None = None

    def __post_init__(self):
        if self.action not in (REFLECT, REFRACT):
            raise ValueError(f"unknown action {self.action!r}")
        if self.n_in <= 0.0:
            raise BadMediaChainError(None, "n_in must be positive")
        if self.action == REFRACT:
            if self.n_out is None or self.n_out <= 0.0:
                raise BadMediaChainError(None, "refraction requires positive n_out")
            if self.n_out == self.n_in:
                raise BadMediaChainError(None, "refraction requires n_in != n_out")

    @property
    def n_after(self) -> float:
        return self.n_out if self.action == REFRACT else self.n_in


@dataclass(frozen=True)
class OpticalSystem:
    """An ordered chain of interfaces traversed strictly in sequence."""

    interfaces: tuple
    ambient_index: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "interfaces", tuple(self.interfaces))
        if self.ambient_index <= 0.0:
            raise BadMediaChainError(None, "ambient index must be positive")
        n = self.ambient_index
        for i, itf in enumerate(self.interfaces):
            if itf.n_in != n:
                raise BadMediaChainError(i, f"expected n_in={n:g}, got {itf.n_in:g}")
            n = itf.n_after

    @property
    def exit_index(self) -> float:
        n = self.ambient_index
        for itf in self.interfaces:
            n = itf.n_after
        return n

    def media(self):
        """Refractive index of each segment: before interface 0, 1, ..., after the last."""
        ns = [self.ambient_index]
        for itf in self.interfaces:
            ns.append(itf.n_after)
        return ns


@dataclass(frozen=True)
class TraceResult:
    line_out: OrientedLine
    hits: tuple
    optical_length: float


def propagate_system(line: OrientedLine, system: OpticalSystem, start=None) -> TraceResult:
    """Fold a line through every interface of the system, in order.

    `start` must lie on the input line (defaults to its foot point); the
    optical length accumulates n_i * segment length from `start` to the last
    hit.  Per-interface failures re-raise as TraceError with the index.
    """
    if start is None:
        start = line.q
    start = _as_vec3(start)
    rel = start - line.q
    off = rel - (rel @ line.u) * line.u
    if np.linalg.norm(off) > 1e-9 * max(1.0, float(np.linalg.norm(start))):
        raise ValueError("start point does not lie on the line")

    current = line
    t_cursor = float(rel @ line.u)
    prev_point = start
    hits = []
    optical_length = 0.0
    for i, itf in enumerate(system.interfaces):
        try:
            if itf.action == REFLECT:
                current2, hit = reflect_line(current, itf.surface, t_min=t_cursor)
            else:
                current2, hit = refract_line(
                    current, itf.surface, itf.n_in, itf.n_out, t_min=t_cursor
                )
        except RaySpaceError as exc:
            raise TraceError(i, exc) from exc
        optical_length += itf.n_in * float(np.linalg.norm(hit.point - prev_point))
        prev_point = hit.point
        hits.append(hit)
        current = current2
        t_hit = float((hit.point - current.q) @ current.u)
        t_cursor = t_hit + 1e-9 * max(1.0, abs(t_hit))
    return TraceResult(line_out=current, hits=tuple(hits), optical_length=optical_length)
