"""Implicit surfaces used as mirrors and refracting interfaces.

Each surface kind stores the data of an exact level function f and provides
its analytic gradient; normals are never finite-differenced.  The orientation
flag `incoming_sign` declares on which side of the surface incident light
lives: the oriented normal points into the region where sign(f) equals
incoming_sign.

Supported kinds: Plane (n . x = d), Sphere, Quadric (x^T A x + b . x + c = 0)
and Sinusoid (the graph z = amplitude * sin(wavevector . (x, y))).

Ray intersection is closed-form for Plane/Sphere/Quadric and uses dense
bracketing plus a bisection-safeguarded Newton refinement for Sinusoid
(tolerance 1e-12 in the ray parameter).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGradientError,
    NoIntersectionError,
    OffSurfaceError,
    TangentialError,
)
from .lines import OrientedLine, _as_vec3

TRANSVERSE_TOL = 1e-6
DEFAULT_T_MAX = 1e6
_GRAD_MIN = 1e-10
_ROOT_TOL = 1e-12
# span scanned for roots when a ray runs parallel to a sinusoid's mean plane
_FLAT_SCAN_SPAN = 1e4


def _freeze(obj, name, value):
    value = np.asarray(value, dtype=float).copy()
    value.flags.writeable = False
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class Plane:
    normal: np.ndarray
    offset: float = 0.0
    incoming_sign: int = 1

    def __post_init__(self):
        n = _as_vec3(self.normal)
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            raise ValueError("plane normal must be nonzero")
        _freeze(self, "normal", n / norm)
        object.__setattr__(self, "offset", float(self.offset))

    def value(self, p) -> float:
        return float(_as_vec3(p) @ self.normal - self.offset)

    def gradient(self, p) -> np.ndarray:
        return self.normal.copy()


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float
    incoming_sign: int = 1

    def __post_init__(self):
        _freeze(self, "center", _as_vec3(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    def value(self, p) -> float:
        return float(np.linalg.norm(_as_vec3(p) - self.center) - self.radius)

    def gradient(self, p) -> np.ndarray:
        r = _as_vec3(p) - self.center
        n = np.linalg.norm(r)
        if n == 0.0:
            return np.zeros(3)
        return r / n


@dataclass(frozen=True)
class Quadric:
    matrix: np.ndarray
    linear: np.ndarray
    constant: float
    incoming_sign: int = 1

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("quadric matrix must be 3x3")
        _freeze(self, "matrix", 0.5 * (m + m.T))
        _freeze(self, "linear", _as_vec3(self.linear))
        object.__setattr__(self, "constant", float(self.constant))

    def value(self, p) -> float:
        p = _as_vec3(p)
        return float(p @ self.matrix @ p + self.linear @ p + self.constant)

    def gradient(self, p) -> np.ndarray:
        return 2.0 * (self.matrix @ _as_vec3(p)) + self.linear


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float
    wavevector: np.ndarray
    incoming_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "amplitude", float(self.amplitude))
        w = np.asarray(self.wavevector, dtype=float)
        if w.shape != (2,):
            raise ValueError("wavevector must be a 2-vector")
        _freeze(self, "wavevector", w)

    def value(self, p) -> float:
        p = _as_vec3(p)
        return float(p[2] - self.amplitude * np.sin(self.wavevector @ p[:2]))

    def gradient(self, p) -> np.ndarray:
        p = _as_vec3(p)
        c = self.amplitude * np.cos(self.wavevector @ p[:2])
        return np.array([-c * self.wavevector[0], -c * self.wavevector[1], 1.0])


SURFACE_KINDS = (Plane, Sphere, Quadric, Sinusoid)


@dataclass(frozen=True)
class Intersection:
    """Ray/surface hit: point, ray parameter, oriented unit normal, u . n.

    The normal points toward the incoming side at the hit, so u . n < 0.
    """

    point: np.ndarray
    t: float
    normal: np.ndarray
    cos_incidence: float


def _unit_gradient(surface, p) -> np.ndarray:
    g = surface.gradient(p)
    n = np.linalg.norm(g)
    if n < _GRAD_MIN:
        raise DegenerateGradientError("level-function gradient vanishes at the point")
    return g / n


def normal_at(surface, point) -> np.ndarray:
    """Oriented unit normal at a point already on the surface.

    Raises OffSurfaceError if f(point) is not ~0, DegenerateGradientError if
    the gradient vanishes there.
    """
    p = _as_vec3(point)
    scale = max(1.0, float(np.linalg.norm(p)))
    if abs(surface.value(p)) > 1e-8 * scale:
        raise OffSurfaceError("point does not lie on the surface")
    return float(surface.incoming_sign) * _unit_gradient(surface, p)


def _plane_roots(surface: Plane, line: OrientedLine):
    denom = line.u @ surface.normal
    if abs(denom) < 1e-15:
        return []
    return [(surface.offset - line.q @ surface.normal) / denom]


def _sphere_roots(surface: Sphere, line: OrientedLine):
    m = line.q - surface.center
    b = line.u @ m
    disc = b * b - (m @ m - surface.radius**2)
    if disc < 0.0:
        return []
    s = np.sqrt(disc)
    return [-b - s, -b + s]


def _quadric_roots(surface: Quadric, line: OrientedLine):
    au = surface.matrix @ line.u
    alpha = line.u @ au
    beta = 2.0 * (line.q @ au) + surface.linear @ line.u
    gamma = surface.value(line.q)
    scale = 1.0 + abs(beta) + abs(gamma)
    if abs(alpha) < 1e-14 * scale:
        if abs(beta) < 1e-15 * scale:
            return []
        return [-gamma / beta]
    disc = beta * beta - 4.0 * alpha * gamma
    if disc < 0.0:
        return []
    s = np.sqrt(disc)
    # numerically stable pair of quadratic roots
    qq = -0.5 * (beta + np.copysign(s, beta))
    roots = [qq / alpha]
    if qq != 0.0:
        roots.append(gamma / qq)
    else:
        roots.append(0.0)
    return roots


def _newton_bisect(g, dg, lo, hi, glo, ghi, tol=_ROOT_TOL):
    """Root of g inside a sign-changing bracket; Newton with bisection fallback."""
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    t = 0.5 * (lo + hi)
    for _ in range(200):
        gt = g(t)
        if gt == 0.0:
            return t
        if (gt > 0.0) == (glo > 0.0):
            lo, glo = t, gt
        else:
            hi, ghi = t, gt
        d = dg(t)
        t_new = t - gt / d if d != 0.0 else 0.5 * (lo + hi)
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= tol:
            return t_new
        t = t_new
    return t


def _sinusoid_first_root(surface: Sinusoid, line: OrientedLine, t_min, t_max):
    amp = surface.amplitude
    w = surface.wavevector
    uz = float(line.u[2])
    qz = float(line.q[2])
    om = float(w @ line.u[:2])
    phi0 = float(w @ line.q[:2])

    def g(t):
        return qz + t * uz - amp * np.sin(phi0 + om * t)

    def dg(t):
        return uz - amp * om * np.cos(phi0 + om * t)

    # roots can only live where the linear part stays inside the amplitude band
    band = abs(amp) + 1e-12
    if abs(uz) > 1e-12:
        lo = (-band - qz) / uz
        hi = (band - qz) / uz
        if lo > hi:
            lo, hi = hi, lo
        window_lo = max(t_min, lo)
        window_hi = min(t_max, hi)
    else:
        if abs(qz) > band:
            return None
        window_lo = t_min
        window_hi = min(t_max, t_min + _FLAT_SCAN_SPAN)
    if window_hi <= window_lo:
        return None

    step = (np.pi / 4.0) / max(abs(om), 1e-9)
    step = min(step, max(1.0, abs(amp)))
    count = int(np.ceil((window_hi - window_lo) / step)) + 1
    if count > 10_000_000:
        raise NoIntersectionError("sinusoid root search budget exceeded")
    ts = np.linspace(window_lo, window_hi, count + 1)
    gs = qz + ts * uz - amp * np.sin(phi0 + om * ts)
    zero_hits = np.nonzero(gs == 0.0)[0]
    changes = np.nonzero(np.sign(gs[:-1]) * np.sign(gs[1:]) < 0.0)[0]
    candidates = sorted(
        [(ts[i], "zero") for i in zero_hits] + [(ts[i], i) for i in changes]
    )
    for t_at, tag in candidates:
        if tag == "zero":
            root = t_at
        else:
            i = tag
            root = _newton_bisect(g, dg, ts[i], ts[i + 1], gs[i], gs[i + 1])
        if root > t_min:
            return root
    return None


def intersect(line: OrientedLine, surface, t_min: float = 0.0, t_max: float = DEFAULT_T_MAX) -> Intersection:
    """First intersection of the ray with the surface at parameter t > t_min.

    Raises NoIntersectionError when the ray misses within [t_min, t_max] and
    TangentialError when it meets the surface at near-tangent incidence
    (|u . n| < 1e-6).  The returned normal is oriented against the ray.
    """
    if isinstance(surface, Plane):
        roots = _plane_roots(surface, line)
    elif isinstance(surface, Sphere):
        roots = _sphere_roots(surface, line)
    elif isinstance(surface, Quadric):
        roots = _quadric_roots(surface, line)
    elif isinstance(surface, Sinusoid):
        root = _sinusoid_first_root(surface, line, t_min, t_max)
        roots = [] if root is None else [root]
    else:
        raise TypeError(f"unsupported surface type {type(surface).__name__}")

    hits = sorted(t for t in roots if t_min < t <= t_max)
    if not hits:
        raise NoIntersectionError(
            f"ray misses {type(surface).__name__} in ({t_min:g}, {t_max:g}]"
        )
    t = float(hits[0])
    p = line.point_at(t)
    n = float(surface.incoming_sign) * _unit_gradient(surface, p)
    cos = float(line.u @ n)
    if cos > 0.0:
        n = -n
        cos = -cos
    if abs(cos) < TRANSVERSE_TOL:
        raise TangentialError("ray meets the surface nearly tangentially")
    return Intersection(point=p, t=t, normal=n, cos_incidence=cos)
