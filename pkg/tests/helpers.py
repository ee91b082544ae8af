"""Shared harness code: randomized-but-seeded geometry generators and the
closed-form oracles used across the test modules."""

from __future__ import annotations

import numpy as np

import rayspace as rs
from rayspace.errors import (
    GrazingError,
    NoIntersectionError,
    TangentialError,
    TotalInternalReflectionError,
)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def random_unit(rng):
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > 1e-3:
            return v / n


def random_rotation(rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_surface(rng, kind):
    """A bounded-curvature surface of the requested kind near the origin."""
    if kind == "plane":
        return rs.Plane(random_unit(rng), rng.uniform(-1.0, 1.0))
    if kind == "sphere":
        return rs.Sphere(rng.uniform(-0.5, 0.5, 3), rng.uniform(1.0, 3.0))
    if kind == "quadric":
        # random ellipsoid (x-c)^T A (x-c) = 1
        rot = random_rotation(rng)
        axes = rng.uniform(0.8, 2.5, 3)
        mat = rot @ np.diag(1.0 / axes**2) @ rot.T
        center = rng.uniform(-0.4, 0.4, 3)
        linear = -2.0 * mat @ center
        constant = float(center @ mat @ center) - 1.0
        return rs.Quadric(mat, linear, constant)
    if kind == "sinusoid":
        return rs.Sinusoid(rng.uniform(0.05, 0.25), rng.uniform(-1.2, 1.2, 2))
    raise ValueError(kind)


def aimed_line(rng, surface, max_tries=200):
    """A random line whose first hit on `surface` is cleanly transversal."""
    for _ in range(max_tries):
        if isinstance(surface, rs.Sinusoid):
            start = np.array(
                [rng.uniform(-2, 2), rng.uniform(-2, 2), abs(surface.amplitude) + rng.uniform(1, 3)]
            )
            direction = unit([rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), -1.0])
        else:
            start = 6.0 * random_unit(rng)
            target = rng.uniform(-0.5, 0.5, 3)
            direction = unit(target - start)
        line = rs.line_through(start, direction)
        t0 = float((start - line.q) @ line.u)
        try:
            hit = rs.intersect(line, surface, t_min=t0)
        except (NoIntersectionError, TangentialError):
            continue
        if abs(hit.cos_incidence) > 0.1:
            return line, hit, t0
    raise RuntimeError(f"could not aim at {type(surface).__name__}")


def make_device():
    """The four-interface test device: sphere refraction into glass, a
    sinusoidal mirror, a paraboloidal bowl mirror, plane exit into water."""
    lens = rs.Sphere(center=[0, 0, 0], radius=2.0)
    wavy = rs.Sinusoid(amplitude=0.15, wavevector=[0.9, 0.7])
    bowl = rs.Quadric(
        matrix=np.diag([0.125, 0.125, 0.0]),
        linear=[0, 0, 1],
        constant=-4.0,
        incoming_sign=-1,
    )
    exit_window = rs.Plane(normal=[0, 0, 1], offset=-1.0)
    return rs.OpticalSystem(
        (
            rs.Interface(lens, rs.REFRACT, n_in=1.0, n_out=1.5),
            rs.Interface(wavy, rs.REFLECT, n_in=1.5),
            rs.Interface(bowl, rs.REFLECT, n_in=1.5),
            rs.Interface(exit_window, rs.REFRACT, n_in=1.5, n_out=1.33),
        )
    )


def device_source(domain=((-0.12, 0.12), (-0.12, 0.12))):
    return rs.point_source([0, 0, 5], [0, 0, -1], domain=domain)


def nested_sphere_system(rng, n_interfaces):
    """Concentric-ish sphere shells with random reflect/refract actions.

    Every line from near the origin crosses each shell transversally, and
    refractions always go into a denser medium, so traces never fail.
    """
    interfaces = []
    n_current = 1.0
    for i in range(n_interfaces):
        shell = rs.Sphere(rng.uniform(-0.3, 0.3, 3), 3.0 + 2.0 * i)
        if rng.random() < 0.5:
            interfaces.append(rs.Interface(shell, rs.REFLECT, n_in=n_current))
        else:
            n_next = n_current + rng.uniform(0.2, 0.8)
            interfaces.append(
                rs.Interface(shell, rs.REFRACT, n_in=n_current, n_out=n_next)
            )
            n_current = n_next
    return rs.OpticalSystem(tuple(interfaces))


def ellipsoid_oracle_point(line, focal_sum, focus):
    """Intersection of a ray from the origin with the spheroid
    |X| + |X - focus| = focal_sum, in closed form (apex at the origin)."""
    u = line.u
    t = (focal_sum**2 - float(focus @ focus)) / (2.0 * (focal_sum - float(u @ focus)))
    return line.q + t * u


def paraboloid_oracle_point(line, level, focus):
    """Intersection of a collimated ray with the paraboloid
    (signed offset along u from the foot plane) + |X - focus| = level."""
    w = line.q - focus
    t = (level**2 - float(w @ w)) / (2.0 * (level + float(line.u @ w)))
    return line.point_at(t)


def snell_sine(n1, n2, sin_in):
    return n1 * sin_in / n2


__all__ = [
    "unit",
    "random_unit",
    "random_rotation",
    "random_surface",
    "aimed_line",
    "make_device",
    "device_source",
    "nested_sphere_system",
    "ellipsoid_oracle_point",
    "paraboloid_oracle_point",
    "snell_sine",
    "GrazingError",
    "TotalInternalReflectionError",
]
