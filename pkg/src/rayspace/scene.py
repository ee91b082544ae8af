"""Scene files: a flat, line-oriented key-value format describing surfaces,
an optical system, a ray family, and numerical options.

Grammar (strict; unknown keys and malformed values are fatal):

    # comment                      blank lines and '#' comments are skipped
    [surface <name>]               one section per surface, names unique
    kind = plane | sphere | quadric | sinusoid
    ... kind-specific keys ...
    incoming_sign = 1 | -1         optional, default 1

    [system]                       optional; omitted means empty system
    ambient_index = <float>        optional, default 1
    interface = <name> reflect
    interface = <name> refract <n_in> <n_out>

    [family]                       optional; required by family commands
    kind = point_source | collimated | two_skew_lines | normal_congruence
    ... kind-specific keys ...
    domain = <k1min> <k1max> <k2min> <k2max>

    [options]                      optional; all keys optional
    grid, tol, step, seed, m1, m2, focus, epsilon, level, wavefront_c, k0

Kind-specific surface keys: plane takes `normal` (3 floats) and optional
`offset`; sphere takes `center` and `radius`; quadric takes `matrix` (9
floats, row-major), `linear` (3 floats) and `constant`; sinusoid takes
`amplitude` and `wavevector` (2 floats).  Family keys: point_source takes
`apex` and `axis`; collimated takes `direction` and optional `origin`;
two_skew_lines takes `point1`, `dir1`, `point2`, `dir2`; normal_congruence
takes `surface` (a declared name), optional `axis` and `outward`, and a
required `domain`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMediaChainError, SceneSyntaxError, UnknownSurfaceError
from .families import (
    RayFamily,
    collimated,
    normal_congruence,
    point_source,
    two_skew_lines,
)
from .optics import REFLECT, REFRACT, Interface, OpticalSystem
from .surfaces import Plane, Quadric, Sinusoid, Sphere

_SECTION_RE = re.compile(r"^\[(surface\s+([A-Za-z_][A-Za-z0-9_-]*)|system|family|options)\]$")

_SURFACE_KEYS = {
    "plane": {"kind", "normal", "offset", "incoming_sign"},
    "sphere": {"kind", "center", "radius", "incoming_sign"},
    "quadric": {"kind", "matrix", "linear", "constant", "incoming_sign"},
    "sinusoid": {"kind", "amplitude", "wavevector", "incoming_sign"},
}
_SURFACE_REQUIRED = {
    "plane": {"normal"},
    "sphere": {"center", "radius"},
    "quadric": {"matrix", "linear", "constant"},
    "sinusoid": {"amplitude", "wavevector"},
}
_FAMILY_KEYS = {
    "point_source": {"kind", "apex", "axis", "domain"},
    "collimated": {"kind", "direction", "origin", "domain"},
    "two_skew_lines": {"kind", "point1", "dir1", "point2", "dir2", "domain"},
    "normal_congruence": {"kind", "surface", "axis", "outward", "domain"},
}
_FAMILY_REQUIRED = {
    "point_source": {"apex", "axis"},
    "collimated": {"direction"},
    "two_skew_lines": {"point1", "dir1", "point2", "dir2"},
    "normal_congruence": {"surface", "domain"},
}
_SYSTEM_KEYS = {"ambient_index", "interface"}
_OPTION_KEYS = {
    "grid",
    "tol",
    "step",
    "seed",
    "m1",
    "m2",
    "focus",
    "epsilon",
    "level",
    "wavefront_c",
    "k0",
}


@dataclass
class Scene:
    surfaces: dict
    system: OpticalSystem
    family: RayFamily | None
    family_kind: str | None
    options: dict = field(default_factory=dict)


def _floats(raw, count, line_no, col):
    parts = raw.split()
    if len(parts) != count:
        raise SceneSyntaxError(line_no, col, f"expected {count} numbers, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise SceneSyntaxError(line_no, col, f"bad number in {raw!r}") from None


def _float(raw, line_no, col):
    try:
        return float(raw)
    except ValueError:
        raise SceneSyntaxError(line_no, col, f"bad number {raw!r}") from None


def _int(raw, line_no, col):
    try:
        return int(raw)
    except ValueError:
        raise SceneSyntaxError(line_no, col, f"bad integer {raw!r}") from None


def _bool(raw, line_no, col):
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise SceneSyntaxError(line_no, col, f"expected true or false, got {raw!r}")


def _sign(raw, line_no, col):
    v = _int(raw, line_no, col)
    if v not in (1, -1):
        raise SceneSyntaxError(line_no, col, "incoming_sign must be 1 or -1")
    return v


class _Section:
    """One parsed section: header info plus key -> (value, line, col) entries."""

    def __init__(self, header, name, line_no):
        self.header = header
        self.name = name
        self.line_no = line_no
        self.entries = {}
        self.interfaces = []  # (value, line, col), [system] only

    def take(self, key, default=None):
        return self.entries.pop(key, (default, self.line_no, 1))

    def finish(self, allowed):
        for key, (_, line_no, col) in self.entries.items():
            if key not in allowed:
                raise SceneSyntaxError(line_no, col, f"unknown key {key!r}")


def _split_sections(text):
    sections = []
    current = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("["):
            m = _SECTION_RE.match(stripped)
            if not m:
                raise SceneSyntaxError(line_no, raw.index("[") + 1, f"bad section header {stripped!r}")
            header = "surface" if m.group(1).startswith("surface") else m.group(1)
            current = _Section(header, m.group(2), line_no)
            sections.append(current)
            continue
        if current is None:
            raise SceneSyntaxError(line_no, 1, "key before any section header")
        if "=" not in raw:
            raise SceneSyntaxError(line_no, 1, "expected key = value")
        key_part, value_part = raw.split("=", 1)
        key = key_part.strip()
        key_col = raw.index(key) + 1 if key else 1
        if not key:
            raise SceneSyntaxError(line_no, 1, "empty key")
        value = value_part.split("#", 1)[0].strip()
        value_col = raw.index("=") + 2
        if not value:
            raise SceneSyntaxError(line_no, value_col, f"empty value for {key!r}")
        if current.header == "system" and key == "interface":
            current.interfaces.append((value, line_no, value_col))
            continue
        if key in current.entries:
            raise SceneSyntaxError(line_no, key_col, f"duplicate key {key!r}")
        current.entries[key] = (value, line_no, value_col)
    return sections


def _build_surface(section):
    kind_raw, line_no, col = section.take("kind")
    if kind_raw is None:
        raise SceneSyntaxError(section.line_no, 1, f"surface {section.name!r} has no kind")
    if kind_raw not in _SURFACE_KEYS:
        raise SceneSyntaxError(line_no, col, f"unknown surface kind {kind_raw!r}")
    for req in _SURFACE_REQUIRED[kind_raw]:
        if req not in section.entries:
            raise SceneSyntaxError(
                section.line_no, 1, f"surface {section.name!r} missing key {req!r}"
            )
    sign_raw, sl, sc = section.take("incoming_sign")
    sign = 1 if sign_raw is None else _sign(sign_raw, sl, sc)
    if kind_raw == "plane":
        normal_raw, nl, nc = section.take("normal")
        offset_raw, ol, oc = section.take("offset")
        section.finish(_SURFACE_KEYS["plane"])
        offset = 0.0 if offset_raw is None else _float(offset_raw, ol, oc)
        return Plane(_floats(normal_raw, 3, nl, nc), offset, incoming_sign=sign)
    if kind_raw == "sphere":
        center_raw, cl, cc = section.take("center")
        radius_raw, rl, rc = section.take("radius")
        section.finish(_SURFACE_KEYS["sphere"])
        return Sphere(
            _floats(center_raw, 3, cl, cc), _float(radius_raw, rl, rc), incoming_sign=sign
        )
    if kind_raw == "quadric":
        matrix_raw, ml, mc = section.take("matrix")
        linear_raw, ll, lc = section.take("linear")
        const_raw, kl, kc = section.take("constant")
        section.finish(_SURFACE_KEYS["quadric"])
        return Quadric(
            _floats(matrix_raw, 9, ml, mc).reshape(3, 3),
            _floats(linear_raw, 3, ll, lc),
            _float(const_raw, kl, kc),
            incoming_sign=sign,
        )
    amp_raw, al, ac = section.take("amplitude")
    wave_raw, wl, wc = section.take("wavevector")
    section.finish(_SURFACE_KEYS["sinusoid"])
    return Sinusoid(_float(amp_raw, al, ac), _floats(wave_raw, 2, wl, wc), incoming_sign=sign)


def _build_system(section, surfaces):
    amb_raw, al, ac = section.take("ambient_index")
    section.finish(_SYSTEM_KEYS)
    ambient = 1.0 if amb_raw is None else _float(amb_raw, al, ac)
    interfaces = []
    current_index = ambient
    for value, line_no, col in section.interfaces:
        parts = value.split()
        if len(parts) < 2:
            raise SceneSyntaxError(line_no, col, "expected '<surface> reflect' or '<surface> refract <n_in> <n_out>'")
        name, action = parts[0], parts[1]
        if name not in surfaces:
            raise UnknownSurfaceError(name)
        if action == REFLECT:
            if len(parts) != 2:
                raise SceneSyntaxError(line_no, col, "reflect takes no indices")
            interfaces.append(Interface(surfaces[name], REFLECT, n_in=current_index))
        elif action == REFRACT:
            if len(parts) != 4:
                raise SceneSyntaxError(line_no, col, "refract takes n_in and n_out")
            n_in = _float(parts[2], line_no, col)
            n_out = _float(parts[3], line_no, col)
            interfaces.append(Interface(surfaces[name], REFRACT, n_in=n_in, n_out=n_out))
            current_index = n_out
        else:
            raise SceneSyntaxError(line_no, col, f"unknown action {action!r}")
    return OpticalSystem(tuple(interfaces), ambient_index=ambient)


def _parse_domain(raw, line_no, col):
    vals = _floats(raw, 4, line_no, col)
    if not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise SceneSyntaxError(line_no, col, "domain bounds must be increasing")
    return ((float(vals[0]), float(vals[1])), (float(vals[2]), float(vals[3])))


def _build_family(section, surfaces):
    kind_raw, line_no, col = section.take("kind")
    if kind_raw is None:
        raise SceneSyntaxError(section.line_no, 1, "family has no kind")
    if kind_raw not in _FAMILY_KEYS:
        raise SceneSyntaxError(line_no, col, f"unknown family kind {kind_raw!r}")
    for req in _FAMILY_REQUIRED[kind_raw]:
        if req not in section.entries:
            raise SceneSyntaxError(section.line_no, 1, f"family missing key {req!r}")
    domain_raw, dl, dc = section.take("domain")
    domain = None if domain_raw is None else _parse_domain(domain_raw, dl, dc)
    if kind_raw == "point_source":
        apex_raw, al, ac = section.take("apex")
        axis_raw, xl, xc = section.take("axis")
        section.finish(_FAMILY_KEYS[kind_raw])
        kwargs = {} if domain is None else {"domain": domain}
        return point_source(_floats(apex_raw, 3, al, ac), _floats(axis_raw, 3, xl, xc), **kwargs), kind_raw
    if kind_raw == "collimated":
        dir_raw, dl2, dc2 = section.take("direction")
        origin_raw, ol, oc = section.take("origin")
        section.finish(_FAMILY_KEYS[kind_raw])
        kwargs = {} if domain is None else {"domain": domain}
        if origin_raw is not None:
            kwargs["origin"] = _floats(origin_raw, 3, ol, oc)
        return collimated(_floats(dir_raw, 3, dl2, dc2), **kwargs), kind_raw
    if kind_raw == "two_skew_lines":
        p1_raw, p1l, p1c = section.take("point1")
        d1_raw, d1l, d1c = section.take("dir1")
        p2_raw, p2l, p2c = section.take("point2")
        d2_raw, d2l, d2c = section.take("dir2")
        section.finish(_FAMILY_KEYS[kind_raw])
        kwargs = {} if domain is None else {"domain": domain}
        return (
            two_skew_lines(
                _floats(p1_raw, 3, p1l, p1c),
                _floats(d1_raw, 3, d1l, d1c),
                _floats(p2_raw, 3, p2l, p2c),
                _floats(d2_raw, 3, d2l, d2c),
                **kwargs,
            ),
            kind_raw,
        )
    surf_raw, sl, sc = section.take("surface")
    axis_raw, xl, xc = section.take("axis")
    outward_raw, ol, oc = section.take("outward")
    section.finish(_FAMILY_KEYS[kind_raw])
    if surf_raw not in surfaces:
        raise UnknownSurfaceError(surf_raw)
    kwargs = {}
    if axis_raw is not None:
        kwargs["axis"] = _floats(axis_raw, 3, xl, xc)
    if outward_raw is not None:
        kwargs["outward"] = _bool(outward_raw, ol, oc)
    return normal_congruence(surfaces[surf_raw], domain, **kwargs), kind_raw


def _build_options(section):
    opts = {}
    for key in list(section.entries):
        raw, line_no, col = section.entries.pop(key)
        if key not in _OPTION_KEYS:
            raise SceneSyntaxError(line_no, col, f"unknown key {key!r}")
        if key == "grid":
            value = _int(raw, line_no, col)
            if value < 3:
                raise SceneSyntaxError(line_no, col, "grid must be at least 3")
        elif key == "seed":
            value = _int(raw, line_no, col)
        elif key == "epsilon":
            value = _int(raw, line_no, col)
            if value not in (1, -1):
                raise SceneSyntaxError(line_no, col, "epsilon must be 1 or -1")
        elif key in ("tol", "level", "wavefront_c"):
            value = _float(raw, line_no, col)
        elif key == "step":
            value = None if raw == "auto" else _float(raw, line_no, col)
        elif key in ("m1", "m2", "focus"):
            value = _floats(raw, 3, line_no, col)
        else:  # k0
            value = tuple(_floats(raw, 2, line_no, col))
        opts[key] = value
    return opts


def parse_scene(text: str) -> Scene:
    """Parse scene text; strict about sections, keys and value shapes."""
    sections = _split_sections(text)
    surfaces = {}
    system_section = None
    family_section = None
    options_section = None
    for section in sections:
        if section.header == "surface":
            if section.name in surfaces:
                raise SceneSyntaxError(
                    section.line_no, 1, f"duplicate surface {section.name!r}"
                )
            surfaces[section.name] = _build_surface(section)
        elif section.header == "system":
            if system_section is not None:
                raise SceneSyntaxError(section.line_no, 1, "duplicate [system] section")
            system_section = section
        elif section.header == "family":
            if family_section is not None:
                raise SceneSyntaxError(section.line_no, 1, "duplicate [family] section")
            family_section = section
        else:
            if options_section is not None:
                raise SceneSyntaxError(section.line_no, 1, "duplicate [options] section")
            options_section = section

    if system_section is not None:
        system = _build_system(system_section, surfaces)
    else:
        system = OpticalSystem((), ambient_index=1.0)
    family = family_kind = None
    if family_section is not None:
        family, family_kind = _build_family(family_section, surfaces)
    options = _build_options(options_section) if options_section is not None else {}
    return Scene(surfaces, system, family, family_kind, options)


def load_scene(path) -> Scene:
    with open(path, encoding="utf-8") as handle:
        return parse_scene(handle.read())
