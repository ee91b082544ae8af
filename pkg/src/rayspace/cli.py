"""Command-line front end.

Subcommands map one-to-one to library capabilities: trace, defect,
check-symplectic, wavefront, mirror, characteristic.  All outputs are
deterministic: CSV files plus a report.txt of `key: value` lines in the
--out directory, floats rendered with repr-faithful %.17g.  Exit codes:
0 success, 1 scene/usage error, 2 numerical failure (the failing k or
interface is named in the stderr message).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .errors import RaySpaceError
from .families import (
    _fmt,
    _grid_axes,
    is_rectangular,
    orthogonality_residual,
    reconstruct_wavefront,
    transform_family,
)
from .lines import chart_jacobian, symplectic_residual
from .optics import REFLECT, reflect_line, refract_line
from .scene import load_scene
from .variational import (
    characteristic_function,
    design_focusing_mirror,
    law_residual,
    stationarity_residual,
    verify_focus,
)


class _UsageError(Exception):
    pass


def _vec_str(v):
    return " ".join(_fmt(float(x)) for x in np.asarray(v).ravel())


def _write(out_dir, name, text):
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _report(out_dir, pairs):
    _write(out_dir, "report.txt", "".join(f"{k}: {v}\n" for k, v in pairs))


def _opt(scene, args, key, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return scene.options.get(key, default)


def _require_family(scene):
    if scene.family is None:
        raise _UsageError("this command needs a [family] section in the scene")
    return scene.family


def _require_option(scene, key):
    if key not in scene.options:
        raise _UsageError(f"this command needs option {key!r} in [options]")
    return scene.options[key]


def _grid_arg(scene, args, default=9):
    grid = _opt(scene, args, "grid", default)
    if grid < 3:
        raise _UsageError("grid must be at least 3")
    return grid


def _k0_arg(scene):
    if "k0" in scene.options:
        return scene.options["k0"]
    (lo1, hi1), (lo2, hi2) = scene.family.domain
    return (0.5 * (lo1 + hi1), 0.5 * (lo2 + hi2))


def _interface_label(itf):
    kind = type(itf.surface).__name__.lower()
    if itf.action == REFLECT:
        return f"{kind} reflect"
    return f"{kind} refract {_fmt(itf.n_in)} -> {_fmt(itf.n_out)}"


def cmd_trace(scene, args, out_dir):
    family = transform_family(_require_family(scene), scene.system)
    grid = _grid_arg(scene, args)
    tol = _opt(scene, args, "tol", 1e-9)
    k1, k2 = _grid_axes(family, grid, 0.0)
    rows = ["k1,k2,ux,uy,uz,qx,qy,qz\n"]
    worst = 0.0
    for a in k1:
        for b in k2:
            line = family.eval(a, b)
            u, q = line.u, line.q
            worst = max(worst, abs(float(np.linalg.norm(u)) - 1.0), abs(float(q @ u)))
            rows.append(
                f"{_fmt(a)},{_fmt(b)},{_fmt(u[0])},{_fmt(u[1])},{_fmt(u[2])},"
                f"{_fmt(q[0])},{_fmt(q[1])},{_fmt(q[2])}\n"
            )
    _write(out_dir, "trace.csv", "".join(rows))
    h1 = (k1[-1] - k1[0]) / (len(k1) - 1)
    h2 = (k2[-1] - k2[0]) / (len(k2) - 1)
    _report(
        out_dir,
        [
            ("command", "trace"),
            ("scene", args.scene),
            ("interfaces", len(scene.system.interfaces)),
            ("grid", grid),
            ("step", f"{_fmt(h1)} {_fmt(h2)}"),
            ("tolerance", _fmt(tol)),
            ("max_line_residual", _fmt(worst)),
        ],
    )
    return 0


def cmd_defect(scene, args, out_dir):
    family = _require_family(scene)
    grid = _grid_arg(scene, args)
    tol = _opt(scene, args, "tol")
    step = _opt(scene, args, "step")
    ok_before, grid_before = is_rectangular(family, grid=grid, tol=tol, h=step)
    after = transform_family(family, scene.system)
    ok_after, grid_after = is_rectangular(after, grid=grid, tol=tol, h=step)
    _write(out_dir, "defect_before.csv", grid_before.to_csv())
    _write(out_dir, "defect_after.csv", grid_after.to_csv())
    span = max(hi - lo for lo, hi in family.domain)
    tol_used = tol if tol is not None else 1e-6 * span
    _report(
        out_dir,
        [
            ("command", "defect"),
            ("scene", args.scene),
            ("grid", grid),
            ("step", _fmt(grid_before.step)),
            ("tolerance", _fmt(tol_used)),
            ("max_defect_before", _fmt(grid_before.max_abs)),
            ("rectangular_before", "true" if ok_before else "false"),
            ("max_defect_after", _fmt(grid_after.max_abs)),
            ("rectangular_after", "true" if ok_after else "false"),
            ("verdict", "RECTANGULAR" if ok_after else "NOT RECTANGULAR"),
        ],
    )
    return 0


def cmd_check_symplectic(scene, args, out_dir):
    family = _require_family(scene)
    if not scene.system.interfaces:
        raise _UsageError("check-symplectic needs at least one interface")
    tol = _opt(scene, args, "tol", 1e-6)
    step = _opt(scene, args, "step", 1e-5)
    seed = _opt(scene, args, "seed", 0)
    samples = 5
    rng = np.random.default_rng(seed)
    (lo1, hi1), (lo2, hi2) = family.domain
    ks = np.column_stack(
        [rng.uniform(lo1, hi1, samples), rng.uniform(lo2, hi2, samples)]
    )
    pairs = [
        ("command", "check-symplectic"),
        ("scene", args.scene),
        ("samples", samples),
        ("seed", seed),
        ("step", _fmt(step)),
        ("tolerance", _fmt(tol)),
    ]
    worst_overall = 0.0
    for i, itf in enumerate(scene.system.interfaces):
        if itf.action == REFLECT:
            scale = 1.0
            mapper = lambda l, s=itf.surface: reflect_line(l, s)[0]
        else:
            scale = itf.n_in / itf.n_out
            mapper = lambda l, s=itf: refract_line(l, s.surface, s.n_in, s.n_out)[0]
        worst = 0.0
        for k in ks:
            line = family.eval(k[0], k[1])
            for prev in scene.system.interfaces[:i]:
                if prev.action == REFLECT:
                    line, _ = reflect_line(line, prev.surface)
                else:
                    line, _ = refract_line(line, prev.surface, prev.n_in, prev.n_out)
            jac, _, _ = chart_jacobian(mapper, line, h=step)
            worst = max(worst, symplectic_residual(jac, scale=scale))
        worst_overall = max(worst_overall, worst)
        pairs.append((f"interface_{i}", _interface_label(itf)))
        pairs.append((f"interface_{i}_scale", _fmt(scale)))
        pairs.append((f"interface_{i}_residual", _fmt(worst)))
    ok = worst_overall < tol
    pairs.append(("max_residual", _fmt(worst_overall)))
    pairs.append(("symplectic", "true" if ok else "false"))
    _report(out_dir, pairs)
    if not ok:
        print(f"error: symplectic residual {worst_overall:.3e} exceeds {tol:g}", file=sys.stderr)
        return 2
    return 0


def cmd_wavefront(scene, args, out_dir):
    family = transform_family(_require_family(scene), scene.system)
    grid = _grid_arg(scene, args)
    path_tol = _opt(scene, args, "tol", 1e-7)
    step = _opt(scene, args, "step")
    c = scene.options.get("wavefront_c", 0.0)
    k0 = _k0_arg(scene)
    wf = reconstruct_wavefront(
        family, k0, c=c, grid=grid, h=step, path_tol=path_tol
    )
    residual = orthogonality_residual(family, wf, h=step)
    _write(out_dir, "wavefront.csv", wf.to_csv())
    i0, j0 = wf.base_index
    step_used = step if step is not None else family.default_step()
    _report(
        out_dir,
        [
            ("command", "wavefront"),
            ("scene", args.scene),
            ("grid", grid),
            ("step", _fmt(step_used)),
            ("tolerance", _fmt(path_tol)),
            ("integral_tolerance", _fmt(1e-9)),
            ("wavefront_c", _fmt(c)),
            ("k0_requested", _vec_str(k0)),
            ("k0_used", f"{_fmt(wf.k1[i0])} {_fmt(wf.k2[j0])}"),
            ("path_discrepancy", _fmt(wf.path_discrepancy)),
            ("orthogonality_residual", _fmt(residual)),
        ],
    )
    return 0


def cmd_mirror(scene, args, out_dir):
    family = transform_family(_require_family(scene), scene.system)
    grid = _grid_arg(scene, args)
    tol = _opt(scene, args, "tol", 1e-6)
    step = _opt(scene, args, "step")
    focus = _require_option(scene, "focus")
    epsilon = _require_option(scene, "epsilon")
    level = _require_option(scene, "level")
    c = scene.options.get("wavefront_c", 0.0)
    k0 = _k0_arg(scene)
    design = design_focusing_mirror(
        family, k0, focus, epsilon, level, grid=grid, wavefront_c=c, h=step
    )
    focused, miss = verify_focus(design, family, tol=tol)
    _write(out_dir, "mirror.csv", design.to_csv())
    step_used = step if step is not None else family.default_step()
    _report(
        out_dir,
        [
            ("command", "mirror"),
            ("scene", args.scene),
            ("grid", grid),
            ("step", _fmt(step_used)),
            ("tolerance", _fmt(tol)),
            ("root_tolerance", _fmt(1e-12)),
            ("focus", _vec_str(focus)),
            ("epsilon", epsilon),
            ("level", _fmt(level)),
            ("wavefront_c", _fmt(c)),
            ("max_miss", _fmt(miss)),
            ("focused", "true" if focused else "false"),
        ],
    )
    if not focused:
        print(f"error: focus missed by {miss:.3e} (tolerance {tol:g})", file=sys.stderr)
        return 2
    return 0


def cmd_characteristic(scene, args, out_dir):
    m1 = _require_option(scene, "m1")
    m2 = _require_option(scene, "m2")
    value, pc = characteristic_function(m1, m2, scene.system)
    station = stationarity_residual(pc)
    law = law_residual(pc)
    pairs = [
        ("command", "characteristic"),
        ("scene", args.scene),
        ("m1", _vec_str(m1)),
        ("m2", _vec_str(m2)),
        ("step", _fmt(1e-6)),
        ("tolerance", _fmt(1e-10)),
        ("law_tolerance", _fmt(1e-8)),
        ("optical_length", _fmt(value)),
        ("stationarity_residual", _fmt(station)),
        ("law_residual", _fmt(law)),
        ("hits", len(pc.coords)),
    ]
    for i, point in enumerate(pc.points()):
        pairs.append((f"hit_{i}", _vec_str(point)))
    _report(out_dir, pairs)
    return 0


_COMMANDS = {
    "trace": cmd_trace,
    "defect": cmd_defect,
    "check-symplectic": cmd_check_symplectic,
    "wavefront": cmd_wavefront,
    "mirror": cmd_mirror,
    "characteristic": cmd_characteristic,
}


def _parser():
    parser = argparse.ArgumentParser(
        prog="rayspace",
        description="Geometrical optics on the manifold of oriented lines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scene", required=True, help="scene file path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--grid", type=int, default=None, help="grid nodes per axis")
        p.add_argument("--tol", type=float, default=None, help="main tolerance")
        p.add_argument("--step", type=float, default=None, help="finite-difference step")
        p.add_argument("--seed", type=int, default=None, help="sampling seed")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        scene = load_scene(args.scene)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RaySpaceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    try:
        return _COMMANDS[args.command](scene, args, out_dir)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RaySpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
