"""Two-point characteristic function demos.

First the textbook case: endpoints (0,0,1) and (1,0,1) above the mirror
z = 0 give V = sqrt(5) with the bounce at (0.5, 0, 0).  Then a random
two-sphere system: trace a ray through it, perturb the interior points,
and let the stationarity solver recover the physical path.
"""

import numpy as np

import rayspace as rs


def plane_mirror_case():
    mirror = rs.OpticalSystem((rs.Interface(rs.Plane([0, 0, 1], 0.0), rs.REFLECT, 1.0),))
    v, pc = rs.characteristic_function([0, 0, 1], [1, 0, 1], mirror)
    bounce = pc.polyline()[1]
    print(f"plane mirror: V = {v:.12f} (sqrt(5) = {np.sqrt(5):.12f}), "
          f"bounce at {np.round(bounce, 9)}")


def recover_traced_path(seed=4):
    rng = np.random.default_rng(seed)
    shells = []
    for i, radius in enumerate((3.0, 5.0)):
        centre = rng.uniform(-0.3, 0.3, 3)
        sphere = rs.Sphere(centre, radius, incoming_sign=1)
        if i == 0:
            shells.append(rs.Interface(sphere, rs.REFRACT, 1.0, 1.5))
        else:
            shells.append(rs.Interface(sphere, rs.REFLECT, 1.5))
    sys = rs.OpticalSystem(tuple(shells))

    start = rng.uniform(-0.2, 0.2, 3)
    line = rs.line_through(start, rng.normal(size=3))
    trace = rs.propagate_system(line, sys, start=start)
    m2 = trace.hits[-1].point + trace.line_out.u
    pc = rs.path_through(start, m2, sys, [h.point for h in trace.hits])
    print(f"traced path: stationarity residual {rs.stationarity_residual(pc):.2e}")

    noisy = pc.with_coords(pc.flat() + rng.uniform(-0.01, 0.01, pc.flat().size))
    v, pc_star = rs.characteristic_function(start, m2, sys, initial=noisy)
    v_trace = trace.optical_length + sys.exit_index * 1.0
    print(f"solver from noisy seed: V = {v:.12f}, traced length {v_trace:.12f}, "
          f"law residual {rs.law_residual(pc_star):.2e}")


if __name__ == "__main__":
    plane_mirror_case()
    recover_traced_path()
