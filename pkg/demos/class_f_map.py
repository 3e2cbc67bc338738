"""Class F membership, potentials and a cost-independent map in the plane.

Run with ``python demos/class_f_map.py``.
"""

import numpy as np

from weakot import make_power_cost
from weakot.classf import (Profile, build_potential, class_f_test,
                           diagonal_quadratic, radial, verify_map_optimality)

pts = np.random.default_rng(1).uniform(-2, 2, (100, 2))

# Radial functions have gradients along x, which the Hessian maps to itself.
for f in (radial("cosh", 2), diagonal_quadratic([1.0, 2.0])):
    rep = class_f_test(f, pts)
    print(f"{f.name:28s} in class: {rep.in_class!s:5s} "
          f"symmetry residual {rep.max_symmetry_residual:.3g}")

# A member yields convex potentials for any increasing profile G.
f = radial("square", 2)
phi = build_potential(f, Profile.power(3))
x = np.array([[1.0, 0.5], [-0.3, 1.2]])
print("\npotential of |x|^2 with G(s) = s^3 at", x.tolist())
print("  numeric  :", phi.value(x))
# grad f = 2x has length u = 2|x|, so the field u^2 grad f = 8|x|^2 x integrates to 2|x|^4
print("  2|x|^4   :", 2 * np.sum(x ** 2, axis=1) ** 2)

# The contraction x -> x/2 is optimal for several costs at once.
samples = np.random.default_rng(2).uniform(-1, 1, (40, 2))
rep = verify_map_optimality(lambda z: 0.5 * z,
                            [make_power_cost(2), make_power_cost(4)],
                            samples, (-1.0, 1.0), 0.02)
print("\nmap x -> x/2 on [-1, 1]^2, grid spacing 0.02")
for name, dev in rep.deviations.items():
    print(f"  {name}: worst deviation {dev:.3g}")
print(f"  samples used {rep.samples_used}, excluded near the edge {rep.samples_excluded}")
