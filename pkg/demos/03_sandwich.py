"""Explicit barriers squeeze the numerical solution in two dimensions.

The super-solution is the constant eps^-n. The sub-solution is a Gaussian-like
cap inside eps and a c2/(e r^n) tail outside. (c1, c2) must lie in the
admissible triangle; we take a point inside it and check the ordering.
"""

import numpy as np

from ratio_lab import (
    ConstructionParams,
    interior_triangle_point,
    solve_construction,
    sub_solution_value,
    super_solution_value,
    triangle_vertices,
)
from ratio_lab.verification import check_sub_inequality

n, eps = 2, 0.1
print("triangle vertices:", [tuple(round(x, 5) for x in v) for v in triangle_vertices(n)])
c = interior_triangle_point(n, 0.9)
p = ConstructionParams(n, eps, c.c1, c.c2)
print(f"interior point c1 = {c.c1:.5f}, c2 = {c.c2:.5f}, d = {p.d:.5f}")
print(check_sub_inequality(p).summary())

sol = solve_construction(p)
lower = sub_solution_value(p, sol.r)
upper = super_solution_value(p)
for r in (0.0, 0.05, 0.1, 0.2, 0.5, 1.0):
    i = int(np.argmin(np.abs(sol.r - r)))
    print(f"r = {sol.r[i]:.3f}:  sub {lower[i]:9.4f} <= u {sol.u[i]:9.4f} <= super {upper:.1f}")

bad = ConstructionParams(n, eps, 0.4, 0.9)
print("outside the triangle:", check_sub_inequality(bad).summary())
