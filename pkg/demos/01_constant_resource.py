"""A uniform resource is the one case where the population matches it exactly.

With m constant the steady state is u = m and the ratio is 1. Any
heterogeneity pushes the ratio above 1.
"""

import numpy as np

from ratio_lab import ResourceProfile, ratio, solve_steady

for m0 in (0.5, 1.0, 7.0):
    m = ResourceProfile.constant(m0)
    sol = solve_steady(2, d=0.3, m=m)
    print(f"m = {m0:>4}: max|u - m| = {np.max(np.abs(sol.u - m0)):.1e}, ratio = {ratio(sol, m):.15f}")

# two-level resource: rich core, poor shell
m = ResourceProfile((0.0, 0.4, 1.0), (3.0, 0.5))
for d in (0.01, 0.1, 1.0, 10.0):
    sol = solve_steady(2, d, m)
    print(f"two-level m, d = {d:>5}: ratio = {ratio(sol, m):.6f}")
