"""Every positive start flows to the same steady state.

Semi-implicit time stepping from a near-extinct population, a crowded one and
a bumpy one all end at the Newton solution.
"""

import numpy as np

from ratio_lab import ConstructionParams, default_grid, interior_triangle_point, march_to_steady, solve_construction

c = interior_triangle_point(2, 0.9)
p = ConstructionParams(2, 0.1, c.c1, c.c2)
grid = default_grid(2, p.profile, p.d)
newton = solve_construction(p, grid)
starts = {
    "near extinction": np.full(grid.size, 0.01),
    "crowded": np.full(grid.size, 250.0),
    "bumpy": 1.0 + 50.0 * np.cos(np.pi * grid.nodes) ** 2,
}
for name, u0 in starts.items():
    out = march_to_steady(2, p.d, p.profile, grid, u0, dt=1e-5, t_end=1e5, tol=1e-12, dt_max=1.0, growth=1.05)
    gap = np.max(np.abs(out.u - newton.u)) / np.max(newton.u)
    print(f"{name:>16}: {out.iterations:4d} steps, gap to Newton {gap:.2e}")
