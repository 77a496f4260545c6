"""On an interval the ratio is capped by 3.

Concentrate all resources on [0, eps] at height 1/eps and diffuse at rate
sqrt(eps). The ratio climbs towards 3 and the centre value follows
u(0) ~ 1.5 / sqrt(eps).
"""

import math

from ratio_lab import ConstructionParams, ratio, solve_construction

print(f"{'eps':>8} {'d':>8} {'ratio':>10} {'sqrt(eps) u(0)':>15}")
for k in range(1, 7):
    eps = 10.0**-k
    p = ConstructionParams(1, eps)
    sol = solve_construction(p)
    print(f"{eps:8.0e} {p.d:8.4f} {ratio(sol):10.6f} {math.sqrt(eps) * sol.u[0]:15.6f}")
