"""In two dimensions the ratio grows like |log eps| without bound.

With d = c1 held fixed, every ratio sits above the explicit lower bound
c2 (1 - 1/e + (n/e) |log eps|) and the points fall on a straight line in
|log eps|.
"""

import math

from ratio_lab import ConstructionParams, interior_triangle_point
from ratio_lab.verification import check_scaling, scaling_fit

n = 2
c = interior_triangle_point(n, 0.9)
p = ConstructionParams(n, 0.2, c.c1, c.c2)
eps_list = [0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001]
fit = scaling_fit(n, eps_list, p, threads=4)

print(f"{'eps':>7} {'|log eps|':>9} {'ratio':>9} {'bound':>8}")
for e, (x, y), lb in zip(fit.eps, fit.points, fit.lower_bounds):
    print(f"{e:7.3f} {x:9.3f} {y:9.4f} {lb:8.4f}")
print(f"fitted slope {fit.slope:.4f} (bound slope {c.c2 * n / math.e:.4f}), R^2 = {fit.r_squared:.6f}")
print(check_scaling(fit, n, c.c2).summary())
